"""Per-figure experiment presets: parameter grids for the reported curves.

Each preset maps to a SweepSpec (or a special routine for ROC / baseline
runs). Device counts are documented choices where the figure captions leave
them open.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .config import SystemConfig
from .harness import SweepSpec

SNR_GRID = (0.0, 5.0, 10.0, 15.0, 20.0, 25.0)
ALPHA_GRID = (0.25, 0.5, 0.75, 1.0)
N_GRID = (64, 128, 256, 512)
ALL_SCHEMES = (("semi_orthogonal", "ofsk"), ("semi_orthogonal", "mfsk"),
               ("fully_orthogonal", "ofsk"), ("fully_orthogonal", "mfsk"))


@dataclass(frozen=True)
class Preset:
    name: str
    kind: str                      # "sweep" | "roc" | "baseline"
    description: str
    spec_kwargs: dict = field(default_factory=dict)
    base_kwargs: dict = field(default_factory=dict)
    roc_snrs: tuple[float, ...] = ()


def _base(**kw) -> SystemConfig:
    defaults = dict(n_subcarriers=64, cp_len=8, num_bds=1, scheme="fo",
                    modulation="ofsk", alpha=(0.25,), snr_db_grid=SNR_GRID,
                    num_trials=10_000, seed=1)
    defaults.update(kw)
    return SystemConfig(**defaults)


PRESETS: dict[str, Preset] = {}


def _register(name, kind, description, base_kwargs=None, spec_kwargs=None, roc_snrs=()):
    PRESETS[name] = Preset(name=name, kind=kind, description=description,
                           base_kwargs=base_kwargs or {}, spec_kwargs=spec_kwargs or {},
                           roc_snrs=roc_snrs)


_register(
    "fig6", "sweep",
    "Missed detection vs SNR, fully-orthogonal OFSK, one device, four reflection levels",
    base_kwargs=dict(num_bds=1, scheme="fo", modulation="ofsk"),
    spec_kwargs=dict(metrics=("pmd", "pfa", "pe"), alpha=ALPHA_GRID),
)
_register(
    "fig7", "sweep",
    "Missed detection vs SNR for DFT sizes 64..512, fully-orthogonal OFSK",
    base_kwargs=dict(num_bds=1, scheme="fo", modulation="ofsk"),
    spec_kwargs=dict(metrics=("pmd", "pfa", "pe"), alpha=(0.25,), n_subcarriers=N_GRID),
)
_register(
    "fig8", "roc",
    "Detector ROC at low SNR, fully-orthogonal OFSK, alpha 0.25",
    base_kwargs=dict(num_bds=6, scheme="fo", modulation="ofsk",
                     alpha=tuple([0.25] * 6)),
    roc_snrs=(0.0, 5.0, 10.0),
)
_register(
    "fig9", "sweep",
    "Semi-orthogonal OFSK missed detection with and without cancellation",
    base_kwargs=dict(num_bds=2, scheme="so", modulation="ofsk",
                     alpha=(0.25, 0.25)),
    spec_kwargs=dict(metrics=("pmd", "pfa", "pe"), alpha=(0.25, 1.0),
                     sic=(False, True)),
)
_register(
    "fig10", "sweep",
    "Fully-orthogonal MFSK device BER vs SNR, four reflection levels",
    base_kwargs=dict(num_bds=2, scheme="fo", modulation="mfsk",
                     alpha=(0.25, 0.25)),
    spec_kwargs=dict(metrics=("bd_ber",), alpha=ALPHA_GRID),
)
_register(
    "fig11", "sweep",
    "Fully-orthogonal MFSK device BER vs SNR for DFT sizes 64..512",
    base_kwargs=dict(num_bds=2, scheme="fo", modulation="mfsk",
                     alpha=(0.25, 0.25)),
    spec_kwargs=dict(metrics=("bd_ber",), alpha=(0.25,), n_subcarriers=N_GRID),
)
_register(
    "fig12", "sweep",
    "Semi-orthogonal MFSK device BER with and without cancellation",
    base_kwargs=dict(num_bds=2, scheme="so", modulation="mfsk",
                     alpha=(0.25, 0.25)),
    spec_kwargs=dict(metrics=("bd_ber",), alpha=(0.25, 1.0), sic=(False, True)),
)
_register(
    "fig13", "sweep",
    "Fully-orthogonal MFSK BER under carrier offsets, with and without compensation",
    base_kwargs=dict(num_bds=2, scheme="fo", modulation="mfsk",
                     alpha=(0.25, 0.25)),
    spec_kwargs=dict(metrics=("bd_ber",), alpha=(0.25,),
                     cfo=(0.0, 0.01, 0.03, 0.05), cfo_compensate=(False, True),
                     analytic=False),
)
_register(
    "fig14", "sweep",
    "Fully-orthogonal MFSK BER at offset 0.05 across reflection levels",
    base_kwargs=dict(num_bds=2, scheme="fo", modulation="mfsk",
                     alpha=(0.25, 0.25)),
    spec_kwargs=dict(metrics=("bd_ber",), alpha=ALPHA_GRID,
                     cfo=(0.0, 0.05), cfo_compensate=(False, True),
                     analytic=False),
)
_register(
    "fig15", "baseline",
    "Proposed fully-orthogonal schemes vs the simultaneous-access baseline",
    base_kwargs=dict(num_bds=2, alpha=(0.5, 0.5)),
    spec_kwargs=dict(metrics=("bd_ber",), alpha=(0.5,),
                     scheme_modulation=(("fully_orthogonal", "ofsk"),
                                        ("fully_orthogonal", "mfsk"))),
)
_register(
    "fig16", "sweep",
    "Total sum-rate vs device count for the four schemes",
    base_kwargs=dict(num_bds=8, alpha=tuple([0.25] * 8)),
    spec_kwargs=dict(metrics=("sum_rate",), alpha=(0.25,), snr_db=(20.0,),
                     num_bds=(1, 2, 3, 4, 5, 6, 7, 8),
                     scheme_modulation=ALL_SCHEMES, analytic=False),
)
_register(
    "fig17", "sweep",
    "Total sum-rate vs device count across reflection levels",
    base_kwargs=dict(num_bds=8, alpha=tuple([0.25] * 8)),
    spec_kwargs=dict(metrics=("sum_rate",), alpha=ALPHA_GRID, snr_db=(20.0,),
                     num_bds=(1, 2, 3, 4, 5, 6, 7, 8),
                     scheme_modulation=ALL_SCHEMES, analytic=False),
)
_register(
    "fig18", "sweep",
    "Total sum-rate vs SNR for the four schemes",
    base_kwargs=dict(num_bds=8, alpha=tuple([0.25] * 8)),
    spec_kwargs=dict(metrics=("sum_rate",), alpha=(0.25,), snr_db=SNR_GRID,
                     scheme_modulation=ALL_SCHEMES, analytic=False),
)
_register(
    "fig19", "sweep",
    "Total sum-rate vs DFT size at 10 dB",
    base_kwargs=dict(num_bds=8, alpha=tuple([0.25] * 8)),
    spec_kwargs=dict(metrics=("sum_rate",), alpha=(0.25,), snr_db=(10.0,),
                     n_subcarriers=N_GRID, scheme_modulation=ALL_SCHEMES,
                     analytic=False),
)


def preset_spec(name: str, trials: int | None = None, seed: int | None = None,
                sic=None, cfo=None, cfo_compensate=None) -> tuple[Preset, SweepSpec | None]:
    """Materialize a preset into a SweepSpec, applying CLI overrides."""
    preset = PRESETS[name]
    base_kwargs = dict(preset.base_kwargs)
    if seed is not None:
        base_kwargs["seed"] = seed
    base = _base(**base_kwargs)
    if preset.kind == "roc":
        return preset, None
    spec_kwargs = dict(preset.spec_kwargs)
    if trials is not None:
        spec_kwargs["trials"] = trials
    if sic is not None:
        spec_kwargs["sic"] = sic
    if cfo is not None:
        spec_kwargs["cfo"] = cfo
    if cfo_compensate is not None:
        spec_kwargs["cfo_compensate"] = cfo_compensate
    return preset, SweepSpec(base=base, **spec_kwargs)
