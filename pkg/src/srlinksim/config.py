"""Experiment configuration: parameters, validation, and derived subcarrier counts.

Every other module consumes a ValidatedConfig produced here. Validation is
strict: capacity limits per access scheme, the ISI-free cyclic-prefix
condition, and passive-reflection magnitude bounds are all enforced up front
so the simulation and analytic paths never have to re-check them.
"""
from __future__ import annotations

from dataclasses import dataclass, field, fields

FULLY_ORTHOGONAL = "fully_orthogonal"
SEMI_ORTHOGONAL = "semi_orthogonal"
OFSK = "ofsk"
MFSK = "mfsk"

SCHEMES = (FULLY_ORTHOGONAL, SEMI_ORTHOGONAL)
MODULATIONS = (OFSK, MFSK)

_SCHEME_ALIASES = {
    "fully_orthogonal": FULLY_ORTHOGONAL,
    "fullyorthogonal": FULLY_ORTHOGONAL,
    "fo": FULLY_ORTHOGONAL,
    "semi_orthogonal": SEMI_ORTHOGONAL,
    "semiorthogonal": SEMI_ORTHOGONAL,
    "so": SEMI_ORTHOGONAL,
}


class ConfigError(ValueError):
    """Base class for configuration validation failures."""


class CapacityError(ConfigError):
    """DFT size too small for the requested scheme/modulation/device count."""


class CpTooShort(ConfigError):
    """Cyclic prefix shorter than the composite channel delay spread."""


class AlphaOutOfRange(ConfigError):
    """Reflection coefficient magnitude exceeds 1 (passive device)."""


def _uniform_powers(n_taps: int) -> tuple[float, ...]:
    return tuple(1.0 / n_taps for _ in range(n_taps))


@dataclass(frozen=True)
class ChannelProfile:
    """Per-link multipath description: tap counts and average tap powers.

    Tap powers are linear, non-negative, and sum to 1 so every link has unit
    average energy. The backscatter link defaults to a single tap (device
    close to the receiver, channel constant over one symbol).
    """

    direct_taps: int = 4
    forward_taps: int = 2
    backscatter_taps: int = 1
    direct_powers: tuple[float, ...] | None = None
    forward_powers: tuple[float, ...] | None = None
    backscatter_powers: tuple[float, ...] | None = None
    noise_variance: float = 1.0

    def resolved_powers(self) -> dict[str, tuple[float, ...]]:
        out = {}
        for name, count, powers in (
            ("direct", self.direct_taps, self.direct_powers),
            ("forward", self.forward_taps, self.forward_powers),
            ("backscatter", self.backscatter_taps, self.backscatter_powers),
        ):
            if count < 1:
                raise ConfigError(f"{name}_taps must be >= 1, got {count}")
            p = _uniform_powers(count) if powers is None else tuple(float(x) for x in powers)
            if len(p) != count:
                raise ConfigError(f"{name}_powers has {len(p)} entries, expected {count}")
            if any(x < 0 for x in p):
                raise ConfigError(f"{name}_powers must be non-negative")
            if abs(sum(p) - 1.0) > 1e-12:
                raise ConfigError(f"{name}_powers must sum to 1, got {sum(p)!r}")
            out[name] = p
        return out

    @property
    def max_delay_spread(self) -> int:
        """Composite maximum excess delay in samples (direct vs cascaded path)."""
        return max(self.direct_taps - 1,
                   (self.forward_taps - 1) + (self.backscatter_taps - 1))


@dataclass(frozen=True)
class SystemConfig:
    """Full experiment description consumed by every other module."""

    n_subcarriers: int = 64
    cp_len: int = 8
    num_bds: int = 1
    scheme: str = FULLY_ORTHOGONAL
    modulation: str = OFSK
    subcarrier_spacing_hz: float = 15e3
    snr_db_grid: tuple[float, ...] = (0.0, 5.0, 10.0, 15.0, 20.0, 25.0)
    alpha: tuple[complex, ...] = (1.0 + 0j,)
    channel_profile: ChannelProfile = field(default_factory=ChannelProfile)
    cfo_normalized: float = 0.0
    num_trials: int = 10_000
    seed: int = 1
    pfa_target: float = 1e-3
    # Estimation-error variances for the cancellation stage (0 = genie).
    est_error_var_h: float = 0.0
    est_error_var_x: float = 0.0
    # Symbols per frame for frequency-offset estimation experiments.
    cfo_block_symbols: int = 16
    # SNR reference: "received" relates noise to the received direct-link
    # power per sample (occupied-bin fraction), "subcarrier" to the unit
    # per-subcarrier symbol energy.
    snr_reference: str = "received"


@dataclass(frozen=True)
class ValidatedConfig:
    """SystemConfig with all invariants checked and derived counts attached.

    Immutable after construction; safe to share across parallel workers.
    """

    n_subcarriers: int
    cp_len: int
    num_bds: int
    scheme: str
    modulation: str
    subcarrier_spacing_hz: float
    snr_db_grid: tuple[float, ...]
    alpha: tuple[complex, ...]
    channel_profile: ChannelProfile
    cfo_normalized: float
    num_trials: int
    seed: int
    pfa_target: float
    est_error_var_h: float
    est_error_var_x: float
    cfo_block_symbols: int
    snr_reference: str
    # Derived subcarrier accounting.
    n_data: int
    n_per_device: tuple[int, ...]
    n_null_total: int

    def sigma_w(self, snr_db: float) -> float:
        """Noise variance for a grid point.

        Under the "received" reference the direct link delivers n_data/N
        average power per sample (unit-energy symbols on the occupied bins),
        so sigma_w = (n_data/N) * 10^(-SNR/10). The "subcarrier" reference
        uses the raw per-subcarrier symbol energy: sigma_w = 10^(-SNR/10).
        """
        base = 10.0 ** (-snr_db / 10.0)
        if self.snr_reference == "received":
            return base * self.n_data / self.n_subcarriers
        return base

    def with_overrides(self, **kwargs) -> "ValidatedConfig":
        """Re-validate with some base fields replaced."""
        base = {f.name: getattr(self, f.name) for f in fields(SystemConfig)}
        base.update(kwargs)
        return validate(SystemConfig(**base))


def _canon_scheme(value: str) -> str:
    key = str(value).strip().lower().replace("-", "_")
    if key not in _SCHEME_ALIASES:
        raise ConfigError(f"unknown scheme {value!r}; expected one of {SCHEMES}")
    return _SCHEME_ALIASES[key]


def _canon_modulation(value: str) -> str:
    key = str(value).strip().lower()
    if key not in MODULATIONS:
        raise ConfigError(f"unknown modulation {value!r}; expected one of {MODULATIONS}")
    return key


def min_subcarriers(scheme: str, modulation: str, num_bds: int) -> int:
    """Smallest DFT size supporting the scheme at the given device count."""
    if scheme == FULLY_ORTHOGONAL:
        block = num_bds + 1 if modulation == OFSK else 2 * num_bds + 1
        return 2 * block
    return num_bds + 2 if modulation == OFSK else 2 * num_bds + 2


def derived_counts(n: int, p: int, scheme: str, modulation: str) -> tuple[int, tuple[int, ...], int]:
    """(n_data, per-device designated-bin counts, total designated bins).

    Fully-orthogonal OFSK keeps only complete data+null blocks so every
    device offset stays inside the band; fully-orthogonal MFSK places data on
    every block start and assigns a device pair only where both members fit,
    leaving the remainder as plain nulls. Semi-orthogonal schemes reserve one
    contiguous null run after the first data subcarrier.
    """
    if scheme == FULLY_ORTHOGONAL:
        if modulation == OFSK:
            n_data = n // (p + 1)
            per_dev = tuple(n_data for _ in range(p))
        else:
            block = 2 * p + 1
            n_data = (n + block - 1) // block
            per_dev = tuple(
                2 * ((n - 1 - 2 * dev) // block + 1) if n - 1 - 2 * dev >= 0 else 0
                for dev in range(1, p + 1)
            )
    else:
        if modulation == OFSK:
            n_data = n - p
            per_dev = tuple(1 for _ in range(p))
        else:
            n_data = n - 2 * p
            per_dev = tuple(2 for _ in range(p))
    return n_data, per_dev, sum(per_dev)


def validate(config: SystemConfig | ValidatedConfig) -> ValidatedConfig:
    """Check every invariant and attach derived subcarrier counts.

    Idempotent: validating a ValidatedConfig returns it unchanged.
    """
    if isinstance(config, ValidatedConfig):
        return config

    n = int(config.n_subcarriers)
    p = int(config.num_bds)
    if n < 1:
        raise ConfigError(f"n_subcarriers must be positive, got {n}")
    if p < 1:
        raise ConfigError(f"num_bds must be positive, got {p}")
    scheme = _canon_scheme(config.scheme)
    modulation = _canon_modulation(config.modulation)

    cp_len = int(config.cp_len)
    if cp_len < 0:
        raise ConfigError(f"cp_len must be non-negative, got {cp_len}")
    profile = config.channel_profile
    profile.resolved_powers()
    if cp_len < profile.max_delay_spread:
        raise CpTooShort(
            f"cp_len={cp_len} is below the composite delay spread "
            f"{profile.max_delay_spread} samples; symbols would suffer ISI"
        )

    need = min_subcarriers(scheme, modulation, p)
    if n < need:
        raise CapacityError(
            f"N={n} cannot host {p} device(s) under {scheme}/{modulation}; need N >= {need}"
        )

    alpha = tuple(complex(a) for a in config.alpha)
    if len(alpha) != p:
        raise ConfigError(f"alpha has {len(alpha)} entries, expected num_bds={p}")
    for i, a in enumerate(alpha):
        if abs(a) > 1.0 + 1e-12:
            raise AlphaOutOfRange(f"|alpha_{i + 1}|={abs(a):.6g} exceeds 1")

    if not -0.5 <= float(config.cfo_normalized) < 0.5:
        raise ConfigError(f"cfo_normalized must lie in [-0.5, 0.5), got {config.cfo_normalized}")
    if not 0.0 < float(config.pfa_target) < 1.0:
        raise ConfigError(f"pfa_target must lie in (0, 1), got {config.pfa_target}")
    if int(config.num_trials) < 1:
        raise ConfigError(f"num_trials must be positive, got {config.num_trials}")
    seed = int(config.seed)
    if not 0 <= seed < 2 ** 64:
        raise ConfigError("seed must be a 64-bit unsigned integer")
    if float(config.subcarrier_spacing_hz) <= 0:
        raise ConfigError("subcarrier_spacing_hz must be positive")
    if float(config.est_error_var_h) < 0 or float(config.est_error_var_x) < 0:
        raise ConfigError("estimation error variances must be non-negative")
    if int(config.cfo_block_symbols) < 1:
        raise ConfigError("cfo_block_symbols must be >= 1")
    if config.snr_reference not in ("received", "subcarrier"):
        raise ConfigError(
            f"snr_reference must be 'received' or 'subcarrier', got {config.snr_reference!r}"
        )

    n_data, per_dev, n_null = derived_counts(n, p, scheme, modulation)

    return ValidatedConfig(
        n_subcarriers=n,
        cp_len=cp_len,
        num_bds=p,
        scheme=scheme,
        modulation=modulation,
        subcarrier_spacing_hz=float(config.subcarrier_spacing_hz),
        snr_db_grid=tuple(float(s) for s in config.snr_db_grid),
        alpha=alpha,
        channel_profile=profile,
        cfo_normalized=float(config.cfo_normalized),
        num_trials=int(config.num_trials),
        seed=seed,
        pfa_target=float(config.pfa_target),
        est_error_var_h=float(config.est_error_var_h),
        est_error_var_x=float(config.est_error_var_x),
        cfo_block_symbols=int(config.cfo_block_symbols),
        snr_reference=config.snr_reference,
        n_data=n_data,
        n_per_device=per_dev,
        n_null_total=n_null,
    )


# ---------------------------------------------------------------------------
# Config-file loading (TOML, [system] and [channel] tables, unknown keys fatal)
# ---------------------------------------------------------------------------

_SYSTEM_KEYS = {
    "n_subcarriers", "cp_len", "num_bds", "scheme", "modulation",
    "subcarrier_spacing_hz", "snr_db_grid", "alpha", "cfo_normalized",
    "num_trials", "seed", "pfa_target", "est_error_var_h", "est_error_var_x",
    "cfo_block_symbols", "snr_reference",
}
_CHANNEL_KEYS = {
    "direct_taps", "forward_taps", "backscatter_taps",
    "direct_powers", "forward_powers", "backscatter_powers", "noise_variance",
}


def _parse_alpha_entry(entry) -> complex:
    if isinstance(entry, (int, float)):
        return complex(entry)
    if isinstance(entry, (list, tuple)) and len(entry) == 2:
        return complex(float(entry[0]), float(entry[1]))
    if isinstance(entry, str):
        return complex(entry.replace(" ", ""))
    raise ConfigError(f"cannot interpret alpha entry {entry!r} as a complex number")


def load_config(path) -> SystemConfig:
    """Read a TOML experiment file into a SystemConfig (not yet validated)."""
    try:
        import tomllib  # Python >= 3.11
    except ModuleNotFoundError:  # pragma: no cover - depends on interpreter
        import tomli as tomllib

    with open(path, "rb") as fh:
        raw = tomllib.load(fh)

    unknown_tables = set(raw) - {"system", "channel"}
    if unknown_tables:
        raise ConfigError(f"unknown config table(s): {sorted(unknown_tables)}")

    system = dict(raw.get("system", {}))
    channel = dict(raw.get("channel", {}))
    bad = set(system) - _SYSTEM_KEYS
    if bad:
        raise ConfigError(f"unknown [system] key(s): {sorted(bad)}")
    bad = set(channel) - _CHANNEL_KEYS
    if bad:
        raise ConfigError(f"unknown [channel] key(s): {sorted(bad)}")

    if "alpha" in system:
        entries = system["alpha"]
        if not isinstance(entries, (list, tuple)):
            entries = [entries]
        system["alpha"] = tuple(_parse_alpha_entry(e) for e in entries)
    if "snr_db_grid" in system:
        system["snr_db_grid"] = tuple(float(s) for s in system["snr_db_grid"])
    for key in ("direct_powers", "forward_powers", "backscatter_powers"):
        if key in channel:
            channel[key] = tuple(float(x) for x in channel[key])

    profile = ChannelProfile(**channel) if channel else ChannelProfile()
    return SystemConfig(channel_profile=profile, **system)


def alpha_uniform(value: complex, num_bds: int) -> tuple[complex, ...]:
    """Same reflection coefficient for every device."""
    return tuple(complex(value) for _ in range(num_bds))


def make_config(**kwargs) -> ValidatedConfig:
    """Build and validate a config in one call; alpha may be a scalar."""
    if "alpha" in kwargs and isinstance(kwargs["alpha"], (int, float, complex)):
        kwargs["alpha"] = alpha_uniform(kwargs["alpha"], kwargs.get("num_bds", 1))
    return validate(SystemConfig(**kwargs))
