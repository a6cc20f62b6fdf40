"""Figure definitions: which CSV slice each figure plots and how.

Every spec names the metric column value it draws, the x-axis field, the
fields that split rows into series, and the axis scales. Error-rate figures
are log-y; rate figures linear.
"""
from __future__ import annotations

from dataclasses import dataclass, field


@dataclass(frozen=True)
class FigureSpec:
    figure_id: str
    metrics: tuple[str, ...]
    x_field: str
    series_fields: tuple[str, ...]
    yscale: str = "log"
    xscale: str = "linear"
    filters: dict = field(default_factory=dict)
    x_label: str = "SNR (dB)"
    y_label: str = "error rate"
    kind: str = "lines"          # "lines" | "roc"


SPECS: dict[str, FigureSpec] = {}


def _add(spec: FigureSpec):
    SPECS[spec.figure_id] = spec


_add(FigureSpec("fig6", ("pmd",), "snr_db", ("alpha", "source"),
                filters={"scheme": "fully_orthogonal", "modulation": "ofsk"},
                y_label="average PMD"))
_add(FigureSpec("fig7", ("pmd",), "snr_db", ("N", "source"),
                filters={"scheme": "fully_orthogonal", "modulation": "ofsk"},
                y_label="average PMD"))
_add(FigureSpec("fig8", ("roc_pfa", "roc_pd"), "roc_pfa", ("snr_db",),
                yscale="linear", kind="roc",
                x_label="PFA", y_label="PD"))
_add(FigureSpec("fig9", ("pmd",), "snr_db", ("alpha", "sic", "source"),
                filters={"scheme": "semi_orthogonal", "modulation": "ofsk"},
                y_label="average PMD"))
_add(FigureSpec("fig10", ("bd_ber",), "snr_db", ("alpha", "source"),
                filters={"scheme": "fully_orthogonal", "modulation": "mfsk"},
                y_label="average BER"))
_add(FigureSpec("fig11", ("bd_ber",), "snr_db", ("N", "source"),
                filters={"scheme": "fully_orthogonal", "modulation": "mfsk"},
                y_label="average BER"))
_add(FigureSpec("fig12", ("bd_ber",), "snr_db", ("alpha", "sic", "source"),
                filters={"scheme": "semi_orthogonal", "modulation": "mfsk"},
                y_label="average BER"))
_add(FigureSpec("fig13", ("bd_ber", "bd_ber_comp"), "snr_db",
                ("cfo", "metric", "source"),
                filters={"scheme": "fully_orthogonal", "modulation": "mfsk"},
                y_label="average BER"))
_add(FigureSpec("fig14", ("bd_ber", "bd_ber_comp"), "snr_db",
                ("alpha", "cfo", "metric", "source"),
                filters={"scheme": "fully_orthogonal", "modulation": "mfsk"},
                y_label="average BER"))
_add(FigureSpec("fig15", ("bd_ber",), "snr_db", ("scheme", "modulation", "source"),
                y_label="average BER"))
_add(FigureSpec("fig16", ("sum_rate_total",), "P", ("scheme", "modulation"),
                yscale="linear", x_label="number of devices",
                y_label="total sum-rate (bit/s)"))
_add(FigureSpec("fig17", ("sum_rate_total",), "P",
                ("scheme", "modulation", "alpha"),
                yscale="linear", x_label="number of devices",
                y_label="total sum-rate (bit/s)"))
_add(FigureSpec("fig18", ("sum_rate_total",), "snr_db", ("scheme", "modulation"),
                yscale="linear", y_label="total sum-rate (bit/s)"))
_add(FigureSpec("fig19", ("sum_rate_total",), "N", ("scheme", "modulation"),
                yscale="linear", x_label="DFT size",
                y_label="total sum-rate (bit/s)"))
