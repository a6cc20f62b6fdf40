"""Render metric CSVs to vector figures.

Reads the simulator's long-format CSV (fixed header), slices it per the
figure spec, and draws one curve per series: Monte Carlo solid with
confidence whiskers, analytic dashed. Output is deterministic for a fixed
CSV: timestamps are suppressed and SVG element ids are salted.
"""
from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .specs import SPECS, FigureSpec  # noqa: E402

EXPECTED_HEADER = ["scheme", "modulation", "N", "P", "alpha", "snr_db", "metric",
                   "value", "ci_lo", "ci_hi", "trials", "source", "cfo", "sic"]

matplotlib.rcParams["svg.hashsalt"] = "srlinkfigs"


class MissingSeries(ValueError):
    """The CSV lacks rows for a series the figure requires."""


def read_rows(csv_path) -> list[dict]:
    with open(csv_path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != EXPECTED_HEADER:
            raise MissingSeries(
                f"unexpected CSV header {reader.fieldnames}; need {EXPECTED_HEADER}")
        rows = []
        for raw in reader:
            rows.append({
                "scheme": raw["scheme"],
                "modulation": raw["modulation"],
                "N": int(raw["N"]),
                "P": int(raw["P"]),
                "alpha": float(raw["alpha"]),
                "snr_db": float(raw["snr_db"]),
                "metric": raw["metric"],
                "value": float(raw["value"]),
                "ci_lo": float(raw["ci_lo"]),
                "ci_hi": float(raw["ci_hi"]),
                "trials": int(raw["trials"]),
                "source": raw["source"],
                "cfo": float(raw["cfo"]),
                "sic": raw["sic"],
            })
    return rows


def _series_label(spec: FigureSpec, key) -> str:
    parts = []
    for f, v in zip(spec.series_fields, key):
        if f == "metric":
            parts.append("compensated" if str(v).endswith("_comp") else "uncompensated")
        elif f == "source":
            parts.append(str(v))
        else:
            parts.append(f"{f}={v}")
    return ", ".join(parts)


def _group(rows, spec: FigureSpec):
    groups: dict[tuple, list[dict]] = {}
    for row in rows:
        if spec.filters and any(row[k] != v for k, v in spec.filters.items()):
            continue
        if row["metric"] not in spec.metrics:
            continue
        key = tuple(row[f] for f in spec.series_fields)
        groups.setdefault(key, []).append(row)
    return groups


def _render_roc(rows, spec, ax):
    """ROC rows come in threshold order as (roc_pfa, roc_pd) pairs."""
    series = {}
    for row in rows:
        if row["metric"] not in ("roc_pfa", "roc_pd"):
            continue
        key = tuple(row[f] for f in spec.series_fields)
        series.setdefault(key, {"roc_pfa": [], "roc_pd": []})
        series[key][row["metric"]].append(row["value"])
    if not series:
        raise MissingSeries(f"{spec.figure_id}: no ROC rows in the CSV")
    for key in sorted(series):
        pfa = series[key]["roc_pfa"]
        pd = series[key]["roc_pd"]
        if len(pfa) != len(pd) or not pfa:
            raise MissingSeries(f"{spec.figure_id}: unpaired ROC rows for {key}")
        order = sorted(range(len(pfa)), key=lambda i: pfa[i])
        ax.plot([pfa[i] for i in order], [pd[i] for i in order], marker="o",
                markersize=3, label=_series_label(spec, key))
    return len(series)


def render(csv_path, figure_id: str, out_path) -> dict:
    """Draw one figure; returns a summary of what was drawn.

    Raises MissingSeries when the CSV holds no rows for the figure.
    """
    if figure_id not in SPECS:
        raise KeyError(f"unknown figure id {figure_id!r}; have {sorted(SPECS)}")
    spec = SPECS[figure_id]
    rows = read_rows(csv_path)

    fig, ax = plt.subplots(figsize=(5.2, 3.9), constrained_layout=True)
    if spec.kind == "roc":
        n_series = _render_roc(rows, spec, ax)
    else:
        groups = _group(rows, spec)
        if not groups:
            raise MissingSeries(f"{figure_id}: no matching rows in the CSV")
        for key in sorted(groups, key=str):
            pts = sorted(groups[key], key=lambda r: r[spec.x_field])
            if spec.yscale == "log":
                pts = [r for r in pts if r["value"] > 0]
            x = [r[spec.x_field] for r in pts]
            y = [r["value"] for r in pts]
            if "source" in spec.series_fields and key[spec.series_fields.index("source")] == "analytic":
                ax.plot(x, y, linestyle="--", label=_series_label(spec, key))
            else:
                lo = [max(r["value"] - r["ci_lo"], 0.0) for r in pts]
                hi = [max(r["ci_hi"] - r["value"], 0.0) for r in pts]
                ax.errorbar(x, y, yerr=[lo, hi], linestyle="-", marker="o",
                            markersize=3, capsize=2,
                            label=_series_label(spec, key))
        n_series = len(groups)

    ax.set_xscale(spec.xscale)
    if spec.yscale == "log":
        ax.set_yscale("log")
    ax.set_xlabel(spec.x_label)
    ax.set_ylabel(spec.y_label)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=7)

    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out_path, format=out_path.suffix.lstrip(".") or "svg",
                metadata={"Date": None})
    plt.close(fig)
    return {
        "figure_id": figure_id,
        "path": str(out_path),
        "n_series": n_series,
        "yscale": spec.yscale,
        "xscale": spec.xscale,
    }
