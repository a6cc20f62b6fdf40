"""Monte Carlo sweep orchestration: cells, aggregation, and records.

A sweep is a cross-product of parameter lists over a base configuration.
Every cell gets its own deterministic RNG stream derived from (seed, cell
key), so cells are order-independent, reruns are bit-identical, and worker
pools need no coordination.
"""
from __future__ import annotations

import hashlib
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from .allocation import build_allocation
from .config import OFSK, SystemConfig, ValidatedConfig, validate
from . import theory
from .simulate import simulate_cell, simulate_cfo_cell, simulate_sa_baseline
from .sumrate import sum_rate

CSV_HEADER = "scheme,modulation,N,P,alpha,snr_db,metric,value,ci_lo,ci_hi,trials,source,cfo,sic"


class CellBudgetExceeded(ValueError):
    """Sweep cross-product larger than the configured cap."""


def wilson_ci(successes: int, total: int, z: float = 1.96) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if total == 0:
        return 0.0, 1.0
    phat = successes / total
    denom = 1.0 + z * z / total
    center = (phat + z * z / (2 * total)) / denom
    half = (z / denom) * np.sqrt(phat * (1 - phat) / total + z * z / (4 * total * total))
    return max(0.0, center - half), min(1.0, center + half)


@dataclass(frozen=True)
class MetricRecord:
    scheme: str
    modulation: str
    n: int
    p: int
    alpha: float
    snr_db: float
    metric: str
    value: float
    ci_lo: float
    ci_hi: float
    trials: int
    source: str
    cfo: float
    sic: bool
    wall_time_ms: float = 0.0

    def csv_row(self) -> str:
        return ",".join([
            self.scheme, self.modulation, str(self.n), str(self.p),
            f"{self.alpha:.6g}", f"{self.snr_db:.6g}", self.metric,
            f"{self.value:.10g}", f"{self.ci_lo:.10g}", f"{self.ci_hi:.10g}",
            str(self.trials), self.source, f"{self.cfo:.6g}",
            "on" if self.sic else "off",
        ])

    @property
    def sort_key(self):
        return (self.scheme, self.modulation, self.n, self.p, self.alpha,
                self.snr_db, self.cfo, self.sic, self.metric, self.source)


@dataclass(frozen=True)
class SweepSpec:
    """Cross-product description of one experiment."""

    base: SystemConfig | ValidatedConfig
    metrics: tuple[str, ...] = ("pe",)
    snr_db: tuple[float, ...] | None = None
    alpha: tuple[float, ...] | None = None
    n_subcarriers: tuple[int, ...] | None = None
    num_bds: tuple[int, ...] | None = None
    scheme_modulation: tuple[tuple[str, str], ...] | None = None
    sic: tuple[bool, ...] = (False,)
    cfo: tuple[float, ...] = (0.0,)
    cfo_compensate: tuple[bool, ...] = (False,)
    trials: int | None = None
    analytic: bool = True
    threshold_policy: str = "optimal"   # or "pfa_target"
    cell_cap: int = 10_000

    def cells(self) -> list[dict]:
        base = validate(self.base)
        snrs = self.snr_db if self.snr_db is not None else base.snr_db_grid
        alphas = self.alpha if self.alpha is not None else (abs(base.alpha[0]),)
        ns = self.n_subcarriers if self.n_subcarriers is not None else (base.n_subcarriers,)
        ps = self.num_bds if self.num_bds is not None else (base.num_bds,)
        sms = self.scheme_modulation if self.scheme_modulation is not None else (
            (base.scheme, base.modulation),)
        out = []
        for scheme, modulation in sms:
            for n in ns:
                for p in ps:
                    for a in alphas:
                        for snr in snrs:
                            for sic in self.sic:
                                for cfo in self.cfo:
                                    for comp in self.cfo_compensate:
                                        if comp and cfo == 0.0:
                                            continue
                                        out.append(dict(
                                            scheme=scheme, modulation=modulation,
                                            n=n, p=p, alpha=a, snr_db=snr,
                                            sic=sic, cfo=cfo, compensate=comp,
                                        ))
        if len(out) > self.cell_cap:
            raise CellBudgetExceeded(f"{len(out)} cells exceed cap {self.cell_cap}")
        return out


def cell_rng(seed: int, cell_key: str) -> np.random.Generator:
    digest = hashlib.sha256(cell_key.encode()).digest()
    spawn = int.from_bytes(digest[:8], "little")
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(spawn,)))


def _cell_key(cell: dict) -> str:
    return ("{scheme}|{modulation}|N{n}|P{p}|a{alpha:.6g}|snr{snr_db:.6g}"
            "|cfo{cfo:.6g}|comp{compensate}|sic{sic}").format(**cell)


def _cell_config(base: ValidatedConfig, cell: dict) -> ValidatedConfig:
    return base.with_overrides(
        scheme=cell["scheme"], modulation=cell["modulation"],
        n_subcarriers=cell["n"], num_bds=cell["p"],
        alpha=tuple(complex(cell["alpha"]) for _ in range(cell["p"])),
        cfo_normalized=cell["cfo"],
    )


def ofsk_threshold(config: ValidatedConfig, snr_db: float,
                   policy: str = "optimal") -> float:
    """Detection threshold for the configured OFSK cell (shared by MC and
    analytic records). All devices share it when their designated-set sizes
    and reflection magnitudes agree, which holds for the uniform-alpha
    sweeps here."""
    alloc = build_allocation(config)
    sl = theory.ofsk_slice(config, alloc, snr_db)
    target = config.pfa_target if policy == "pfa_target" else None
    return theory.optimize_threshold(sl.h0_cf(), sl.h1_cf(), pfa_target=target)


def _proportion_record(cell, metric, k, n_total, source, base_trials, dt):
    lo, hi = wilson_ci(k, n_total)
    return MetricRecord(
        scheme=cell["scheme"], modulation=cell["modulation"], n=cell["n"],
        p=cell["p"], alpha=cell["alpha"], snr_db=cell["snr_db"], metric=metric,
        value=k / n_total if n_total else 0.0, ci_lo=lo, ci_hi=hi,
        trials=base_trials, source=source, cfo=cell["cfo"], sic=cell["sic"],
        wall_time_ms=dt,
    )


def _value_record(cell, metric, value, lo, hi, trials, source, dt):
    return MetricRecord(
        scheme=cell["scheme"], modulation=cell["modulation"], n=cell["n"],
        p=cell["p"], alpha=cell["alpha"], snr_db=cell["snr_db"], metric=metric,
        value=value, ci_lo=lo, ci_hi=hi, trials=trials, source=source,
        cfo=cell["cfo"], sic=cell["sic"], wall_time_ms=dt,
    )


def run_cell(base: ValidatedConfig, spec: SweepSpec, cell: dict) -> list[MetricRecord]:
    t0 = time.perf_counter()
    config = _cell_config(base, cell)
    trials = spec.trials if spec.trials is not None else config.num_trials
    rng = cell_rng(base.seed, _cell_key(cell))
    records: list[MetricRecord] = []
    error_metrics = {"pmd", "pfa", "pe", "bd_ber", "primary_ber"} & set(spec.metrics)

    if error_metrics:
        gamma = None
        if config.modulation == OFSK and not cell["sic"]:
            gamma = ofsk_threshold(config, cell["snr_db"], spec.threshold_policy)
        if cell["cfo"] != 0.0 or cell["compensate"]:
            m = config.cfo_block_symbols
            frames = max(1, (trials + m - 1) // m)
            res = simulate_cfo_cell(config, cell["snr_db"], frames=frames, rng=rng,
                                    eps0=cell["cfo"],
                                    compensate=cell["compensate"], gamma=gamma)
        else:
            res = simulate_cell(config, cell["snr_db"], trials=trials, rng=rng,
                                sic=cell["sic"], gamma=gamma)
        dt = (time.perf_counter() - t0) * 1e3
        # Compensated-offset cells are distinguished inside the fixed CSV
        # schema by a metric-name suffix.
        suffix = "_comp" if cell["compensate"] else ""
        agg0 = sum(d.sent0 for d in res.devices)
        agg1 = sum(d.sent1 for d in res.devices)
        fa = sum(d.err_given0 for d in res.devices)
        md = sum(d.err_given1 for d in res.devices)
        if "pmd" in error_metrics:
            records.append(_proportion_record(cell, "pmd" + suffix, md, agg1,
                                              "montecarlo", trials, dt))
        if "pfa" in error_metrics:
            records.append(_proportion_record(cell, "pfa" + suffix, fa, agg0,
                                              "montecarlo", trials, dt))
        for name in ("pe", "bd_ber"):
            if name in error_metrics:
                pe = res.device_mean("pe")
                se = _pe_se(res)
                records.append(_value_record(
                    cell, name + suffix, pe, max(0.0, pe - 1.96 * se),
                    min(1.0, pe + 1.96 * se), trials, "montecarlo", dt))
        if "primary_ber" in error_metrics and res.primary_bits:
            records.append(_proportion_record(
                cell, "primary_ber" + suffix, res.primary_errors, res.primary_bits,
                "montecarlo", trials, dt))

        if spec.analytic and not cell["sic"] and cell["cfo"] == 0.0:
            records.extend(_analytic_records(config, spec, cell, gamma, error_metrics))

    if "sum_rate" in spec.metrics:
        n_real = min(trials, 10_000)
        rb = sum_rate(config, cell["snr_db"], mode="ensemble",
                      n_realizations=n_real, rng=rng, sic=cell["sic"])
        dt = (time.perf_counter() - t0) * 1e3
        for name, value in (("sum_rate_total", rb.r_total), ("sum_rate_bd", rb.r_bd),
                            ("sum_rate_primary", rb.r_primary)):
            half = 1.96 * rb.r_total_se
            records.append(_value_record(cell, name, value, max(0.0, value - half),
                                         value + half, n_real, "montecarlo", dt))
    return records


def _pe_se(res) -> float:
    """Standard error of the device-averaged (PMD+PFA)/2 estimate."""
    parts = []
    for d in res.devices:
        v1 = d.pmd * (1 - d.pmd) / d.sent1 if d.sent1 else 0.0
        v0 = d.pfa * (1 - d.pfa) / d.sent0 if d.sent0 else 0.0
        parts.append(0.25 * (v0 + v1))
    return float(np.sqrt(np.sum(parts)) / len(parts))


def _analytic_records(config: ValidatedConfig, spec: SweepSpec, cell: dict,
                      gamma: float | None, error_metrics: set) -> list[MetricRecord]:
    t0 = time.perf_counter()
    alloc = build_allocation(config)
    out = []
    if config.modulation == OFSK and gamma is not None:
        sl = theory.ofsk_slice(config, alloc, cell["snr_db"])
        pmd, pfa = theory.ofsk_error_point(sl, gamma)
        dt = (time.perf_counter() - t0) * 1e3
        values = {"pmd": pmd, "pfa": pfa, "pe": 0.5 * (pmd + pfa),
                  "bd_ber": 0.5 * (pmd + pfa)}
    else:
        pe = theory.mfsk_error_averaged(config, alloc, cell["snr_db"])
        dt = (time.perf_counter() - t0) * 1e3
        values = {"pe": pe, "bd_ber": pe}
    for name in error_metrics & set(values):
        v = values[name]
        out.append(_value_record(cell, name, v, v, v, 0, "analytic", dt))
    return out


def run_sweep(spec: SweepSpec, threads: int = 1) -> list[MetricRecord]:
    """Execute every cell; deterministic for a fixed base seed."""
    base = validate(spec.base)
    cells = spec.cells()
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            chunks = list(pool.map(lambda c: run_cell(base, spec, c), cells))
    else:
        chunks = [run_cell(base, spec, c) for c in cells]
    records = [r for chunk in chunks for r in chunk]
    records.sort(key=lambda r: r.sort_key)
    return records


def run_roc(config: ValidatedConfig, snr_db: float, *, trials: int,
            rng: np.random.Generator, thresholds=None,
            pfa_grid=None) -> list[MetricRecord]:
    """Empirical ROC: sweep thresholds over the statistic once per trial set.

    By default the thresholds are analytic noise-only quantiles at a
    geometric false-alarm grid, so the curve spans the interesting region
    evenly; an explicit threshold list overrides that.
    """
    if config.modulation != OFSK:
        raise ValueError("ROC sweeps are defined for the on-off keying detector")
    if thresholds is not None:
        gammas = [float(g) for g in thresholds]
    else:
        if pfa_grid is None:
            pfa_grid = np.concatenate([[0.999], np.geomspace(0.9, 1e-3, 25)])
        alloc = build_allocation(config)
        sl = theory.ofsk_slice(config, alloc, snr_db)
        cf0 = sl.h0_cf()
        gammas = [theory.optimize_threshold(cf0, sl.h1_cf(), pfa_target=float(q))
                  for q in pfa_grid]

    res = simulate_cell(config, snr_db, trials=trials, rng=rng, gamma=np.inf,
                        collect_stats=True)
    records = []
    cell = dict(scheme=config.scheme, modulation=config.modulation,
                n=config.n_subcarriers, p=config.num_bds,
                alpha=abs(config.alpha[0]), snr_db=snr_db, cfo=0.0,
                compensate=False, sic=False)
    for gamma in gammas:
        fa = md = n0 = n1 = 0
        for p in range(1, config.num_bds + 1):
            stat = res.stats[p]["stat"]
            bits = res.stats[p]["bits"]
            det = stat > gamma
            n1 += int(np.sum(bits == 1))
            n0 += int(np.sum(bits == 0))
            md += int(np.sum(~det[bits == 1]))
            fa += int(np.sum(det[bits == 0]))
        records.append(_proportion_record(cell, "roc_pfa", fa, n0, "montecarlo", trials, 0.0))
        records.append(_proportion_record(cell, "roc_pd", n1 - md, n1, "montecarlo", trials, 0.0))
    return records


def run_sa_baseline_sweep(base: ValidatedConfig, snr_grid, *, trials: int,
                          alpha: float) -> list[MetricRecord]:
    """Simultaneous-access baseline records (scheme column "sa_baseline")."""
    records = []
    for snr in snr_grid:
        cell = dict(scheme="sa_baseline", modulation="ook", n=base.n_subcarriers,
                    p=base.num_bds, alpha=alpha, snr_db=snr, cfo=0.0,
                    compensate=False, sic=True)
        cfg = base.with_overrides(
            alpha=tuple(complex(alpha) for _ in range(base.num_bds)))
        rng = cell_rng(base.seed, _cell_key(cell))
        t0 = time.perf_counter()
        res = simulate_sa_baseline(cfg, snr, trials=trials, rng=rng)
        dt = (time.perf_counter() - t0) * 1e3
        pe = res.device_mean("pe")
        se = _pe_se(res)
        records.append(_value_record(cell, "bd_ber", pe, max(0.0, pe - 1.96 * se),
                                     min(1.0, pe + 1.96 * se), trials, "montecarlo", dt))
    return records


def records_to_csv(records) -> str:
    lines = [CSV_HEADER]
    lines.extend(r.csv_row() for r in records)
    return "\n".join(lines) + "\n"


def config_hash(config: ValidatedConfig) -> str:
    payload = asdict(config)
    payload["alpha"] = [[a.real, a.imag] for a in config.alpha]
    blob = json.dumps(payload, sort_keys=True, default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]
