"""Acceptance suite: one test (and one printed pass/fail line) per criterion.

Heavy Monte Carlo bundles are computed once per session and shared. Run with
`pytest tests/test_acceptance.py -s` to see the per-criterion lines.
"""
import time

import numpy as np
import pytest
from scipy import special

from srlinksim.allocation import build_allocation
from srlinksim.config import make_config
from srlinksim.detectors import detect_primary, run_sic
from srlinksim.gilpelaez import ExponentialMixtureCF, cdf_gil_pelaez
from srlinksim.harness import cell_rng, run_roc, wilson_ci
from srlinksim.ofdm import demodulate, modulate_primary
from srlinksim.simulate import simulate_cell, simulate_cfo_cell
from srlinksim.sumrate import sum_rate
from srlinksim import theory

SNR_GRID = (0.0, 5.0, 10.0, 15.0, 20.0, 25.0)
ALPHAS = (0.25, 1.0)
TRIALS = 100_000


def _report(name: str, ok: bool, detail: str):
    print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    return ok


def _pe_and_se(res):
    parts = []
    pes = []
    for d in res.devices:
        pes.append(d.pe)
        v1 = d.pmd * (1 - d.pmd) / d.sent1
        v0 = d.pfa * (1 - d.pfa) / d.sent0
        parts.append(0.25 * (v0 + v1))
    return float(np.mean(pes)), float(np.sqrt(np.sum(parts)) / len(parts))


@pytest.fixture(scope="session")
def agreement_bundle():
    """FO-OFSK and FO-MFSK cells: analytic vs 1e5-trial Monte Carlo."""
    t0 = time.perf_counter()
    rows = []
    for alpha in ALPHAS:
        cfg = make_config(n_subcarriers=64, cp_len=8, num_bds=1, scheme="fo",
                          modulation="ofsk", alpha=[alpha])
        alloc = build_allocation(cfg)
        for snr in SNR_GRID:
            sl = theory.ofsk_slice(cfg, alloc, snr)
            gamma, pmd_th, pfa_th, pe_th = theory.ofsk_operating_point(sl)
            rng = cell_rng(11, f"acc-ofsk|{alpha}|{snr}")
            res = simulate_cell(cfg, snr, trials=TRIALS, rng=rng, gamma=gamma)
            pe_mc, se = _pe_and_se(res)
            rows.append(dict(modulation="ofsk", alpha=alpha, snr=snr,
                             pe_th=pe_th, pe_mc=pe_mc, se=se,
                             pmd_th=pmd_th, pmd_mc=res.devices[0].pmd,
                             pmd_n1=res.devices[0].sent1))
    for alpha in ALPHAS:
        cfg = make_config(n_subcarriers=64, cp_len=8, num_bds=2, scheme="fo",
                          modulation="mfsk", alpha=[alpha] * 2)
        alloc = build_allocation(cfg)
        for snr in SNR_GRID:
            pe_th = theory.mfsk_error_averaged(cfg, alloc, snr)
            rng = cell_rng(11, f"acc-mfsk|{alpha}|{snr}")
            res = simulate_cell(cfg, snr, trials=TRIALS, rng=rng)
            pe_mc, se = _pe_and_se(res)
            rows.append(dict(modulation="mfsk", alpha=alpha, snr=snr,
                             pe_th=pe_th, pe_mc=pe_mc, se=se))
    return dict(rows=rows, wall_s=time.perf_counter() - t0)


def test_analytic_simulation_agreement(agreement_bundle):
    """Analytic and Monte Carlo error probabilities agree to 3 standard
    errors at every grid point, inside the runtime budget."""
    worst = 0.0
    ok = True
    for r in agreement_bundle["rows"]:
        z = abs(r["pe_mc"] - r["pe_th"]) / max(r["se"], 1e-12)
        worst = max(worst, z)
        if z > 3.0:
            ok = False
            print(f"  point {r['modulation']} alpha={r['alpha']} snr={r['snr']}: "
                  f"pe_th={r['pe_th']:.3e} pe_mc={r['pe_mc']:.3e} z={z:.2f}")
    runtime_ok = agreement_bundle["wall_s"] <= 600.0
    assert _report("analytic-simulation agreement",
                   ok and runtime_ok,
                   f"24 points, worst |z|={worst:.2f}, "
                   f"runtime {agreement_bundle['wall_s']:.0f}s (budget 600s)")
    assert ok and runtime_ok


def test_fig6_pmd_levels(agreement_bundle):
    """Missed-detection levels at 25 dB sit within a factor of 3 of the
    reported 1e-3 (alpha=1) and 1e-2 (alpha=0.25)."""
    rows = {r["alpha"]: r for r in agreement_bundle["rows"]
            if r["modulation"] == "ofsk" and r["snr"] == 25.0}
    pmd_hi = rows[1.0]["pmd_mc"]
    pmd_lo = rows[0.25]["pmd_mc"]
    ok1 = 1e-3 / 3 <= pmd_hi <= 1e-3 * 3
    ok2 = 1e-2 / 3 <= pmd_lo <= 1e-2 * 3
    assert _report("fig6 PMD trend", ok1 and ok2,
                   f"PMD(alpha=1)={pmd_hi:.2e} in [3.3e-4, 3e-3]: {ok1}; "
                   f"PMD(alpha=0.25)={pmd_lo:.2e} in [3.3e-3, 3e-2]: {ok2}")


def test_fig8_roc_detection_probability():
    """ROC detection probability at 20% false alarms meets the reported
    floors at 0, 5, and 10 dB."""
    cfg = make_config(n_subcarriers=64, cp_len=8, num_bds=6, scheme="fo",
                      modulation="ofsk", alpha=[0.25] * 6)
    floors = {0.0: 0.40, 5.0: 0.60, 10.0: 0.85}
    ok = True
    details = []
    for snr, floor in floors.items():
        rng = cell_rng(13, f"acc-roc|{snr}")
        recs = run_roc(cfg, snr, trials=TRIALS, rng=rng)
        pfa = np.array([r.value for r in recs if r.metric == "roc_pfa"])
        pd = np.array([r.value for r in recs if r.metric == "roc_pd"])
        order = np.argsort(pfa)
        pd_at = float(np.interp(0.2, pfa[order], pd[order]))
        details.append(f"PD@0.2({snr:.0f}dB)={pd_at:.3f}>={floor}")
        ok &= pd_at >= floor
    assert _report("fig8 ROC", ok, "; ".join(details))


def test_fig10_mfsk_reaches_1e3(agreement_bundle):
    """FO-MFSK at alpha=1 reaches BER <= 3e-3 in the 20-25 dB window."""
    vals = [r["pe_mc"] for r in agreement_bundle["rows"]
            if r["modulation"] == "mfsk" and r["alpha"] == 1.0
            and r["snr"] in (20.0, 25.0)]
    best = min(vals)
    assert _report("fig10 MFSK BER", best <= 3e-3,
                   f"min BER over 20-25 dB = {best:.2e} (target <= 3e-3)")


def test_sic_recovery_matches_fo():
    """Semi-orthogonal schemes with genie cancellation against their
    fully-orthogonal counterparts at 15-25 dB (95% CI overlap per point).

    The per-device ML re-detection leaves a cross-device residual floor in
    multi-device semi-orthogonal operation, so the curves cross the FO
    reference instead of riding it; points where that happens are reported.
    See the project notes for the quantitative analysis.
    """
    trials = 20_000
    ok = True
    details = []
    for mod in ("ofsk", "mfsk"):
        for snr in (15.0, 20.0, 25.0):
            so = make_config(n_subcarriers=64, cp_len=8, num_bds=2, scheme="so",
                             modulation=mod, alpha=[0.25] * 2)
            fo = make_config(n_subcarriers=64, cp_len=8, num_bds=2, scheme="fo",
                             modulation=mod, alpha=[0.25] * 2)
            gamma = None
            if mod == "ofsk":
                alloc = build_allocation(fo)
                sl = theory.ofsk_slice(fo, alloc, snr)
                gamma = theory.optimize_threshold(sl.h0_cf(), sl.h1_cf())
            so_res = simulate_cell(so, snr, trials=trials,
                                   rng=cell_rng(17, f"sic-so|{mod}|{snr}"), sic=True)
            fo_res = simulate_cell(fo, snr, trials=trials,
                                   rng=cell_rng(17, f"sic-fo|{mod}|{snr}"),
                                   gamma=gamma)
            pe_so, se_so = _pe_and_se(so_res)
            pe_fo, se_fo = _pe_and_se(fo_res)
            overlap = abs(pe_so - pe_fo) <= 1.96 * (se_so + se_fo)
            ok &= overlap
            details.append(f"{mod}@{snr:.0f}dB: so={pe_so:.4f} fo={pe_fo:.4f} "
                           f"{'overlap' if overlap else 'DISJOINT'}")
    assert _report("SIC recovery", ok, "; ".join(details))


def test_cfo_restoration():
    """Compensation at a 0.05 offset restores MFSK performance: the
    uncompensated error rate is at least 10x the compensated one, and the
    compensated rate matches the zero-offset run within CI."""
    cfg = make_config(n_subcarriers=64, cp_len=8, num_bds=2, scheme="fo",
                      modulation="mfsk", alpha=[1.0] * 2)
    frames = 1500
    clean = simulate_cfo_cell(cfg, 25.0, frames=frames,
                              rng=cell_rng(19, "cfo-clean"), eps0=0.0,
                              compensate=False)
    uncomp = simulate_cfo_cell(cfg, 25.0, frames=frames,
                               rng=cell_rng(19, "cfo-uncomp"), eps0=0.05,
                               compensate=False)
    comp = simulate_cfo_cell(cfg, 25.0, frames=frames,
                             rng=cell_rng(19, "cfo-comp"), eps0=0.05,
                             compensate=True)
    pe_clean, se_clean = _pe_and_se(clean)
    pe_un, _ = _pe_and_se(uncomp)
    pe_comp, se_comp = _pe_and_se(comp)
    ratio_ok = pe_un >= 10.0 * pe_comp
    ci_ok = abs(pe_comp - pe_clean) <= 1.96 * (se_comp + se_clean)
    assert _report("CFO restoration", ratio_ok and ci_ok,
                   f"uncomp={pe_un:.2e} comp={pe_comp:.2e} "
                   f"(x{pe_un / max(pe_comp, 1e-12):.1f} >= x10: {ratio_ok}); "
                   f"clean={pe_clean:.2e}, CI-match: {ci_ok}")


def test_sum_rate_ordering_and_level():
    """Scheme ordering and the ~0.65 Mbps total at 20 dB, alpha 0.25, eight
    devices, N=64."""
    totals = {}
    for scheme, mod in (("so", "ofsk"), ("so", "mfsk"),
                        ("fo", "ofsk"), ("fo", "mfsk")):
        cfg = make_config(n_subcarriers=64, cp_len=8, num_bds=8, scheme=scheme,
                          modulation=mod, alpha=[0.25] * 8)
        rb = sum_rate(cfg, 20.0, n_realizations=10_000,
                      rng=cell_rng(23, f"rate|{scheme}|{mod}"))
        totals[(scheme, mod)] = rb.r_total
    order_ok = (totals[("so", "ofsk")] > totals[("so", "mfsk")]
                > totals[("fo", "ofsk")] > totals[("fo", "mfsk")])
    level = totals[("so", "ofsk")] / 1e6
    level_ok = 0.65 * 0.7 <= level <= 0.65 * 1.3
    assert _report("sum-rate ordering", order_ok and level_ok,
                   f"SO-OFSK={level:.3f} Mbps (0.455..0.845), ordering "
                   + " > ".join(f"{k[0]}-{k[1]}={v / 1e6:.3f}"
                                for k, v in sorted(totals.items(),
                                                   key=lambda kv: -kv[1])))


def test_oracle_suites():
    """Exact oracles: inversion vs Erlang closed form, DFT shift/round-trip,
    genie cancellation, coherent BPSK against the Q-function, determinism."""
    # Gil-Pelaez vs regularized incomplete gamma
    worst = 0.0
    for n, s2 in ((8, 0.05), (32, 0.00316)):
        cf = ExponentialMixtureCF.erlang(n, 1.0 / s2)
        for frac in (0.5, 1.0, 1.8):
            x = frac * n * s2
            worst = max(worst, abs(cdf_gil_pelaez(cf, x)
                                   - special.gammainc(n, x / s2)))
    gp_ok = worst <= 1e-6

    # DFT round-trip and shift theorem
    rng = np.random.default_rng(0)
    cfg = make_config(n_subcarriers=64, cp_len=8)
    alloc = build_allocation(cfg)
    bits = rng.integers(0, 2, alloc.n_data)
    sym = modulate_primary(bits, alloc, cp_len=8)
    rt = np.max(np.abs(demodulate(sym.time, 8, 64) - sym.freq))
    shifted = sym.body * np.exp(2j * np.pi * 3 * np.arange(64) / 64)
    sh = np.max(np.abs(demodulate(shifted, 0, 64) - np.roll(sym.freq, 3)))
    dft_ok = rt <= 1e-9 and sh <= 1e-9

    # genie cancellation is exact
    h = rng.standard_normal(64) + 1j * rng.standard_normal(64)
    resid = run_sic(h * sym.freq, alloc, h, sym.freq)
    sic_ok = np.max(np.abs(resid)) <= 1e-10

    # coherent BPSK over a unit channel vs Q(sqrt(2 SNR))
    snr_db = 7.0
    sigma = 10 ** (-snr_db / 10.0)
    total = errors = 0
    ones = np.ones(64, dtype=complex)
    for _ in range(100_000 // alloc.n_data + 1):
        b = rng.integers(0, 2, alloc.n_data)
        s = modulate_primary(b, alloc, cp_len=8)
        noise = np.sqrt(sigma / 2) * (rng.standard_normal(64)
                                      + 1j * rng.standard_normal(64))
        det = detect_primary(s.freq + noise, alloc, ones)
        errors += int(np.sum(det != b))
        total += alloc.n_data
    expected = 0.5 * special.erfc(np.sqrt(10 ** (snr_db / 10)))
    se = np.sqrt(expected * (1 - expected) / total)
    bpsk_ok = abs(errors / total - expected) <= 3 * se

    # determinism
    cfg_d = make_config(n_subcarriers=32, cp_len=8, num_bds=1,
                        modulation="mfsk", alpha=[0.5])
    r1 = simulate_cell(cfg_d, 10.0, trials=2000, rng=cell_rng(3, "det"))
    r2 = simulate_cell(cfg_d, 10.0, trials=2000, rng=cell_rng(3, "det"))
    det_ok = (r1.devices[0].err_given0 == r2.devices[0].err_given0
              and r1.devices[0].err_given1 == r2.devices[0].err_given1
              and r1.primary_errors == r2.primary_errors)

    ok = gp_ok and dft_ok and sic_ok and bpsk_ok and det_ok
    assert _report("oracle suites", ok,
                   f"gil-pelaez worst={worst:.1e}<=1e-6: {gp_ok}; "
                   f"dft rt={rt:.1e} shift={sh:.1e}<=1e-9: {dft_ok}; "
                   f"sic residual<=1e-10: {sic_ok}; bpsk-vs-Q: {bpsk_ok}; "
                   f"seed determinism: {det_ok}")
