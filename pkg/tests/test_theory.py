import numpy as np
import pytest

from srlinksim.allocation import build_allocation
from srlinksim.config import ChannelProfile, make_config
from srlinksim.gilpelaez import ExponentialMixtureCF
from srlinksim import theory


def test_toy_threshold_crossover():
    """H0 ~ Exp(rate lam), H1 ~ Exp(rate lam/2): the error-optimal threshold
    sits at the likelihood crossover 2 ln 2 / lam."""
    lam = 3.0
    cf0 = ExponentialMixtureCF(rates=(lam,))
    cf1 = ExponentialMixtureCF(rates=(lam / 2,))
    gamma = theory.optimize_threshold(cf0, cf1)
    assert gamma == pytest.approx(2 * np.log(2) / lam, rel=1e-4)


def test_pfa_target_mode():
    cfg = make_config(n_subcarriers=64, cp_len=8, num_bds=1, alpha=0.25)
    alloc = build_allocation(cfg)
    sl = theory.ofsk_slice(cfg, alloc, 25.0)
    gamma = theory.optimize_threshold(sl.h0_cf(), sl.h1_cf(), pfa_target=1e-3)
    _, pfa = theory.ofsk_error_point(sl, gamma)
    assert abs(pfa - 1e-3) < 1e-5


def test_gamma_zero_and_large():
    cfg = make_config(n_subcarriers=64, cp_len=8, num_bds=1, alpha=0.5)
    alloc = build_allocation(cfg)
    sl = theory.ofsk_slice(cfg, alloc, 10.0)
    pmd, pfa = theory.ofsk_error_point(sl, 0.0)
    assert (pmd, pfa) == (0.0, 1.0)
    pmd, pfa = theory.ofsk_error_point(sl, 400.0 * sl.h1_cf().mean)
    assert pfa == pytest.approx(0.0, abs=1e-9)
    assert pmd == pytest.approx(1.0, abs=1e-6)


def test_pfa_pmd_monotone_in_gamma():
    cfg = make_config(n_subcarriers=64, cp_len=8, num_bds=1, alpha=0.5)
    alloc = build_allocation(cfg)
    sl = theory.ofsk_slice(cfg, alloc, 10.0)
    gammas = np.linspace(0.05, 4.0, 9) * sl.h0_cf().mean
    pts = [theory.ofsk_error_point(sl, float(g)) for g in gammas]
    pmds = [p for p, _ in pts]
    pfas = [f for _, f in pts]
    assert all(np.diff(pmds) >= -1e-9)
    assert all(np.diff(pfas) <= 1e-9)


def test_marginalization_convergence_guard():
    """Doubling the gain-quadrature nodes moves the result below 1e-7."""
    cfg = make_config(n_subcarriers=64, cp_len=8, num_bds=1, alpha=1.0)
    alloc = build_allocation(cfg)
    sl = theory.ofsk_slice(cfg, alloc, 25.0)
    gamma, _, _, _ = theory.ofsk_operating_point(sl)
    p1, _ = theory.ofsk_error_point(sl, gamma, refine=1)
    p2, _ = theory.ofsk_error_point(sl, gamma, refine=2)
    assert abs(p1 - p2) < 1e-7


def test_h1_model_variants_against_quick_mc():
    """The eigenvalue H1 model tracks the simulated statistic; the iid
    per-bin reading visibly misses once the forward link is frequency
    selective across the designated comb."""
    rng = np.random.default_rng(42)
    prof = ChannelProfile(direct_taps=4, forward_taps=4, backscatter_taps=1)
    cfg = make_config(n_subcarriers=64, cp_len=8, num_bds=1, alpha=0.25,
                      channel_profile=prof, snr_reference="subcarrier")
    alloc = build_allocation(cfg)
    sl = theory.ofsk_slice(cfg, alloc, 15.0)
    gamma, pmd_eig, _, _ = theory.ofsk_operating_point(sl)
    pmd_iid, _ = theory.ofsk_error_point(
        theory.ofsk_slice(cfg, alloc, 15.0, h1_model="iid"), gamma)

    d = alloc.device(1)
    src = np.array([(k - d.shift_bit1) % 64 for k in d.bins1])
    taps = (rng.standard_normal((120_000, 4)) + 1j * rng.standard_normal((120_000, 4))) / np.sqrt(8)
    fmat = np.exp(-2j * np.pi * np.outer(src, np.arange(4)) / 64)
    hf = taps @ fmat.T
    hb = (rng.standard_normal(120_000) + 1j * rng.standard_normal(120_000)) * np.sqrt(0.5)
    x = rng.choice([-1.0, 1.0], size=hf.shape)
    sig2 = cfg.sigma_w(15.0)
    w = (rng.standard_normal(hf.shape) + 1j * rng.standard_normal(hf.shape)) * np.sqrt(sig2 / 2)
    r1 = np.sum(np.abs(0.25 * hb[:, None] * hf * x + w) ** 2, axis=1)
    pmd_mc = np.mean(r1 <= gamma)
    se = np.sqrt(pmd_mc * (1 - pmd_mc) / r1.size)
    assert abs(pmd_mc - pmd_eig) < 3 * se
    assert abs(pmd_mc - pmd_iid) > 10 * se


def test_aggregate_model_exists_and_differs():
    cfg = make_config(n_subcarriers=64, cp_len=8, num_bds=1, alpha=0.5)
    alloc = build_allocation(cfg)
    sl_agg = theory.ofsk_slice(cfg, alloc, 15.0, h1_model="aggregate")
    sl_eig = theory.ofsk_slice(cfg, alloc, 15.0)
    gamma = 0.5 * sl_eig.h1_cf().mean
    pmd_agg, _ = theory.ofsk_error_point(sl_agg, gamma)
    pmd_eig, _ = theory.ofsk_error_point(sl_eig, gamma)
    assert pmd_agg != pytest.approx(pmd_eig, rel=0.05)


def test_mfsk_symmetric_sets_give_half():
    case = theory.MfskBitCase(own_sources=(), own_sign=1, contam_sources=(),
                              noise_bins_own_sign=6, noise_bins_other=6)
    sl = theory.MfskSlice(sigma_w=0.3, alpha_sq=1.0, n=64,
                          forward_powers=(1.0,), cases=(case, case))
    cf = sl.diff_cf_given_g(case, 1.0)
    from srlinksim.gilpelaez import cdf_gil_pelaez
    assert cdf_gil_pelaez(cf, 0.0) == pytest.approx(0.5, abs=1e-8)


def test_mfsk_error_decreases_with_snr():
    cfg = make_config(n_subcarriers=64, cp_len=8, num_bds=2, modulation="mfsk",
                      alpha=[0.5, 0.5])
    alloc = build_allocation(cfg)
    pes = [theory.mfsk_error_averaged(cfg, alloc, snr) for snr in (0.0, 10.0, 20.0)]
    assert pes[0] > pes[1] > pes[2]
    assert pes[2] < 1e-2


def test_error_curves_shape():
    cfg = make_config(n_subcarriers=64, cp_len=8, num_bds=1, alpha=0.5)
    alloc = build_allocation(cfg)
    rows = theory.error_curves(cfg, alloc, (5.0, 15.0))
    assert len(rows) == 2
    assert {"pmd", "pfa", "pe", "gamma_opt"} <= set(rows[0])


def test_multitap_backscatter_rejected():
    prof = ChannelProfile(backscatter_taps=2, direct_taps=4, forward_taps=2)
    cfg = make_config(cp_len=8, channel_profile=prof)
    alloc = build_allocation(cfg)
    with pytest.raises(ValueError):
        theory.ofsk_slice(cfg, alloc, 10.0)
