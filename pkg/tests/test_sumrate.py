import numpy as np
import pytest

from helpers import FLAT, make_cfg
from srlinksim.channel import ChannelRealization
from srlinksim.sumrate import SchemeMismatch, sum_rate


def test_unit_sinr_bin_gives_15_kbit():
    """A designated bin with |H|^2 = 1, alpha = 1, sigma^2 = 1 contributes
    15 kbit/s at 15 kHz spacing (log2(1+1) = 1 bit, no CP overhead)."""
    cfg = make_cfg(n_subcarriers=8, cp_len=0, num_bds=1, scheme="fo",
                   modulation="ofsk", alpha=[1.0], snr_reference="subcarrier")
    real = ChannelRealization(h_direct=np.array([1.0 + 0j]),
                              h_forward=np.ones((1, 1), dtype=complex),
                              h_back=np.ones((1, 1), dtype=complex))
    rb = sum_rate(cfg, 0.0, mode="single", realization=real)  # sigma^2 = 1
    # every device bin carries unit SINR; the device alphabet caps at one bit
    assert rb.r_bd == pytest.approx(15e3)
    # each data bin carries unit SINR as well: 4 bins at 15 kbit/s
    assert rb.r_primary == pytest.approx(4 * 15e3)
    assert rb.r_total == rb.r_bd + rb.r_primary


def test_absorbing_devices_grant_no_rate():
    cfg = make_cfg(n_subcarriers=16, cp_len=0, num_bds=1, scheme="fo",
                   modulation="ofsk", alpha=[0.0])
    rb = sum_rate(cfg, 20.0, mode="ensemble", n_realizations=50,
                  rng=np.random.default_rng(0))
    assert rb.r_bd == 0.0
    assert rb.r_total == rb.r_primary


def test_totals_add_exactly():
    cfg = make_cfg(n_subcarriers=64, cp_len=8, num_bds=4, scheme="so",
                   modulation="mfsk", alpha=[0.5] * 4)
    rb = sum_rate(cfg, 15.0, n_realizations=500, rng=np.random.default_rng(1))
    assert rb.r_total == rb.r_bd + rb.r_primary


def test_so_dominates_fo_under_matched_draws():
    for snr in (0.0, 10.0, 20.0):
        totals = {}
        for scheme in ("fo", "so"):
            cfg = make_cfg(n_subcarriers=64, cp_len=8, num_bds=4, scheme=scheme,
                           modulation="ofsk", alpha=[0.25] * 4)
            rb = sum_rate(cfg, snr, n_realizations=4000,
                          rng=np.random.default_rng(9))
            totals[scheme] = rb.r_total
        assert totals["so"] >= totals["fo"]


def test_fig16_point_and_ordering():
    vals = {}
    for scheme, mod in (("so", "ofsk"), ("so", "mfsk"), ("fo", "ofsk"), ("fo", "mfsk")):
        cfg = make_cfg(n_subcarriers=64, cp_len=8, num_bds=8, scheme=scheme,
                       modulation=mod, alpha=[0.25] * 8)
        rb = sum_rate(cfg, 20.0, n_realizations=6000, rng=np.random.default_rng(5))
        vals[(scheme, mod)] = rb.r_total
    assert vals[("so", "ofsk")] > vals[("so", "mfsk")] > vals[("fo", "ofsk")] > vals[("fo", "mfsk")]
    assert 0.65e6 * 0.7 <= vals[("so", "ofsk")] <= 0.65e6 * 1.3


def test_sic_lifts_shared_bin_rates():
    cfg = make_cfg(n_subcarriers=64, cp_len=8, num_bds=2, scheme="so",
                   modulation="ofsk", alpha=[0.5, 0.5])
    plain = sum_rate(cfg, 20.0, n_realizations=2000, rng=np.random.default_rng(3))
    clean = sum_rate(cfg, 20.0, n_realizations=2000, rng=np.random.default_rng(3),
                     sic=True)
    assert clean.r_bd >= plain.r_bd


def test_mode_errors():
    cfg = make_cfg(n_subcarriers=16, cp_len=4, num_bds=1)
    with pytest.raises(SchemeMismatch):
        sum_rate(cfg, 10.0, mode="single")
    with pytest.raises(SchemeMismatch):
        sum_rate(cfg, 10.0, mode="nonsense")
    bad = ChannelRealization(h_direct=np.array([1.0 + 0j]),
                             h_forward=np.ones((3, 1), dtype=complex),
                             h_back=np.ones((3, 1), dtype=complex))
    with pytest.raises(SchemeMismatch):
        sum_rate(cfg, 10.0, mode="single", realization=bad)
