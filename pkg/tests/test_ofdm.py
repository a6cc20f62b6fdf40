import numpy as np
import pytest

from srlinksim.allocation import build_allocation
from helpers import make_cfg as make_config
from srlinksim.ofdm import (LengthMismatch, ShortBuffer, bpsk_map, demodulate,
                            modulate_primary, synthesize)


def dft_sum_oracle(freq):
    """Direct evaluation of the synthesis sum, no FFT."""
    n = len(freq)
    out = np.zeros(n, dtype=complex)
    for m in range(n):
        for k in range(n):
            out[m] += freq[k] * np.exp(2j * np.pi * k * m / n)
    return out / np.sqrt(n)


def test_all_zero_bits_fo_ofsk_map():
    cfg = make_config(n_subcarriers=8, cp_len=0, num_bds=1, scheme="fo",
                      modulation="ofsk")
    alloc = build_allocation(cfg)
    sym = modulate_primary(np.zeros(4, dtype=int), alloc, cp_len=0)
    assert np.allclose(sym.freq, [1, 0, 1, 0, 1, 0, 1, 0])


def test_parseval():
    rng = np.random.default_rng(1)
    cfg = make_config(n_subcarriers=64, cp_len=8, num_bds=1)
    alloc = build_allocation(cfg)
    bits = rng.integers(0, 2, alloc.n_data)
    sym = modulate_primary(bits, alloc, cp_len=8)
    assert np.linalg.norm(sym.body) ** 2 == pytest.approx(
        np.linalg.norm(sym.freq) ** 2, rel=1e-10)


def test_modulate_against_dft_sum_oracle():
    cfg = make_config(n_subcarriers=8, cp_len=0, num_bds=3, scheme="so",
                      modulation="ofsk", alpha=[1, 1, 1])
    alloc = build_allocation(cfg)
    assert alloc.n_data == 5
    bits = np.array([1, 0, 1, 1, 0])
    sym = modulate_primary(bits, alloc, cp_len=0)
    assert np.max(np.abs(sym.time - dft_sum_oracle(sym.freq))) < 1e-12


def test_roundtrip_identity():
    rng = np.random.default_rng(2)
    cfg = make_config(n_subcarriers=64, cp_len=8)
    alloc = build_allocation(cfg)
    bits = rng.integers(0, 2, alloc.n_data)
    sym = modulate_primary(bits, alloc, cp_len=8)
    rec = demodulate(sym.time, 8, 64)
    assert np.max(np.abs(rec - sym.freq)) < 1e-10


def test_pure_tone_bin():
    n = 64
    k0 = 5
    tone = np.exp(2j * np.pi * k0 * np.arange(n) / n)
    freq = demodulate(tone, 0, n)
    assert abs(freq[k0] - np.sqrt(n)) < 1e-9
    others = np.delete(np.abs(freq), k0)
    assert np.max(others) < 1e-9


def test_cp_channel_equals_per_bin_multiplication():
    """CP-prefixed symbol through a short channel: post-DFT output equals the
    circular-convolution (per-bin multiplication) oracle."""
    rng = np.random.default_rng(3)
    n, cp = 64, 8
    cfg = make_config(n_subcarriers=n, cp_len=cp)
    alloc = build_allocation(cfg)
    bits = rng.integers(0, 2, alloc.n_data)
    sym = modulate_primary(bits, alloc, cp_len=cp)
    taps = rng.standard_normal(3) + 1j * rng.standard_normal(3)
    out = np.convolve(sym.time, taps)[:sym.time.size]
    freq = demodulate(out, cp, n)
    h = np.fft.fft(taps, n)
    assert np.max(np.abs(freq - h * sym.freq)) < 1e-9


def test_shift_theorem():
    """Time-domain multiplication by a bin-aligned exponential circularly
    shifts the demodulated spectrum."""
    rng = np.random.default_rng(4)
    n = 64
    cfg = make_config(n_subcarriers=n, cp_len=0)
    alloc = build_allocation(cfg)
    bits = rng.integers(0, 2, alloc.n_data)
    sym = modulate_primary(bits, alloc, cp_len=0)
    for shift in (1, 3, 17):
        shifted = sym.time * np.exp(2j * np.pi * shift * np.arange(n) / n)
        freq = demodulate(shifted, 0, n)
        assert np.max(np.abs(freq - np.roll(sym.freq, shift))) < 1e-9


def test_bpsk_mapping_convention():
    assert np.allclose(bpsk_map(np.array([0, 1])), [1.0, -1.0])


def test_length_errors():
    cfg = make_config(n_subcarriers=8, cp_len=0)
    alloc = build_allocation(cfg)
    with pytest.raises(LengthMismatch):
        modulate_primary(np.zeros(3, dtype=int), alloc, cp_len=0)
    with pytest.raises(ShortBuffer):
        demodulate(np.zeros(10, dtype=complex), 4, 8)


def test_synthesize_batch_axis():
    rng = np.random.default_rng(5)
    freq = rng.standard_normal((5, 16)) + 1j * rng.standard_normal((5, 16))
    sym = synthesize(freq, 4)
    assert sym.time.shape == (5, 20)
    rec = demodulate(sym.time, 4, 16)
    assert np.max(np.abs(rec - freq)) < 1e-10
