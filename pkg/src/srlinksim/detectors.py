"""Receiver-side detection: coherent primary decisions, non-coherent device
detection, interference cancellation with ML re-detection, and CFO handling.

These are the single-symbol reference implementations; the Monte Carlo
engine vectorizes the same arithmetic across trials.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .allocation import AllocationMap, DeviceBins
from .ofdm import bpsk_demap


class InsufficientPilots(ValueError):
    """Not enough known symbols (or pilot bins) to estimate the offset."""


@dataclass(frozen=True)
class TestStatistics:
    """Per-device detection metrics: energy sum (on-off keying) or the pair
    of set energies (pairwise keying), plus the threshold used, if any."""

    device: int
    r: float | None = None
    r0: float | None = None
    r1: float | None = None
    threshold: float | None = None


@dataclass(frozen=True)
class DetectionOutcome:
    primary_bits: np.ndarray
    bd_bits: tuple[int, ...]
    stats: tuple[TestStatistics, ...]
    used_sic: bool = False


def detect_primary(freq: np.ndarray, alloc: AllocationMap,
                   h_d_est: np.ndarray) -> np.ndarray:
    """Coherent per-bin BPSK decisions on the data subcarriers."""
    bins = list(alloc.data_bins)
    decision = freq[..., bins] * np.conj(h_d_est[..., bins])
    return bpsk_demap(decision)


def receive_symbol(freq: np.ndarray, alloc: AllocationMap, h_d_est: np.ndarray,
                   gamma: float | None = None, *, sic: bool = False,
                   hb_freq=None, hf_freq=None, alphas=None, x_est=None,
                   cp_len: int = 0,
                   est_error_vars: tuple[float, float] = (0.0, 0.0),
                   rng: np.random.Generator | None = None) -> DetectionOutcome:
    """Full single-symbol receiver: primary decisions plus one bit per device.

    Without cancellation, OFSK devices use the energy threshold (gamma
    required) and MFSK devices the pairwise comparison. With sic=True the
    direct component is cancelled (genie estimates plus the configured error
    variances) and each device re-detected by ML against its two shift
    patterns, which needs the cascade inputs (hb_freq, hf_freq, alphas) and
    the symbol estimate.
    """
    primary = detect_primary(freq, alloc, h_d_est)
    bd_bits: list[int] = []
    stats: list[TestStatistics] = []
    if sic:
        if x_est is None:
            x_est = np.zeros(alloc.n, dtype=np.complex128)
            x_est[list(alloc.data_bins)] = np.where(primary == 0, 1.0, -1.0)
        residual = run_sic(freq, alloc, h_d_est, x_est,
                           est_error_vars=est_error_vars, rng=rng)
        for d in alloc.devices:
            bit = ml_detect_bd(residual, alloc, d.index, hb_freq[d.index - 1],
                               hf_freq[d.index - 1], alphas[d.index - 1],
                               x_est, cp_len)
            bd_bits.append(bit)
            stats.append(TestStatistics(device=d.index))
    else:
        for d in alloc.devices:
            if d.bins0:
                bit, st = detect_mfsk(freq, alloc, d.index)
            else:
                if gamma is None:
                    raise ValueError("energy detection requires a threshold")
                bit, st = detect_ofsk(freq, alloc, d.index, gamma)
            bd_bits.append(bit)
            stats.append(st)
    return DetectionOutcome(primary_bits=primary, bd_bits=tuple(bd_bits),
                            stats=tuple(stats), used_sic=sic)


def ls_channel_estimate(freq: np.ndarray, x_known: np.ndarray, bins) -> np.ndarray:
    """Least-squares per-bin channel estimate from known symbols.

    Optional alternative to genie knowledge; valid on bins where x_known is
    nonzero.
    """
    bins = list(bins)
    return freq[..., bins] / x_known[..., bins]


def detect_ofsk(freq: np.ndarray, alloc: AllocationMap, p: int, gamma: float,
                use_shared: bool = False) -> tuple[int, TestStatistics]:
    """Energy threshold test over the device's designated subcarriers.

    Pre-cancellation the semi-orthogonal read set is the interference-free
    null bin(s) only; with use_shared=True the shared data positions join
    the sum (intended for a cancelled residual). A statistic exactly equal
    to the threshold decides absence.
    """
    d = alloc.device(p)
    bins = list(d.bins1)
    if use_shared:
        bins = sorted(set(bins) | set(d.shared1))
    r = float(np.sum(np.abs(freq[..., bins]) ** 2, axis=-1))
    bit = int(r > gamma)
    return bit, TestStatistics(device=p, r=r, threshold=gamma)


def detect_mfsk(freq: np.ndarray, alloc: AllocationMap, p: int,
                use_shared: bool = False) -> tuple[int, TestStatistics]:
    """Pairwise energy comparison over the device's two designated sets.

    The two sets stay disjoint even when shared data positions are included
    (overlapping positions would cancel from the comparison anyway). Ties
    decide bit 0.
    """
    d = alloc.device(p)
    set0, set1 = set(d.bins0), set(d.bins1)
    if use_shared:
        s0, s1 = set(d.shared0), set(d.shared1)
        set0 |= s0 - s1
        set1 |= s1 - s0
    r0 = float(np.sum(np.abs(freq[..., sorted(set0)]) ** 2, axis=-1))
    r1 = float(np.sum(np.abs(freq[..., sorted(set1)]) ** 2, axis=-1))
    bit = int(r1 > r0)
    return bit, TestStatistics(device=p, r0=r0, r1=r1)


def run_sic(freq: np.ndarray, alloc: AllocationMap, h_d_est: np.ndarray,
            x_est: np.ndarray, est_error_vars: tuple[float, float] = (0.0, 0.0),
            rng: np.random.Generator | None = None) -> np.ndarray:
    """Subtract the reconstructed direct-link component from the data bins.

    With zero error variances the inputs are used as-is (genie estimates
    cancel the direct term exactly); with nonzero variances, complex
    Gaussian estimation errors of the given variances corrupt the channel
    and symbol estimates before reconstruction, leaving the corresponding
    residual terms behind.
    """
    var_h, var_x = est_error_vars
    if (var_h or var_x) and rng is None:
        raise ValueError("rng required when estimation-error variances are nonzero")
    bins = list(alloc.data_bins)
    h = np.asarray(h_d_est[..., bins], dtype=np.complex128)
    x = np.asarray(x_est[..., bins], dtype=np.complex128)
    if var_h:
        h = h + np.sqrt(var_h / 2) * (rng.standard_normal(h.shape)
                                      + 1j * rng.standard_normal(h.shape))
    if var_x:
        x = x + np.sqrt(var_x / 2) * (rng.standard_normal(x.shape)
                                      + 1j * rng.standard_normal(x.shape))
    residual = np.array(freq, dtype=np.complex128, copy=True)
    residual[..., bins] -= h * x
    return residual


def ml_patterns(alloc: AllocationMap, device: DeviceBins, hb_freq: np.ndarray,
                hf_freq: np.ndarray, alpha: complex, x_est: np.ndarray,
                cp_len: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(read bins, candidate pattern for bit 0, for bit 1).

    The candidate for bit b places alpha * H_b[k] * H_f[k-s_b] * x[k-s_b]
    on every bin the shifted data spectrum reaches (circularly), including
    the phase the CP-inclusive shift contributes after CP removal.
    """
    n = alloc.n
    x_full = np.asarray(x_est, dtype=np.complex128)
    patterns = []
    land_all = set()
    for s in (device.shift_bit0, device.shift_bit1):
        land_all |= {(k + s) % n for k in alloc.data_bins}
    read = np.array(sorted(land_all), dtype=int)
    for s in (device.shift_bit0, device.shift_bit1):
        src = (read - s) % n
        phase = np.exp(2j * np.pi * s * cp_len / n)
        patterns.append(alpha * phase * hb_freq[..., read] * hf_freq[..., src]
                        * x_full[..., src])
    return read, patterns[0], patterns[1]


def ml_detect_bd(residual: np.ndarray, alloc: AllocationMap, p: int,
                 hb_freq: np.ndarray, hf_freq: np.ndarray, alpha: complex,
                 x_est: np.ndarray, cp_len: int) -> int:
    """Pick the shift hypothesis whose reconstructed pattern best matches the
    cancelled residual (least squares over the union of landing bins)."""
    d = alloc.device(p)
    read, s0, s1 = ml_patterns(alloc, d, hb_freq, hf_freq, alpha, x_est, cp_len)
    m0 = float(np.sum(np.abs(residual[..., read] - s0) ** 2, axis=-1))
    m1 = float(np.sum(np.abs(residual[..., read] - s1) ** 2, axis=-1))
    return int(m1 < m0)


# ---------------------------------------------------------------------------
# Carrier frequency offset
# ---------------------------------------------------------------------------

def compensate_cfo(samples: np.ndarray, eps_hat: float, n: int,
                   symbol_index: int = 0, cp_len: int = 0) -> np.ndarray:
    """Inverse of the injection ramp; residual offset eps0 - eps_hat remains."""
    samples = np.asarray(samples, dtype=np.complex128)
    if eps_hat == 0.0:
        return samples.copy()
    m = np.arange(samples.shape[-1]) + symbol_index * (n + cp_len)
    return samples * np.exp(-2j * np.pi * eps_hat * m / n)


def _projection_metric(symbols, pilots_time, n, eps_grid):
    """Energy of each de-rotated symbol projected onto its known waveform.

    The per-symbol inner product <x_i, theta^H(eps) y_i> is phase-coherent
    across the subcarriers (the data values cancel against the pilot), so
    alignment is detected even when the band is fully occupied. Per-symbol
    constant phases drop out of the magnitude.
    """
    z = np.stack([np.conj(np.asarray(p)) * np.asarray(s)
                  for p, s in zip(pilots_time, symbols)])
    idx = np.arange(z.shape[-1])
    basis = np.exp(-2j * np.pi * np.multiply.outer(np.asarray(eps_grid), idx) / n)
    proj = z @ basis.T
    return np.sum(np.abs(proj) ** 2, axis=0)


def _pilot_variance_metric(symbols, pilots, pilot_bins, n, cp_len, eps):
    """Phase-alignment (normalized variance) of de-rotated pilot ratios.

    At the true offset the per-symbol pilot ratios differ only by noise, so
    the inter-symbol sample variance normalized by total energy is minimal;
    a residual offset spins the ratios through the inter-symbol phase ramp.
    """
    acc = None
    acc2 = None
    for i, (sym, pil) in enumerate(zip(symbols, pilots)):
        derot = compensate_cfo(np.asarray(sym), eps, n, symbol_index=i, cp_len=cp_len)
        y = np.fft.fft(derot[cp_len:cp_len + n]) / np.sqrt(n)
        r = y[pilot_bins] / np.asarray(pil)[pilot_bins]
        acc = r if acc is None else acc + r
        a2 = np.abs(r) ** 2
        acc2 = a2 if acc2 is None else acc2 + a2
    m = len(symbols)
    with np.errstate(invalid="ignore", divide="ignore"):
        frac = np.abs(acc) ** 2 / (m * acc2)
    return float(np.mean(1.0 - np.nan_to_num(frac, nan=0.0)))


def estimate_cfo(symbols, pilots, n: int, cp_len: int,
                 grid_step: float = 1e-3, refine_tol: float = 1e-5,
                 scan_step: float = 5e-3) -> float:
    """Normalized CFO estimate from a batch of known symbols.

    Single-symbol projection magnitudes are blind below roughly a bin, so
    the projection grid only seeds the search; the pilot phase-alignment
    metric (whose inter-symbol coherence resolves fine offsets) is scanned
    across the whole range and golden-sectioned to the requested tolerance.
    """
    from .ofdm import synthesize

    if len(symbols) < 2:
        raise InsufficientPilots("need at least two symbols")
    if len(pilots) != len(symbols):
        raise InsufficientPilots("one known pilot vector per received symbol")
    pilot_bins = np.flatnonzero(np.abs(np.asarray(pilots[0])) > 0)
    if pilot_bins.size == 0:
        raise InsufficientPilots("pilot vector has no occupied bins")

    def fvar(e: float) -> float:
        return _pilot_variance_metric(symbols, pilots, pilot_bins, n, cp_len, e)

    pilots_time = [synthesize(np.asarray(p), cp_len).time for p in pilots]
    grid = np.arange(-0.5, 0.5, grid_step)
    metric = _projection_metric(symbols, pilots_time, n, grid)
    seed = float(grid[int(np.argmax(metric))])

    scan = np.arange(-0.5, 0.5, scan_step)
    fscan = [fvar(float(e)) for e in scan]
    center = float(scan[int(np.argmin(fscan))])
    if fvar(seed) < np.min(fscan):
        center = seed

    lo = max(center - scan_step, -0.5)
    hi = min(center + scan_step, 0.5 - 1e-12)
    res = optimize.minimize_scalar(fvar, bounds=(lo, hi), method="bounded",
                                   options={"xatol": refine_tol})
    return float(res.x)
