"""Vectorized Monte Carlo engine: full transmit/channel/receive trials.

Each trial synthesizes one OFDM symbol, runs it through freshly drawn
multipath links and every device's reflection, adds receiver noise, and
detects both the primary bits and the device bits. Everything is batched
with numpy across trials; the arithmetic matches the single-symbol
reference functions in the ofdm/backscatter/channel/detectors modules.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .allocation import AllocationMap, build_allocation
from .config import OFSK, ValidatedConfig
from .ofdm import bpsk_map

BATCH = 1 << 14


@dataclass
class DeviceCounts:
    """Conditional error bookkeeping for one device."""

    sent0: int = 0
    sent1: int = 0
    err_given0: int = 0
    err_given1: int = 0

    @property
    def pfa(self) -> float:
        return self.err_given0 / self.sent0 if self.sent0 else 0.0

    @property
    def pmd(self) -> float:
        return self.err_given1 / self.sent1 if self.sent1 else 0.0

    @property
    def pe(self) -> float:
        return 0.5 * (self.pfa + self.pmd)

    @property
    def bits(self) -> int:
        return self.sent0 + self.sent1

    @property
    def errors(self) -> int:
        return self.err_given0 + self.err_given1


@dataclass
class CellResult:
    trials: int
    primary_bits: int = 0
    primary_errors: int = 0
    devices: list[DeviceCounts] = field(default_factory=list)
    # Raw per-trial statistics (ROC mode): device -> (stat array | pair, bits)
    stats: dict | None = None
    eps_abs_err: np.ndarray | None = None

    @property
    def primary_ber(self) -> float:
        return self.primary_errors / self.primary_bits if self.primary_bits else 0.0

    def device_mean(self, attr: str) -> float:
        return float(np.mean([getattr(d, attr) for d in self.devices]))


def _cn(rng: np.random.Generator, shape, variance) -> np.ndarray:
    s = np.sqrt(np.asarray(variance) / 2.0)
    return s * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def _draw_taps(rng, powers, shape) -> np.ndarray:
    p = np.asarray(powers, dtype=float)
    return _cn(rng, shape + p.shape, p)


def _conv_taps(x: np.ndarray, taps: np.ndarray) -> np.ndarray:
    """Linear convolution truncated to the input length, batched."""
    out = taps[..., 0:1] * x
    for l in range(1, taps.shape[-1]):
        out[..., l:] += taps[..., l:l + 1] * x[..., :-l]
    return out


def _device_wave(shifts: np.ndarray, alpha: complex, n_samples: int, n: int) -> np.ndarray:
    idx = np.arange(n_samples)
    return alpha * np.exp(2j * np.pi * shifts[..., None] * idx / n)


@dataclass(frozen=True)
class _MlIndex:
    read: np.ndarray
    src0: np.ndarray
    src1: np.ndarray
    phase0: complex
    phase1: complex


def _ml_index(alloc: AllocationMap, p: int, cp_len: int) -> _MlIndex:
    d = alloc.device(p)
    n = alloc.n
    land = set()
    for s in (d.shift_bit0, d.shift_bit1):
        land |= {(k + s) % n for k in alloc.data_bins}
    read = np.array(sorted(land), dtype=int)
    return _MlIndex(
        read=read,
        src0=(read - d.shift_bit0) % n,
        src1=(read - d.shift_bit1) % n,
        phase0=np.exp(2j * np.pi * d.shift_bit0 * cp_len / n),
        phase1=np.exp(2j * np.pi * d.shift_bit1 * cp_len / n),
    )


def _transmit_batch(config: ValidatedConfig, alloc: AllocationMap, b: int,
                    sigma_w: float, rng: np.random.Generator):
    """One batch of single-symbol trials: returns everything the detectors need."""
    n, cp = config.n_subcarriers, config.cp_len
    n_samp = n + cp
    data = list(alloc.data_bins)
    powers = config.channel_profile.resolved_powers()

    bits = rng.integers(0, 2, size=(b, alloc.n_data))
    x_freq = np.zeros((b, n), dtype=np.complex128)
    x_freq[:, data] = bpsk_map(bits)
    body = np.fft.ifft(x_freq, axis=-1) * np.sqrt(n)
    time = np.concatenate([body[:, n - cp:], body], axis=-1) if cp else body

    h_d = _draw_taps(rng, powers["direct"], (b,))
    h_f = _draw_taps(rng, powers["forward"], (b, config.num_bds))
    h_b = _draw_taps(rng, powers["backscatter"], (b, config.num_bds))
    bd_bits = rng.integers(0, 2, size=(b, config.num_bds))

    y = _conv_taps(time, h_d)
    for p in range(config.num_bds):
        d = alloc.device(p + 1)
        incident = _conv_taps(time, h_f[:, p])
        shifts = np.where(bd_bits[:, p] == 1, d.shift_bit1, d.shift_bit0)
        reflected = incident * _device_wave(shifts, config.alpha[p], n_samp, n)
        y += _conv_taps(reflected, h_b[:, p])
    y += _cn(rng, y.shape, sigma_w)
    return bits, x_freq, bd_bits, h_d, h_f, h_b, y


def simulate_cell(config: ValidatedConfig, snr_db: float, *, trials: int,
                  rng: np.random.Generator, sic: bool = False,
                  gamma: float | None = None, collect_stats: bool = False,
                  batch: int = BATCH) -> CellResult:
    """Monte Carlo over single-symbol trials for one parameter cell.

    sic=True runs the cancellation + ML re-detection pipeline (the
    semi-orthogonal receiver); otherwise OFSK uses the energy threshold
    (gamma required) and MFSK the pairwise comparison on the designated
    interference-free sets.
    """
    alloc = build_allocation(config)
    n, cp = config.n_subcarriers, config.cp_len
    data = list(alloc.data_bins)
    sigma_w = config.sigma_w(snr_db)
    if config.modulation == OFSK and not sic and gamma is None:
        raise ValueError("OFSK energy detection requires a threshold")

    result = CellResult(trials=trials, devices=[DeviceCounts() for _ in range(config.num_bds)])
    if collect_stats:
        result.stats = {p + 1: {"stat": [], "bits": []} for p in range(config.num_bds)}
    ml_idx = [_ml_index(alloc, p + 1, cp) for p in range(config.num_bds)] if sic else None

    done = 0
    while done < trials:
        b = min(batch, trials - done)
        bits, x_freq, bd_bits, h_d, h_f, h_b, y = _transmit_batch(
            config, alloc, b, sigma_w, rng)
        yf = np.fft.fft(y[:, cp:cp + n], axis=-1) / np.sqrt(n)
        hd_freq = np.fft.fft(h_d, n=n, axis=-1)

        # Coherent primary detection with genie channel knowledge.
        dec = np.real(yf[:, data] * np.conj(hd_freq[:, data]))
        result.primary_errors += int(np.sum((dec < 0) != (bits == 1)))
        result.primary_bits += b * alloc.n_data

        if sic:
            var_h, var_x = config.est_error_var_h, config.est_error_var_x
            h_est = hd_freq[:, data] + (_cn(rng, (b, len(data)), var_h) if var_h else 0.0)
            x_est_data = x_freq[:, data] + (_cn(rng, (b, len(data)), var_x) if var_x else 0.0)
            residual = yf.copy()
            residual[:, data] -= h_est * x_est_data
            x_est = np.zeros_like(x_freq)
            x_est[:, data] = x_est_data
            hf_freq = np.fft.fft(h_f, n=n, axis=-1)
            hb_freq = np.fft.fft(h_b, n=n, axis=-1)
            for p in range(config.num_bds):
                mi = ml_idx[p]
                casc = config.alpha[p] * hb_freq[:, p]
                pat0 = mi.phase0 * casc[:, mi.read] * hf_freq[:, p][:, mi.src0] * x_est[:, mi.src0]
                pat1 = mi.phase1 * casc[:, mi.read] * hf_freq[:, p][:, mi.src1] * x_est[:, mi.src1]
                m0 = np.sum(np.abs(residual[:, mi.read] - pat0) ** 2, axis=-1)
                m1 = np.sum(np.abs(residual[:, mi.read] - pat1) ** 2, axis=-1)
                det = (m1 < m0).astype(int)
                _tally(result.devices[p], bd_bits[:, p], det)
        elif config.modulation == OFSK:
            for p in range(config.num_bds):
                d = alloc.device(p + 1)
                r = np.sum(np.abs(yf[:, list(d.bins1)]) ** 2, axis=-1)
                det = (r > gamma).astype(int)
                _tally(result.devices[p], bd_bits[:, p], det)
                if collect_stats:
                    result.stats[p + 1]["stat"].append(r)
                    result.stats[p + 1]["bits"].append(bd_bits[:, p].copy())
        else:
            for p in range(config.num_bds):
                d = alloc.device(p + 1)
                r0 = np.sum(np.abs(yf[:, list(d.bins0)]) ** 2, axis=-1)
                r1 = np.sum(np.abs(yf[:, list(d.bins1)]) ** 2, axis=-1)
                det = (r1 > r0).astype(int)
                _tally(result.devices[p], bd_bits[:, p], det)
                if collect_stats:
                    result.stats[p + 1]["stat"].append(np.stack([r0, r1], axis=-1))
                    result.stats[p + 1]["bits"].append(bd_bits[:, p].copy())
        done += b

    if collect_stats:
        for rec in result.stats.values():
            rec["stat"] = np.concatenate(rec["stat"], axis=0)
            rec["bits"] = np.concatenate(rec["bits"], axis=0)
    return result


def simulate_sa_baseline(config: ValidatedConfig, snr_db: float, *, trials: int,
                         rng: np.random.Generator, batch: int = BATCH) -> CellResult:
    """Simultaneous-access baseline: every device reflects on-off with no
    spectral shift, so all device energy sits on the occupied band.

    The receiver cancels the (genie) direct component, then decides each
    device's bit by least squares against that device's own on/off patterns,
    treating the other devices as noise.
    """
    alloc = build_allocation(config)
    n, cp = config.n_subcarriers, config.cp_len
    data = list(alloc.data_bins)
    sigma_w = config.sigma_w(snr_db)
    powers = config.channel_profile.resolved_powers()
    result = CellResult(trials=trials, devices=[DeviceCounts() for _ in range(config.num_bds)])

    done = 0
    while done < trials:
        b = min(batch, trials - done)
        bits = rng.integers(0, 2, size=(b, alloc.n_data))
        x_freq = np.zeros((b, n), dtype=np.complex128)
        x_freq[:, data] = bpsk_map(bits)
        body = np.fft.ifft(x_freq, axis=-1) * np.sqrt(n)
        time = np.concatenate([body[:, n - cp:], body], axis=-1) if cp else body

        h_d = _draw_taps(rng, powers["direct"], (b,))
        h_f = _draw_taps(rng, powers["forward"], (b, config.num_bds))
        h_b = _draw_taps(rng, powers["backscatter"], (b, config.num_bds))
        bd_bits = rng.integers(0, 2, size=(b, config.num_bds))

        y = _conv_taps(time, h_d)
        for p in range(config.num_bds):
            incident = _conv_taps(time, h_f[:, p])
            reflected = incident * (config.alpha[p] * bd_bits[:, p, None])
            y += _conv_taps(reflected, h_b[:, p])
        y += _cn(rng, y.shape, sigma_w)

        yf = np.fft.fft(y[:, cp:cp + n], axis=-1) / np.sqrt(n)
        hd_freq = np.fft.fft(h_d, n=n, axis=-1)
        dec = np.real(yf[:, data] * np.conj(hd_freq[:, data]))
        result.primary_errors += int(np.sum((dec < 0) != (bits == 1)))
        result.primary_bits += b * alloc.n_data

        residual = yf[:, data] - hd_freq[:, data] * x_freq[:, data]
        hf_freq = np.fft.fft(h_f, n=n, axis=-1)[:, :, data]
        hb_freq = np.fft.fft(h_b, n=n, axis=-1)[:, :, data]
        for p in range(config.num_bds):
            pattern = config.alpha[p] * hb_freq[:, p] * hf_freq[:, p] * x_freq[:, data]
            m0 = np.sum(np.abs(residual) ** 2, axis=-1)
            m1 = np.sum(np.abs(residual - pattern) ** 2, axis=-1)
            det = (m1 < m0).astype(int)
            _tally(result.devices[p], bd_bits[:, p], det)
        done += b
    return result


def _tally(counts: DeviceCounts, true_bits: np.ndarray, detected: np.ndarray):
    one = true_bits == 1
    counts.sent1 += int(np.sum(one))
    counts.sent0 += int(np.sum(~one))
    counts.err_given1 += int(np.sum(detected[one] == 0))
    counts.err_given0 += int(np.sum(detected[~one] == 1))


# ---------------------------------------------------------------------------
# CFO frames: blocks of symbols sharing one channel realization
# ---------------------------------------------------------------------------

def _frame_projection_pick(z: np.ndarray, n: int, candidates: np.ndarray) -> np.ndarray:
    """Candidate maximizing the known-signal projection metric per frame.

    z = conj(x_time) * y_time per symbol; the metric is the per-symbol
    projection magnitude squared summed over the frame.
    """
    b = z.shape[0]
    best = np.full(b, -np.inf)
    arg = np.zeros(b, dtype=int)
    idx = np.arange(z.shape[-1])
    for j, eps in enumerate(candidates):
        proj = z @ np.exp(-2j * np.pi * eps * idx / n)
        e = np.sum(np.abs(proj) ** 2, axis=-1)
        upd = e > best
        best[upd] = e[upd]
        arg[upd] = j
    return arg


def _frame_projection_local(z: np.ndarray, n: int, centers: np.ndarray,
                            offsets: np.ndarray) -> np.ndarray:
    """Best candidate (centers + offsets) per frame by the projection metric."""
    b = z.shape[0]
    best = np.full(b, -np.inf)
    out = centers.copy()
    idx = np.arange(z.shape[-1])
    for off in offsets:
        eps = np.clip(centers + off, -0.5, 0.5 - 1e-9)
        basis = np.exp(-2j * np.pi * eps[:, None] * idx / n)
        proj = np.einsum("bms,bs->bm", z, basis)
        e = np.sum(np.abs(proj) ** 2, axis=-1)
        upd = e > best
        best[upd] = e[upd]
        out[upd] = eps[upd]
    return out


def _frame_variance_metric(bodies: np.ndarray, x_vals: np.ndarray, data: list[int],
                           n: int, cp: int, eps: np.ndarray) -> np.ndarray:
    """Vectorized pilot phase-alignment metric per frame."""
    b, m, _ = bodies.shape
    idx = np.arange(n)
    sym_phase = np.exp(-2j * np.pi * eps[:, None] * (np.arange(m) * (n + cp) + cp) / n)
    ramp = np.exp(-2j * np.pi * eps[:, None] * idx / n)
    derot = bodies * ramp[:, None, :] * sym_phase[:, :, None]
    yfreq = np.fft.fft(derot, axis=-1)[..., data] / np.sqrt(n)
    r = yfreq / x_vals
    num = np.abs(np.sum(r, axis=1)) ** 2
    den = m * np.sum(np.abs(r) ** 2, axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        frac = np.where(den > 0, num / den, 0.0)
    return np.mean(1.0 - frac, axis=-1)


def estimate_cfo_frames(times: np.ndarray, x_times: np.ndarray,
                        bodies: np.ndarray, x_vals: np.ndarray, data: list[int],
                        n: int, cp: int, scan_step: float = 5e-3,
                        refine_tol: float = 1e-5) -> np.ndarray:
    """Per-frame CFO estimates for a batch of known-symbol frames.

    Scans the pilot phase-alignment metric across the whole offset range
    (its inter-symbol coherence carries the fine information), then
    golden-sections each frame inside its best scan cell.
    """
    b = times.shape[0]
    scan = np.arange(-0.5, 0.5, scan_step)
    best = np.full(b, np.inf)
    centers = np.zeros(b)
    for e in scan:
        f = _frame_variance_metric(bodies, x_vals, data, n, cp, np.full(b, float(e)))
        upd = f < best
        best[upd] = f[upd]
        centers[upd] = e
    eps_grid = centers

    lo = np.maximum(eps_grid - scan_step, -0.5)
    hi = np.minimum(eps_grid + scan_step, 0.5 - 1e-12)
    gr = (np.sqrt(5.0) - 1.0) / 2.0
    c = hi - gr * (hi - lo)
    d = lo + gr * (hi - lo)
    fc = _frame_variance_metric(bodies, x_vals, data, n, cp, c)
    fd = _frame_variance_metric(bodies, x_vals, data, n, cp, d)
    while np.max(hi - lo) > refine_tol:
        less = fc < fd
        hi = np.where(less, d, hi)
        lo = np.where(less, lo, c)
        c = hi - gr * (hi - lo)
        d = lo + gr * (hi - lo)
        fc = _frame_variance_metric(bodies, x_vals, data, n, cp, c)
        fd = _frame_variance_metric(bodies, x_vals, data, n, cp, d)
    return 0.5 * (lo + hi)


def simulate_cfo_cell(config: ValidatedConfig, snr_db: float, *, frames: int,
                      rng: np.random.Generator, eps0: float, compensate: bool,
                      gamma: float | None = None, batch: int = 1 << 11) -> CellResult:
    """Frames of cfo_block_symbols known symbols under a carrier offset.

    The channel holds for a frame; device bits change per symbol. With
    compensation enabled the offset is estimated per frame from the known
    symbols, the conjugate ramp applied, and detection proceeds as usual.
    """
    alloc = build_allocation(config)
    n, cp = config.n_subcarriers, config.cp_len
    n_samp = n + cp
    m = config.cfo_block_symbols
    data = list(alloc.data_bins)
    sigma_w = config.sigma_w(snr_db)
    powers = config.channel_profile.resolved_powers()
    if config.modulation == OFSK and gamma is None:
        raise ValueError("OFSK energy detection requires a threshold")

    result = CellResult(trials=frames,
                        devices=[DeviceCounts() for _ in range(config.num_bds)])
    eps_errs = []

    done = 0
    while done < frames:
        b = min(batch, frames - done)
        bits = rng.integers(0, 2, size=(b, m, alloc.n_data))
        x_freq = np.zeros((b, m, n), dtype=np.complex128)
        x_freq[..., data] = bpsk_map(bits)
        body = np.fft.ifft(x_freq, axis=-1) * np.sqrt(n)
        time = np.concatenate([body[..., n - cp:], body], axis=-1) if cp else body

        h_d = _draw_taps(rng, powers["direct"], (b,))
        h_f = _draw_taps(rng, powers["forward"], (b, config.num_bds))
        h_b = _draw_taps(rng, powers["backscatter"], (b, config.num_bds))
        bd_bits = rng.integers(0, 2, size=(b, m, config.num_bds))

        y = _conv_taps(time, h_d[:, None, :])
        for p in range(config.num_bds):
            d = alloc.device(p + 1)
            incident = _conv_taps(time, h_f[:, None, p, :])
            shifts = np.where(bd_bits[:, :, p] == 1, d.shift_bit1, d.shift_bit0)
            reflected = incident * _device_wave(shifts, config.alpha[p], n_samp, n)
            y += _conv_taps(reflected, h_b[:, None, p, :])
        y += _cn(rng, y.shape, sigma_w)

        if eps0 != 0.0:
            gidx = np.arange(m)[:, None] * n_samp + np.arange(n_samp)[None, :]
            y = y * np.exp(2j * np.pi * eps0 * gidx / n)[None, :, :]

        bodies = y[..., cp:cp + n]
        if compensate:
            eps_hat = estimate_cfo_frames(y, time, bodies, x_freq[..., data],
                                          data, n, cp)
            eps_errs.append(np.abs(eps_hat - eps0))
            gidx = np.arange(m)[None, :, None] * n_samp + cp + np.arange(n)[None, None, :]
            bodies = bodies * np.exp(-2j * np.pi * eps_hat[:, None, None] * gidx / n)

        yf = np.fft.fft(bodies, axis=-1) / np.sqrt(n)
        for p in range(config.num_bds):
            d = alloc.device(p + 1)
            if config.modulation == OFSK:
                r = np.sum(np.abs(yf[..., list(d.bins1)]) ** 2, axis=-1)
                det = (r > gamma).astype(int)
            else:
                r0 = np.sum(np.abs(yf[..., list(d.bins0)]) ** 2, axis=-1)
                r1 = np.sum(np.abs(yf[..., list(d.bins1)]) ** 2, axis=-1)
                det = (r1 > r0).astype(int)
            _tally(result.devices[p], bd_bits[:, :, p].ravel(), det.ravel())
        done += b

    if eps_errs:
        result.eps_abs_err = np.concatenate(eps_errs)
    return result
