"""Achievable-rate accounting for the primary link and the device links.

Per-subcarrier Shannon terms log2(1+SINR) are summed over each stream's
subcarriers, then saturated by the transmitted alphabets: the primary sends
one BPSK symbol per data subcarrier (at most 1 bit), a device signals one
bit per OFDM symbol over its whole designated set. Rates are per unit time,
so the cyclic prefix overhead scales everything by N/(N+cp).

Fully-orthogonal streams see only noise. Semi-orthogonal data subcarriers
reached by some device's shifted image carry extra interference; device
energy landing on data subcarriers fights the direct link there unless the
cancellation stage removed it (then only the estimation-error residual
remains).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .allocation import AllocationMap, build_allocation
from .config import FULLY_ORTHOGONAL, OFSK, ValidatedConfig
from .simulate import _draw_taps


class SchemeMismatch(ValueError):
    """Realization or mode incompatible with the configured scheme."""


@dataclass(frozen=True)
class RateBreakdown:
    r_bd: float
    r_primary: float
    r_total: float
    r_total_se: float = 0.0
    primary_sinr: np.ndarray = field(repr=False, default=None)
    bd_sinr: tuple = field(repr=False, default=())


def _interference_map(config: ValidatedConfig, alloc: AllocationMap,
                      hb_freq: np.ndarray, hf_freq: np.ndarray) -> np.ndarray:
    """Average device-image power on every subcarrier (semi-orthogonal).

    OFSK devices place their single shifted image at full weight; MFSK
    devices occupy one of their two images per symbol, so each lands with
    weight one half.
    """
    n = alloc.n
    out = np.zeros(hb_freq.shape[:1] + (n,))
    for p, dev in enumerate(alloc.devices):
        shifts = (dev.shift_bit1,) if config.modulation == OFSK else (dev.shift_bit0, dev.shift_bit1)
        weight = 1.0 if config.modulation == OFSK else 0.5
        a2 = abs(config.alpha[p]) ** 2
        for s in shifts:
            land = np.array([(k + s) % n for k in alloc.data_bins])
            src = (land - s) % n
            out[:, land] += weight * a2 * np.abs(hb_freq[:, p, land] * hf_freq[:, p, src]) ** 2
    return out


def sum_rate(config: ValidatedConfig, snr_db: float, *, mode: str = "ensemble",
             n_realizations: int = 10_000, rng: np.random.Generator | None = None,
             realization=None, sic: bool = False) -> RateBreakdown:
    """Scheme-appropriate rate breakdown at one SNR point.

    mode="ensemble" draws fresh links and averages; mode="single" evaluates
    one provided ChannelRealization deterministically.
    """
    alloc = build_allocation(config)
    n, cp = config.n_subcarriers, config.cp_len
    sigma_w = config.sigma_w(snr_db)
    df_eff = config.subcarrier_spacing_hz * n / (n + cp)
    data = list(alloc.data_bins)

    if mode == "single":
        if realization is None:
            raise SchemeMismatch("single mode needs a ChannelRealization")
        if realization.num_bds != config.num_bds:
            raise SchemeMismatch(
                f"realization has {realization.num_bds} devices, config {config.num_bds}")
        hd = np.fft.fft(realization.h_direct[None, :], n=n, axis=-1)
        hf = np.fft.fft(realization.h_forward[None, :, :], n=n, axis=-1)
        hb = np.fft.fft(realization.h_back[None, :, :], n=n, axis=-1)
    elif mode == "ensemble":
        if rng is None:
            rng = np.random.default_rng(config.seed)
        powers = config.channel_profile.resolved_powers()
        r = n_realizations
        hd = np.fft.fft(_draw_taps(rng, powers["direct"], (r,)), n=n, axis=-1)
        hf = np.fft.fft(_draw_taps(rng, powers["forward"], (r, config.num_bds)), n=n, axis=-1)
        hb = np.fft.fft(_draw_taps(rng, powers["backscatter"], (r, config.num_bds)), n=n, axis=-1)
    else:
        raise SchemeMismatch(f"unknown mode {mode!r}")

    hd2 = np.abs(hd) ** 2

    if config.scheme == FULLY_ORTHOGONAL:
        psi = hd2[:, data] / sigma_w
        primary_bits = np.minimum(np.log2(1.0 + psi), 1.0).sum(axis=-1)
        primary_sinr = psi
        bd_rates, bd_sinrs = [], []
        for p, dev in enumerate(alloc.devices):
            bins = list(dev.bins0) + list(dev.bins1)
            a2 = abs(config.alpha[p]) ** 2
            sinr = a2 * np.abs(hb[:, p, bins] * hf[:, p, bins]) ** 2 / sigma_w
            bd_rates.append(np.minimum(np.log2(1.0 + sinr).sum(axis=-1), 1.0))
            bd_sinrs.append(sinr.mean(axis=0))
    else:
        imap = _interference_map(config, alloc, hb, hf)
        interfered = imap[:, data] > 0
        psi = hd2[:, data] / (np.where(interfered, imap[:, data], 0.0) + sigma_w)
        primary_bits = np.minimum(np.log2(1.0 + psi), 1.0).sum(axis=-1)
        primary_sinr = psi
        var_h, var_x = config.est_error_var_h, config.est_error_var_x
        bd_rates, bd_sinrs = [], []
        for p, dev in enumerate(alloc.devices):
            a2 = abs(config.alpha[p]) ** 2
            if_bins = list(dev.bins0) + list(dev.bins1)
            sinr_if = a2 * np.abs(hb[:, p, if_bins] * hf[:, p, if_bins]) ** 2 / sigma_w
            bits = np.log2(1.0 + sinr_if).sum(axis=-1)
            shared = list(dev.shared1)
            if shared:
                src = [(k - dev.shift_bit1) % n for k in shared]
                sig = a2 * np.abs(hb[:, p, shared] * hf[:, p, src]) ** 2
                if sic:
                    resid = var_h + var_x * hd2[:, shared]
                else:
                    resid = hd2[:, shared]
                sinr_sh = sig / (resid + sigma_w)
                bits = bits + np.log2(1.0 + sinr_sh).sum(axis=-1)
                bd_sinrs.append(np.concatenate([sinr_if, sinr_sh], axis=-1).mean(axis=0))
            else:
                bd_sinrs.append(sinr_if.mean(axis=0))
            bd_rates.append(np.minimum(bits, 1.0))

    r_primary = float(df_eff * primary_bits.mean())
    r_bd = float(df_eff * np.sum([r.mean() for r in bd_rates]))
    total_bits = primary_bits + np.sum(bd_rates, axis=0)
    se = float(df_eff * total_bits.std(ddof=1) / np.sqrt(total_bits.size)) \
        if total_bits.size > 1 else 0.0
    return RateBreakdown(
        r_bd=r_bd,
        r_primary=r_primary,
        r_total=r_bd + r_primary,
        r_total_se=se,
        primary_sinr=np.asarray(primary_sinr.mean(axis=0)),
        bd_sinr=tuple(np.asarray(s) for s in bd_sinrs),
    )
