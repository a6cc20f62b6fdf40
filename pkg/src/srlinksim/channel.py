"""Rayleigh multipath draws, propagation, receiver assembly, and CFO injection.

Each link draws i.i.d. circularly-symmetric complex Gaussian taps with
per-tap variance equal to the profile's power entry, so every link has unit
average energy and the per-subcarrier frequency response has unit average
magnitude squared.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .backscatter import BdProfile, apply_backscatter
from .config import ChannelProfile
from .ofdm import OfdmSymbol


@dataclass(frozen=True)
class ChannelRealization:
    """One trial's tap sets: direct link plus per-device forward/backscatter."""

    h_direct: np.ndarray
    h_forward: np.ndarray      # shape (P, L_f)
    h_back: np.ndarray         # shape (P, L_b)
    cfo: float = 0.0

    @property
    def num_bds(self) -> int:
        return self.h_forward.shape[0]

    def freq_response(self, taps: np.ndarray, n: int) -> np.ndarray:
        """Unnormalized DFT of a tap vector: H[k] = sum_l h[l] e^{-j2pi kl/n}."""
        return np.fft.fft(np.asarray(taps, dtype=np.complex128), n=n, axis=-1)


def _cn_taps(rng: np.random.Generator, powers, shape=()) -> np.ndarray:
    p = np.asarray(powers, dtype=float)
    scale = np.sqrt(p / 2.0)
    size = shape + p.shape
    return scale * (rng.standard_normal(size) + 1j * rng.standard_normal(size))


def draw(profile: ChannelProfile, num_bds: int, rng: np.random.Generator,
         cfo: float = 0.0) -> ChannelRealization:
    """Draw one realization of all links."""
    powers = profile.resolved_powers()
    return ChannelRealization(
        h_direct=_cn_taps(rng, powers["direct"]),
        h_forward=_cn_taps(rng, powers["forward"], (num_bds,)),
        h_back=_cn_taps(rng, powers["backscatter"], (num_bds,)),
        cfo=cfo,
    )


def propagate(tx: np.ndarray, taps: np.ndarray) -> np.ndarray:
    """Linear convolution truncated to the input length (CP absorbs the tail)."""
    tx = np.asarray(tx, dtype=np.complex128)
    taps = np.atleast_1d(np.asarray(taps, dtype=np.complex128))
    out = np.zeros_like(tx)
    for l, h in enumerate(taps):
        if l == 0:
            out += h * tx
        else:
            out[..., l:] += h * tx[..., :-l]
    return out


def awgn(shape, sigma_w: float, rng: np.random.Generator) -> np.ndarray:
    if sigma_w == 0.0:
        return np.zeros(shape, dtype=np.complex128)
    s = np.sqrt(sigma_w / 2.0)
    return s * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def inject_cfo(samples: np.ndarray, eps0: float, n: int,
               symbol_index: int = 0, cp_len: int = 0) -> np.ndarray:
    """Multiply sample m of symbol i by e^{j 2 pi eps (m + i (N + cp)) / N}.

    Consecutive symbols therefore accumulate the inter-symbol phase ramp
    e^{j 2 pi eps (N + cp) / N} in addition to the within-symbol rotation.
    """
    samples = np.asarray(samples, dtype=np.complex128)
    if eps0 == 0.0:
        return samples.copy()
    m = np.arange(samples.shape[-1]) + symbol_index * (n + cp_len)
    return samples * np.exp(2j * np.pi * eps0 * m / n)


def assemble_rx(symbol: OfdmSymbol, realization: ChannelRealization,
                bd_bits, profiles: tuple[BdProfile, ...], sigma_w: float,
                rng: np.random.Generator, symbol_index: int = 0) -> np.ndarray:
    """Superpose direct, per-device backscatter paths, and receiver noise.

    The forward channel is applied before the device multiplication and the
    backscatter channel after it; noise enters once at the receiver, and any
    configured CFO rotates the assembled waveform.
    """
    bd_bits = list(bd_bits)
    if len(bd_bits) != len(profiles):
        raise ValueError(f"got {len(bd_bits)} bits for {len(profiles)} devices")
    x = symbol.time
    n = symbol.n
    y = propagate(x, realization.h_direct)
    for p, (profile, bit) in enumerate(zip(profiles, bd_bits)):
        incident = propagate(x, realization.h_forward[p])
        reflected = apply_backscatter(incident, profile, int(bit), n)
        y = y + propagate(reflected, realization.h_back[p])
    y = y + awgn(y.shape, sigma_w, rng)
    if realization.cfo != 0.0:
        y = inject_cfo(y, realization.cfo, n, symbol_index, symbol.cp_len)
    return y
