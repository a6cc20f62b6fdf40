"""OFDM symbol construction and recovery with a unitary DFT convention.

Time-domain synthesis is (1/sqrt(N)) * sum_k X[k] e^{j 2 pi k n / N}, so
energy matches between domains and unit-variance noise stays unit-variance
per subcarrier after demodulation.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .allocation import AllocationMap


class LengthMismatch(ValueError):
    """Bit payload does not match the number of data subcarriers."""


class ShortBuffer(ValueError):
    """Sample buffer shorter than one CP-prefixed symbol."""


def bpsk_map(bits: np.ndarray) -> np.ndarray:
    """0 -> +1, 1 -> -1."""
    return np.where(np.asarray(bits) == 0, 1.0, -1.0).astype(np.complex128)


def bpsk_demap(symbols: np.ndarray) -> np.ndarray:
    return (np.real(symbols) < 0).astype(int)


@dataclass(frozen=True)
class OfdmSymbol:
    """Frequency-domain vector and its CP-prefixed time-domain counterpart."""

    freq: np.ndarray
    time: np.ndarray
    cp_len: int

    @property
    def n(self) -> int:
        return self.freq.shape[-1]

    @property
    def body(self) -> np.ndarray:
        return self.time[..., self.cp_len:]


def synthesize(freq: np.ndarray, cp_len: int) -> OfdmSymbol:
    """IDFT plus cyclic prefix for an arbitrary frequency-domain vector."""
    freq = np.asarray(freq, dtype=np.complex128)
    n = freq.shape[-1]
    body = np.fft.ifft(freq, axis=-1) * np.sqrt(n)
    if cp_len > 0:
        time = np.concatenate([body[..., n - cp_len:], body], axis=-1)
    else:
        time = body
    return OfdmSymbol(freq=freq, time=time, cp_len=cp_len)


def modulate_primary(bits: np.ndarray, alloc: AllocationMap, cp_len: int) -> OfdmSymbol:
    """BPSK-map bits onto the data subcarriers and synthesize the symbol."""
    bits = np.asarray(bits)
    if bits.shape[-1] != alloc.n_data:
        raise LengthMismatch(
            f"got {bits.shape[-1]} bits, allocation carries {alloc.n_data} data subcarriers"
        )
    freq = np.zeros(bits.shape[:-1] + (alloc.n,), dtype=np.complex128)
    freq[..., list(alloc.data_bins)] = bpsk_map(bits)
    return synthesize(freq, cp_len)


def demodulate(time: np.ndarray, cp_len: int, n: int | None = None) -> np.ndarray:
    """Drop the CP, DFT the body, return the frequency-domain vector."""
    time = np.asarray(time, dtype=np.complex128)
    if n is None:
        n = time.shape[-1] - cp_len
    if time.shape[-1] < n + cp_len:
        raise ShortBuffer(
            f"need {n + cp_len} samples (N={n} plus cp_len={cp_len}), got {time.shape[-1]}"
        )
    body = time[..., cp_len:cp_len + n]
    return np.fft.fft(body, axis=-1) / np.sqrt(n)
