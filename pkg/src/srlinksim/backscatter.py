"""Backscatter device behavior: reflection coefficients and shift waveforms.

A device never generates a carrier; it multiplies the incident signal by a
reflection coefficient and, depending on its bit, by a complex exponential
whose frequency is an integer number of subcarrier spacings. Shifts are
normalized to integer bins (e^{j 2 pi s n / N}) so device energy lands
exactly on designated subcarriers.
"""
from __future__ import annotations

import cmath
from dataclasses import dataclass

import numpy as np

from .allocation import AllocationMap
from .config import MFSK, OFSK, ValidatedConfig
from .ofdm import LengthMismatch


class DegenerateImpedance(ValueError):
    """Load equals antenna impedance; the reflection formula divides by zero."""


@dataclass(frozen=True)
class ImpedancePair:
    """Antenna and load impedances in ohms."""

    z_antenna: complex
    z_load: complex


def reflection_coefficient(z: ImpedancePair, convention: str = "as_printed") -> complex:
    """Reflection coefficient from an impedance pair.

    The default convention divides by (Z_l - Z_a); pass
    convention="conventional" for the textbook (Z_l + Z_a) denominator.
    """
    za, zl = complex(z.z_antenna), complex(z.z_load)
    denom = zl + za if convention == "conventional" else zl - za
    if denom == 0:
        raise DegenerateImpedance(f"degenerate impedances: Z_a={za}, Z_l={zl}")
    return (zl - za.conjugate()) / denom


def reflection_magnitude_phase(z: ImpedancePair) -> tuple[float, float]:
    """Magnitude/phase characterization of the reflection coefficient.

    Evaluated from the polar impedance forms. This path does not agree with
    abs/angle of reflection_coefficient for all inputs; it is reported
    alongside, not reconciled.
    """
    za, zl = complex(z.z_antenna), complex(z.z_load)
    ra, rl = abs(za), abs(zl)
    d = cmath.phase(za) - cmath.phase(zl)
    num = ra + rl - 2.0 * ra * rl * np.cos(d)
    den = ra + rl + 2.0 * ra * rl * np.cos(d)
    if den == 0:
        raise DegenerateImpedance("phase-form denominator vanished")
    mag = num / den
    phase = np.arctan2(2.0 * ra * rl * np.sin(d), ra ** 2 + rl ** 2)
    return mag, phase


@dataclass(frozen=True)
class BdProfile:
    """One device's reflection coefficient, modulation, and shift pair."""

    index: int
    alpha: complex
    modulation: str
    shift_bit0: int
    shift_bit1: int

    def __post_init__(self):
        if self.modulation == OFSK and self.shift_bit0 != 0:
            raise ValueError("OFSK devices pass bit 0 through unshifted")
        if self.modulation == MFSK and self.shift_bit0 == self.shift_bit1:
            raise ValueError("MFSK shift pair must be distinct")

    def shift(self, bit: int) -> int:
        return self.shift_bit1 if bit else self.shift_bit0


def device_profiles(config: ValidatedConfig, alloc: AllocationMap) -> tuple[BdProfile, ...]:
    """Profiles for every configured device, shifts taken from the allocation."""
    return tuple(
        BdProfile(
            index=d.index,
            alpha=config.alpha[d.index - 1],
            modulation=config.modulation,
            shift_bit0=d.shift_bit0,
            shift_bit1=d.shift_bit1,
        )
        for d in alloc.devices
    )


def bd_waveform(profile: BdProfile, bit: int, n_samples: int, n: int) -> np.ndarray:
    """Per-sample multiplicative waveform over one CP-inclusive symbol.

    The sample index runs over the whole CP-prefixed symbol so the shift is
    phase-continuous across the CP boundary and cyclicity is preserved.
    """
    shift = profile.shift(bit)
    if shift == 0:
        return np.full(n_samples, complex(profile.alpha), dtype=np.complex128)
    ramp = np.exp(2j * np.pi * shift * np.arange(n_samples) / n)
    return complex(profile.alpha) * ramp


def apply_backscatter(incident: np.ndarray, profile: BdProfile, bit: int,
                      n: int) -> np.ndarray:
    """Reflect the incident samples through the device for one bit."""
    incident = np.asarray(incident, dtype=np.complex128)
    if incident.shape[-1] == 0:
        raise LengthMismatch("incident signal is empty")
    wave = bd_waveform(profile, bit, incident.shape[-1], n)
    return incident * wave
