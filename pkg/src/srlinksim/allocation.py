"""Subcarrier role assignment for the four access scheme / modulation combos.

Fully-orthogonal layouts interleave device-designated null subcarriers with
the data subcarriers so shifted device spectra never touch primary data.
Semi-orthogonal layouts reserve a single null run after the first data
subcarrier; device shifts beyond that run land on data subcarriers, which
become the device's shared set (resolved later by cancellation).

Device shifts act as circular spectral shifts. The fully-orthogonal OFSK
layout keeps only complete blocks so no device offset ever wraps; the MFSK
layout places data on every block start and simply leaves pair positions
that would fall off the band unassigned (plain nulls).
"""
from __future__ import annotations

from dataclasses import dataclass

from .config import FULLY_ORTHOGONAL, OFSK, ValidatedConfig

ROLE_DATA = "D"
ROLE_UNUSED = "-"


@dataclass(frozen=True)
class DeviceBins:
    """Designated spectrum for one backscatter device.

    bins0/bins1 are the interference-free subcarriers read by the detector
    for the bit-0 / bit-1 hypothesis (bins0 is empty for OFSK, whose bit 0
    leaves the spectrum unshifted). shared0/shared1 list the data subcarriers
    the corresponding shift lands on; they are empty for fully-orthogonal
    layouts.
    """

    index: int
    shift_bit0: int
    shift_bit1: int
    bins0: tuple[int, ...]
    bins1: tuple[int, ...]
    shared0: tuple[int, ...]
    shared1: tuple[int, ...]

    @property
    def detect_bins(self) -> tuple[int, ...]:
        """All interference-free designated bins for this device."""
        return tuple(sorted(set(self.bins0) | set(self.bins1)))


@dataclass(frozen=True)
class AllocationMap:
    """Per-subcarrier role list plus the index sets every stage works from."""

    n: int
    scheme: str
    modulation: str
    roles: tuple[str, ...]
    data_bins: tuple[int, ...]
    devices: tuple[DeviceBins, ...]

    @property
    def n_data(self) -> int:
        return len(self.data_bins)

    @property
    def n_null(self) -> int:
        return sum(len(d.bins0) + len(d.bins1) for d in self.devices)

    def device(self, p: int) -> DeviceBins:
        """1-based device lookup."""
        return self.devices[p - 1]

    def landing_bins(self, shift: int) -> tuple[int, ...]:
        """Circularly shifted image of the data spectrum."""
        return tuple(sorted((k + shift) % self.n for k in self.data_bins))

    def to_json(self) -> dict:
        return {
            "n_subcarriers": self.n,
            "scheme": self.scheme,
            "modulation": self.modulation,
            "roles": list(self.roles),
            "data_bins": list(self.data_bins),
            "devices": [
                {
                    "index": d.index,
                    "shift_bit0": d.shift_bit0,
                    "shift_bit1": d.shift_bit1,
                    "bins_bit0": list(d.bins0),
                    "bins_bit1": list(d.bins1),
                    "shared_bit0": list(d.shared0),
                    "shared_bit1": list(d.shared1),
                }
                for d in self.devices
            ],
        }


def _shared(data: set[int], shift: int, n: int) -> tuple[int, ...]:
    return tuple(sorted(((k + shift) % n for k in data if (k + shift) % n in data)))


def build_allocation(config: ValidatedConfig) -> AllocationMap:
    """Construct the role map and designated sets for a validated config."""
    n, p_total = config.n_subcarriers, config.num_bds
    roles = [ROLE_UNUSED] * n
    devices: list[DeviceBins] = []

    if config.scheme == FULLY_ORTHOGONAL:
        if config.modulation == OFSK:
            block = p_total + 1
            data = [block * m for m in range(n // block)]
            for k in data:
                roles[k] = ROLE_DATA
            for p in range(1, p_total + 1):
                bins1 = tuple(k + p for k in data)
                for k in bins1:
                    roles[k] = f"B{p}"
                devices.append(DeviceBins(p, 0, p, (), bins1, (), ()))
        else:
            block = 2 * p_total + 1
            data = [block * m for m in range((n - 1) // block + 1)]
            for k in data:
                roles[k] = ROLE_DATA
            for p in range(1, p_total + 1):
                bins0, bins1 = [], []
                for k in data:
                    if k + 2 * p <= n - 1:
                        bins0.append(k + 2 * p - 1)
                        bins1.append(k + 2 * p)
                for k in bins0:
                    roles[k] = f"B{p}"
                for k in bins1:
                    roles[k] = f"B{p}"
                devices.append(DeviceBins(p, 2 * p - 1, 2 * p, tuple(bins0), tuple(bins1), (), ()))
    else:
        run = p_total if config.modulation == OFSK else 2 * p_total
        data = [0] + list(range(run + 1, n))
        data_set = set(data)
        for k in data:
            roles[k] = ROLE_DATA
        for p in range(1, p_total + 1):
            if config.modulation == OFSK:
                roles[p] = f"B{p}"
                devices.append(DeviceBins(p, 0, p, (), (p,), (), _shared(data_set, p, n)))
            else:
                s0, s1 = 2 * p - 1, 2 * p
                roles[s0] = f"B{p}"
                roles[s1] = f"B{p}"
                devices.append(DeviceBins(
                    p, s0, s1, (s0,), (s1,),
                    _shared(data_set, s0, n), _shared(data_set, s1, n),
                ))

    alloc = AllocationMap(
        n=n,
        scheme=config.scheme,
        modulation=config.modulation,
        roles=tuple(roles),
        data_bins=tuple(data),
        devices=tuple(devices),
    )
    assert alloc.n_data == config.n_data
    assert tuple(len(d.bins0) + len(d.bins1) for d in alloc.devices) == config.n_per_device
    return alloc
