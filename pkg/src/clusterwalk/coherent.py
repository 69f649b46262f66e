"""Coherent-state propagation.

A product of coherent states is mapped to another product of coherent
states by any linear-optical unitary, with the displacement vector
transformed by the single-photon transfer matrix.  The field is therefore
just a complex vector over incoming modes.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from .coin import TransferOperator
from .lattice import Direction, LatticeConfig, Mode, Phase, Port

__all__ = [
    "CoherentField",
    "balance_defect",
    "coherent_step",
    "field_csv",
]


@dataclass(frozen=True, eq=False)
class CoherentField:
    lattice: LatticeConfig
    vector: np.ndarray
    time: int = 0

    def __post_init__(self) -> None:
        v = np.array(self.vector, dtype=np.complex128)
        if v.shape != (self.lattice.n_modes,):
            raise ValueError(f"field vector must have length {self.lattice.n_modes}")
        if not np.all(np.isfinite(v)):
            raise ValueError("field amplitudes must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "vector", v)

    @classmethod
    def from_amplitudes(
        cls, lattice: LatticeConfig, amplitudes: Mapping[Mode, complex], time: int = 0
    ) -> CoherentField:
        v = np.zeros(lattice.n_modes, dtype=np.complex128)
        for mode, amp in amplitudes.items():
            v[lattice.index(mode)] += amp
        return cls(lattice, v, time)

    @classmethod
    def from_records(
        cls, lattice: LatticeConfig, records: Iterable[Mapping], time: int = 0
    ) -> CoherentField:
        """Records ``{site, upper_amp: [re, im], lower_amp: [re, im], direction}``.

        ``direction`` defaults to ``"R"`` (ports P1/P2); ``"L"`` uses P3/P4.
        """
        if lattice.polarized:
            raise ValueError("coherent records describe unpolarized fields")
        amps: dict[Mode, complex] = {}
        for rec in records:
            site = int(rec["site"])
            right = str(rec.get("direction", "R")).upper() == "R"
            up, lo = (Port.P1, Port.P2) if right else (Port.P3, Port.P4)
            for port, key in ((up, "upper_amp"), (lo, "lower_amp")):
                re, im = rec.get(key, (0.0, 0.0))
                m = Mode(site, port, Phase.INCOMING)
                amps[m] = amps.get(m, 0j) + complex(float(re), float(im))
        return cls.from_amplitudes(lattice, amps, time)

    def amplitude(self, mode: Mode) -> complex:
        return complex(self.vector[self.lattice.index(mode)])

    @property
    def amplitudes(self) -> dict[Mode, complex]:
        nz = np.flatnonzero(self.vector)
        return {self.lattice.mode(int(i)): complex(self.vector[i]) for i in nz}

    def mean_photon_number(self) -> float:
        return float(np.sum(np.abs(self.vector) ** 2))

    def side_power(self, direction: Direction) -> float:
        """Mean photon number travelling in ``direction``."""
        ports = self.lattice.ports_of(np.arange(self.lattice.n_modes))
        mask = ports <= 2 if Direction(direction) is Direction.R else ports >= 3
        return float(np.sum(np.abs(self.vector[mask]) ** 2))


def coherent_step(field: CoherentField, transfer: TransferOperator) -> CoherentField:
    if transfer.lattice != field.lattice:
        raise ValueError("transfer operator and field use different lattices")
    return CoherentField(field.lattice, transfer.apply(field.vector), field.time + 1)


def balance_defect(field: CoherentField, side: Direction | str) -> float:
    """Sum over sites of ``|upper - lower|`` for modes travelling toward ``side``."""
    side = Direction(side)
    lat = field.lattice
    v = field.vector.reshape(lat.n_sites, 4, lat.n_pol)
    up, lo = (0, 1) if side is Direction.R else (2, 3)
    return float(np.sum(np.abs(v[:, up, :] - v[:, lo, :])))


def field_csv(fields: Iterable[CoherentField]) -> str:
    """Per-step nonzero mode amplitudes as ``step,site,port,pol,re,im``."""
    buf = io.StringIO()
    buf.write("step,site,port,pol,re,im\n")
    for f in fields:
        for mode, amp in sorted(f.amplitudes.items()):
            pol = "-" if mode.polarization is None else mode.polarization.name
            buf.write(
                f"{f.time},{mode.site},{int(mode.port)},{pol},{amp.real:.17g},{amp.imag:.17g}\n"
            )
    return buf.getvalue()
