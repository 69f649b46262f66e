"""Ladder geometry: vertex sites, port labels, mode indexing and wiring.

Each vertex ``m`` is a four-port.  Ports P1 and P2 face left, P3 and P4 face
right.  A photon leaving P3 (P4) of vertex ``m`` enters P1 (P2) of vertex
``m + 1``; by mirror symmetry a photon leaving P1 (P2) enters P3 (P4) of
``m - 1``.  P1 and P3 sit on the upper line, P2 and P4 on the lower line.

Amplitudes are always labelled by *incoming* modes, i.e. by the vertex a
photon is about to enter.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import total_ordering

import numpy as np

__all__ = [
    "BoundaryCrossing",
    "Direction",
    "LatticeConfig",
    "Line",
    "Mode",
    "Phase",
    "Polarization",
    "Port",
    "auto_lattice",
    "direction_of",
    "exit_direction",
    "line_of",
    "propagate",
    "unpropagate",
]


class BoundaryCrossing(RuntimeError):
    """A populated mode would leave the finite lattice."""


class Port(enum.IntEnum):
    P1 = 1
    P2 = 2
    P3 = 3
    P4 = 4


class Phase(enum.Enum):
    INCOMING = "in"
    OUTGOING = "out"


class Polarization(enum.IntEnum):
    H = 0
    V = 1


class Direction(enum.Enum):
    L = "L"
    R = "R"


class Line(enum.Enum):
    UPPER = "upper"
    LOWER = "lower"


@total_ordering
@dataclass(frozen=True)
class Mode:
    """A single-photon basis mode.

    Ordering is by site, then port, then polarization (``None`` first), which
    is what canonicalizes unordered photon pairs.
    """

    site: int
    port: Port
    phase: Phase = Phase.INCOMING
    polarization: Polarization | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "port", Port(self.port))
        if self.polarization is not None:
            object.__setattr__(self, "polarization", Polarization(self.polarization))

    def _sort_key(self) -> tuple[int, int, int, int]:
        pol = -1 if self.polarization is None else int(self.polarization)
        return (self.site, int(self.port), pol, 0 if self.phase is Phase.INCOMING else 1)

    def __lt__(self, other: Mode) -> bool:
        if not isinstance(other, Mode):
            return NotImplemented
        return self._sort_key() < other._sort_key()

    def encode(self) -> str:
        """Canonical ``"m:port:pol"`` string (pol is ``-`` when unpolarized)."""
        pol = "-" if self.polarization is None else self.polarization.name
        return f"{self.site}:{int(self.port)}:{pol}"

    @classmethod
    def decode(cls, text: str, phase: Phase = Phase.INCOMING) -> Mode:
        try:
            site, port, pol = text.split(":")
            polarization = None if pol == "-" else Polarization[pol]
            return cls(int(site), Port(int(port)), phase, polarization)
        except (ValueError, KeyError) as exc:
            raise ValueError(f"malformed mode string {text!r}") from exc

    def __repr__(self) -> str:
        tag = "in" if self.phase is Phase.INCOMING else "out"
        pol = "" if self.polarization is None else self.polarization.name
        return f"Mode({self.site},P{int(self.port)}{pol},{tag})"


@dataclass(frozen=True)
class LatticeConfig:
    """Finite chain with sites ``-half_width .. +half_width``."""

    half_width: int
    polarized: bool = False

    def __post_init__(self) -> None:
        if int(self.half_width) != self.half_width or self.half_width < 1:
            raise ValueError(f"half_width must be an integer >= 1, got {self.half_width!r}")

    @property
    def n_sites(self) -> int:
        return 2 * self.half_width + 1

    @property
    def n_pol(self) -> int:
        return 2 if self.polarized else 1

    @property
    def n_modes(self) -> int:
        """Number of incoming modes, the dimension of single-photon vectors."""
        return self.n_sites * 4 * self.n_pol

    def contains_site(self, site: int) -> bool:
        return -self.half_width <= site <= self.half_width

    def check_mode(self, mode: Mode) -> None:
        if not self.contains_site(mode.site):
            raise BoundaryCrossing(
                f"site {mode.site} outside lattice [-{self.half_width}, {self.half_width}]"
            )
        if self.polarized != (mode.polarization is not None):
            want = "polarized" if self.polarized else "unpolarized"
            raise ValueError(f"{mode!r} does not match a {want} lattice")

    def index(self, mode: Mode) -> int:
        """Dense index of an incoming mode."""
        if mode.phase is not Phase.INCOMING:
            raise ValueError("only incoming modes are indexed")
        self.check_mode(mode)
        pol = 0 if mode.polarization is None else int(mode.polarization)
        return ((mode.site + self.half_width) * 4 + int(mode.port) - 1) * self.n_pol + pol

    def mode(self, index: int) -> Mode:
        if not 0 <= index < self.n_modes:
            raise IndexError(index)
        rest, pol = divmod(int(index), self.n_pol)
        cell, port = divmod(rest, 4)
        return Mode(
            cell - self.half_width,
            Port(port + 1),
            Phase.INCOMING,
            Polarization(pol) if self.polarized else None,
        )

    def modes(self) -> list[Mode]:
        return [self.mode(i) for i in range(self.n_modes)]

    # Vectorized decoders for index arrays.

    def sites_of(self, idx: np.ndarray) -> np.ndarray:
        return idx // (4 * self.n_pol) - self.half_width

    def ports_of(self, idx: np.ndarray) -> np.ndarray:
        return (idx // self.n_pol) % 4 + 1

    def pols_of(self, idx: np.ndarray) -> np.ndarray:
        return idx % self.n_pol


def auto_lattice(steps: int, polarized: bool = False, origin: int = 0) -> LatticeConfig:
    """Smallest lattice guaranteed to hold a walk of ``steps`` steps from ``origin``."""
    return LatticeConfig(max(1, abs(origin) + steps + 1), polarized)


_FORWARD = {
    Port.P3: (+1, Port.P1),
    Port.P4: (+1, Port.P2),
    Port.P1: (-1, Port.P3),
    Port.P2: (-1, Port.P4),
}
_BACKWARD = {dest: (-shift, src) for src, (shift, dest) in _FORWARD.items()}


def propagate(mode: Mode, lattice: LatticeConfig | None = None) -> Mode:
    """Map an outgoing mode to the incoming mode of the adjacent vertex."""
    if mode.phase is not Phase.OUTGOING:
        raise ValueError(f"propagate expects an outgoing mode, got {mode!r}")
    shift, port = _FORWARD[mode.port]
    dest = Mode(mode.site + shift, port, Phase.INCOMING, mode.polarization)
    if lattice is not None and not lattice.contains_site(dest.site):
        raise BoundaryCrossing(f"{mode!r} leaves the lattice (half_width={lattice.half_width})")
    return dest


def unpropagate(mode: Mode) -> Mode:
    """Inverse of :func:`propagate`."""
    if mode.phase is not Phase.INCOMING:
        raise ValueError(f"unpropagate expects an incoming mode, got {mode!r}")
    shift, port = _BACKWARD[mode.port]
    return Mode(mode.site + shift, port, Phase.OUTGOING, mode.polarization)


def direction_of(mode: Mode) -> Direction:
    """Travel direction of an incoming mode: P1/P2 move right, P3/P4 move left."""
    if mode.phase is not Phase.INCOMING:
        raise ValueError(f"direction_of expects an incoming mode, got {mode!r}")
    return Direction.R if mode.port in (Port.P1, Port.P2) else Direction.L


def exit_direction(port: Port) -> Direction:
    """Side on which a photon leaving ``port`` travels."""
    return Direction.R if Port(port) in (Port.P3, Port.P4) else Direction.L


def line_of(port: Port) -> Line:
    return Line.UPPER if Port(port) in (Port.P1, Port.P3) else Line.LOWER
