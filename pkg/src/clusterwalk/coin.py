"""Vertex coins, line phase insertions and the one-step single-photon transfer."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from .lattice import (
    BoundaryCrossing,
    LatticeConfig,
    Line,
    Mode,
    Phase,
    Port,
)

__all__ = [
    "UNITARITY_TOL",
    "CoinUnitary",
    "PhaseEntry",
    "PhaseSchedule",
    "TransferOperator",
    "grover_coin",
    "is_unitary",
    "scatter_vertex",
    "single_photon_transfer",
]

UNITARITY_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class CoinUnitary:
    """4x4 scattering matrix of one vertex; ``entries[out, in]`` over P1..P4."""

    entries: np.ndarray
    name: str = "custom"

    def __post_init__(self) -> None:
        m = np.array(self.entries, dtype=np.complex128)
        if m.shape != (4, 4):
            raise ValueError(f"coin must be 4x4, got shape {m.shape}")
        if not is_unitary(m):
            raise ValueError("coin matrix is not unitary within 1e-12")
        m.setflags(write=False)
        object.__setattr__(self, "entries", m)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, CoinUnitary) and np.array_equal(self.entries, other.entries)

    def __hash__(self) -> int:
        return hash(self.entries.tobytes())

    def amplitude(self, out_port: Port, in_port: Port) -> complex:
        return complex(self.entries[int(out_port) - 1, int(in_port) - 1])

    def is_grover(self) -> bool:
        return np.array_equal(self.entries, grover_coin().entries)


def grover_coin() -> CoinUnitary:
    """Grover four-port: 1/2 everywhere except -1/2 for back-reflection."""
    m = 0.5 * np.ones((4, 4)) - np.eye(4)
    return CoinUnitary(m.astype(np.complex128), name="grover")


@dataclass(frozen=True)
class PhaseEntry:
    """One phase insertion.  ``step=None`` makes it persistent (every step)."""

    edge: int
    line: Line
    phase: float
    step: int | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "line", Line(self.line))
        if not math.isfinite(self.phase):
            raise ValueError(f"phase must be finite, got {self.phase!r}")
        if self.step is not None and self.step < 0:
            raise ValueError(f"phase step must be >= 0, got {self.step}")


@dataclass(frozen=True)
class PhaseSchedule:
    """Phases on the double line between vertex ``edge`` and ``edge + 1``.

    A phase is picked up by every photon traversing that line during the
    listed step, in either direction.  Absent entries mean zero phase.
    """

    entries: tuple[PhaseEntry, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        object.__setattr__(self, "entries", tuple(self.entries))

    @classmethod
    def from_records(cls, records: Iterable[Mapping]) -> PhaseSchedule:
        """Build from ``{step, edge, line, phase}`` records (``step`` may be omitted)."""
        out = []
        for rec in records:
            out.append(
                PhaseEntry(
                    edge=int(rec["edge"]),
                    line=Line(rec["line"]),
                    phase=float(rec["phase"]),
                    step=None if rec.get("step") is None else int(rec["step"]),
                )
            )
        return cls(tuple(out))

    def to_records(self) -> list[dict]:
        return [
            {"step": e.step, "edge": e.edge, "line": e.line.value, "phase": e.phase}
            for e in self.entries
        ]

    def __bool__(self) -> bool:
        return bool(self.entries)

    def phases_at(self, step: int) -> dict[tuple[int, Line], float]:
        """Total phase per ``(edge, line)`` active during ``step``."""
        acc: dict[tuple[int, Line], float] = {}
        for e in self.entries:
            if e.step is None or e.step == step:
                acc[(e.edge, e.line)] = acc.get((e.edge, e.line), 0.0) + e.phase
        return acc

    def shifted(self, offset: int) -> PhaseSchedule:
        """Same schedule with one-shot steps delayed by ``offset``."""
        return PhaseSchedule(
            tuple(
                PhaseEntry(e.edge, e.line, e.phase, None if e.step is None else e.step + offset)
                for e in self.entries
            )
        )


# Out-port wiring as (site shift, destination port); P1/P3 upper, P2/P4 lower.
_WIRING = np.array([[-1, 3], [-1, 4], [+1, 1], [+1, 2]])


@dataclass(frozen=True, eq=False)
class TransferOperator:
    """Sparse one-step map on incoming-mode amplitudes.

    Column ``i`` has at most four nonzeros: ``coefs[i, k]`` lands on mode
    ``targets[i, k]`` (``-1`` when the destination is off the lattice).
    """

    lattice: LatticeConfig
    targets: np.ndarray
    coefs: np.ndarray
    step: int = 0

    @property
    def n_modes(self) -> int:
        return self.lattice.n_modes

    def leaking(self) -> np.ndarray:
        """Boolean mask of modes with nonzero weight leaving the lattice."""
        return np.any((self.targets < 0) & (self.coefs != 0), axis=1)

    def check_support(self, idx: np.ndarray) -> None:
        bad = self.leaking()[idx]
        if np.any(bad):
            mode = self.lattice.mode(int(np.asarray(idx)[bad][0]))
            raise BoundaryCrossing(
                f"{mode!r} scatters off the lattice (half_width={self.lattice.half_width}); "
                "use a larger lattice"
            )

    def apply(self, vector: np.ndarray) -> np.ndarray:
        vector = np.asarray(vector, dtype=np.complex128)
        nz = np.flatnonzero(vector)
        self.check_support(nz)
        out = np.zeros(self.n_modes, dtype=np.complex128)
        t = self.targets[nz]
        c = self.coefs[nz] * vector[nz, None]
        keep = t >= 0
        np.add.at(out, t[keep], c[keep])
        return out

    def to_dense(self) -> np.ndarray:
        n = self.n_modes
        m = np.zeros((n, n), dtype=np.complex128)
        cols = np.repeat(np.arange(n), 4).reshape(n, 4)
        keep = self.targets >= 0
        np.add.at(m, (self.targets[keep], cols[keep]), self.coefs[keep])
        return m

    def interior(self) -> np.ndarray:
        """Indices of modes whose every destination stays on the lattice."""
        return np.flatnonzero(np.all(self.targets >= 0, axis=1))


def single_photon_transfer(
    coin: CoinUnitary,
    schedule: PhaseSchedule | None,
    step: int,
    lattice: LatticeConfig,
) -> TransferOperator:
    """Coin at every vertex, then wiring, then the phase layer of ``step``."""
    if step < 0:
        raise ValueError(f"step must be >= 0, got {step}")
    M, npol = lattice.half_width, lattice.n_pol
    idx = np.arange(lattice.n_modes)
    site = lattice.sites_of(idx)
    port = lattice.ports_of(idx) - 1
    pol = lattice.pols_of(idx)

    # coin column of the input port, one entry per output port
    coefs = coin.entries[:, port].T.copy()
    shift = _WIRING[:, 0][None, :]
    dest_port = _WIRING[:, 1][None, :] - 1
    dest_site = site[:, None] + shift
    in_bounds = np.abs(dest_site) <= M
    targets = ((dest_site + M) * 4 + dest_port) * npol + pol[:, None]
    targets = np.where(in_bounds, targets, -1)

    if schedule:
        # edge between dest_site and site, keyed by its left vertex
        edge = np.minimum(site[:, None], dest_site)
        upper = np.array([True, False, True, False])[None, :]
        for (e, line), phi in schedule.phases_at(step).items():
            hit = (edge == e) & (upper == (line is Line.UPPER))
            coefs = np.where(hit, coefs * np.exp(1j * phi), coefs)

    targets.setflags(write=False)
    coefs.setflags(write=False)
    return TransferOperator(lattice, targets, coefs, step)


def is_unitary(op, tol: float = UNITARITY_TOL) -> bool:
    """Column orthonormality check.

    Accepts a square matrix, a :class:`CoinUnitary` or a
    :class:`TransferOperator`; for the latter only interior columns are
    tested (boundary columns are truncated by the finite lattice).
    """
    if isinstance(op, CoinUnitary):
        m = op.entries
    elif isinstance(op, TransferOperator):
        cols = op.interior()
        if cols.size == 0:
            return True
        m = op.to_dense()[:, cols]
    else:
        m = np.asarray(op, dtype=np.complex128)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            return False
    gram = m.conj().T @ m
    return bool(np.max(np.abs(gram - np.eye(gram.shape[0]))) <= tol)


def scatter_vertex(
    amplitudes: Mapping[tuple[Mode, ...], complex] | Mapping[Mode, complex],
    coin: CoinUnitary,
) -> dict:
    """Apply one vertex coin without propagation.

    ``amplitudes`` maps either single incoming modes or ordered tuples of
    incoming modes (a product-basis tensor) to amplitudes.  The result is
    keyed the same way by outgoing modes at the same site.
    """
    out: dict = {}
    for key, amp in amplitudes.items():
        modes = (key,) if isinstance(key, Mode) else tuple(key)
        branches: list[tuple[tuple[Mode, ...], complex]] = [((), complex(amp))]
        for mode in modes:
            if mode.phase is not Phase.INCOMING:
                raise ValueError(f"scatter_vertex expects incoming modes, got {mode!r}")
            nxt = []
            for prefix, a in branches:
                for p in Port:
                    u = coin.amplitude(p, mode.port)
                    if u != 0:
                        m = Mode(mode.site, p, Phase.OUTGOING, mode.polarization)
                        nxt.append((prefix + (m,), a * u))
            branches = nxt
        for modes_out, a in branches:
            k = modes_out[0] if isinstance(key, Mode) else modes_out
            out[k] = out.get(k, 0j) + a
    return out

