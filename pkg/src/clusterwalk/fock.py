"""Two-photon states and their evolution under ``T (x) T``.

Boson amplitudes are stored against normalized Fock basis states of
unordered mode pairs, so ``|amplitude|**2`` is an outcome probability.  For
``a != b`` the ordered-tensor view carries ``amplitude / sqrt(2)`` on both
``(a, b)`` and ``(b, a)``; for ``a == b`` it carries the amplitude itself.
Distinguishable photons are stored directly as an ordered tensor.
"""

from __future__ import annotations

import enum
import json
import math
from typing import Iterable, Iterator, Mapping

import numpy as np

from . import _kernels
from .coin import CoinUnitary, PhaseSchedule, TransferOperator, single_photon_transfer
from .lattice import LatticeConfig, Mode, Phase

__all__ = [
    "DROP_TOL",
    "NORM_TOL",
    "Statistics",
    "TwoPhotonState",
    "evolve",
    "from_single_modes",
    "step",
]

NORM_TOL = 1e-10
DROP_TOL = 1e-15
_RT2 = math.sqrt(2.0)


class Statistics(enum.Enum):
    BOSON = "boson"
    DISTINGUISHABLE = "distinguishable"


class TwoPhotonState:
    """Immutable sparse two-photon amplitude map on incoming modes.

    Pairs are kept as integer keys ``a * n_modes + b`` into the lattice mode
    index, sorted ascending; boson keys always have ``a <= b``.
    """

    __slots__ = ("lattice", "statistics", "time", "_keys", "_amps")

    def __init__(
        self,
        lattice: LatticeConfig,
        statistics: Statistics,
        keys: np.ndarray,
        amps: np.ndarray,
        time: int = 0,
    ) -> None:
        self.lattice = lattice
        self.statistics = Statistics(statistics)
        self.time = int(time)
        keys = np.asarray(keys, dtype=np.int64)
        amps = np.asarray(amps, dtype=np.complex128)
        if keys.shape != amps.shape or keys.ndim != 1:
            raise ValueError("keys and amplitudes must be matching 1-d arrays")
        if keys.size and np.any(np.diff(keys) <= 0):
            order = np.argsort(keys, kind="stable")
            keys, amps = keys[order], amps[order]
            if np.any(np.diff(keys) == 0):
                raise ValueError("duplicate pair keys")
        keys.setflags(write=False)
        amps.setflags(write=False)
        self._keys = keys
        self._amps = amps

    # construction ---------------------------------------------------------

    @classmethod
    def from_amplitudes(
        cls,
        lattice: LatticeConfig,
        statistics: Statistics,
        amplitudes: Mapping[tuple[Mode, Mode], complex],
        time: int = 0,
        normalize: bool = False,
    ) -> TwoPhotonState:
        """Build from a ``{(mode_a, mode_b): amplitude}`` map.

        For bosons ``(a, b)`` and ``(b, a)`` name the same basis state and
        their amplitudes add.
        """
        statistics = Statistics(statistics)
        n = lattice.n_modes
        acc: dict[int, complex] = {}
        for (a, b), amp in amplitudes.items():
            ia, ib = lattice.index(a), lattice.index(b)
            if statistics is Statistics.BOSON and ia > ib:
                ia, ib = ib, ia
            k = ia * n + ib
            acc[k] = acc.get(k, 0j) + complex(amp)
        keys = np.array(sorted(acc), dtype=np.int64)
        amps = np.array([acc[k] for k in keys], dtype=np.complex128)
        keep = np.abs(amps) > 0
        state = cls(lattice, statistics, keys[keep], amps[keep], time)
        if normalize:
            state = state.normalized()
        return state

    @classmethod
    def from_ordered(
        cls,
        lattice: LatticeConfig,
        statistics: Statistics,
        keys: np.ndarray,
        vals: np.ndarray,
        time: int = 0,
        drop_tol: float = DROP_TOL,
    ) -> TwoPhotonState:
        """Canonicalize an ordered tensor given as sorted unique keys."""
        statistics = Statistics(statistics)
        keys = np.asarray(keys, dtype=np.int64)
        vals = np.asarray(vals, dtype=np.complex128)
        if statistics is Statistics.BOSON and keys.size:
            n = lattice.n_modes
            r, c = np.divmod(keys, n)
            lo, hi = np.minimum(r, c), np.maximum(r, c)
            w = np.where(r == c, 1.0, 1.0 / _RT2)
            ckeys, inv = np.unique(lo * n + hi, return_inverse=True)
            v = vals * w
            re = np.bincount(inv, weights=v.real, minlength=ckeys.size)
            im = np.bincount(inv, weights=v.imag, minlength=ckeys.size)
            keys, vals = ckeys, re + 1j * im
        keep = np.abs(vals) >= drop_tol
        return cls(lattice, statistics, keys[keep], vals[keep], time)

    # basic views ----------------------------------------------------------

    @property
    def n_modes(self) -> int:
        return self.lattice.n_modes

    @property
    def keys(self) -> np.ndarray:
        return self._keys

    @property
    def amps(self) -> np.ndarray:
        return self._amps

    @property
    def is_boson(self) -> bool:
        return self.statistics is Statistics.BOSON

    def __len__(self) -> int:
        return int(self._keys.size)

    def pair_indices(self) -> tuple[np.ndarray, np.ndarray]:
        return np.divmod(self._keys, self.n_modes)

    def probabilities(self) -> np.ndarray:
        return np.abs(self._amps) ** 2

    def norm_sq(self) -> float:
        return float(np.sum(self.probabilities()))

    def normalized(self) -> TwoPhotonState:
        nrm = math.sqrt(self.norm_sq())
        if nrm == 0:
            raise ValueError("cannot normalize the zero state")
        return self._replace(amps=self._amps / nrm)

    def _replace(self, **kw) -> TwoPhotonState:
        return TwoPhotonState(
            kw.get("lattice", self.lattice),
            kw.get("statistics", self.statistics),
            kw.get("keys", self._keys),
            kw.get("amps", self._amps),
            kw.get("time", self.time),
        )

    def items(self) -> Iterator[tuple[tuple[Mode, Mode], complex]]:
        r, c = self.pair_indices()
        for i, j, a in zip(r.tolist(), c.tolist(), self._amps.tolist()):
            yield (self.lattice.mode(i), self.lattice.mode(j)), a

    @property
    def amplitudes(self) -> dict[tuple[Mode, Mode], complex]:
        return dict(self.items())

    def amplitude(self, a: Mode, b: Mode) -> complex:
        """Stored amplitude of a pair, zero if absent or off the lattice."""
        try:
            ia, ib = self.lattice.index(a), self.lattice.index(b)
        except (ValueError, RuntimeError):
            return 0j
        if self.is_boson and ia > ib:
            ia, ib = ib, ia
        k = ia * self.n_modes + ib
        pos = np.searchsorted(self._keys, k)
        if pos < self._keys.size and self._keys[pos] == k:
            return complex(self._amps[pos])
        return 0j

    def ordered(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """``(rows, cols, amps)`` of the ordered two-index tensor."""
        r, c = self.pair_indices()
        if not self.is_boson:
            return r, c, self._amps
        off = r != c
        scaled = np.where(off, self._amps / _RT2, self._amps)
        rows = np.concatenate([r, c[off]])
        cols = np.concatenate([c, r[off]])
        amps = np.concatenate([scaled, scaled[off]])
        return rows, cols, amps

    def to_dense(self) -> np.ndarray:
        """Dense ordered tensor ``psi[a, b]``."""
        rows, cols, amps = self.ordered()
        out = np.zeros((self.n_modes, self.n_modes), dtype=np.complex128)
        out[rows, cols] = amps
        return out

    @classmethod
    def from_dense(
        cls,
        lattice: LatticeConfig,
        statistics: Statistics,
        psi: np.ndarray,
        time: int = 0,
        drop_tol: float = DROP_TOL,
    ) -> TwoPhotonState:
        flat = np.asarray(psi, dtype=np.complex128).ravel()
        keys = np.flatnonzero(flat)
        return cls.from_ordered(lattice, statistics, keys, flat[keys], time, drop_tol)

    # comparisons ----------------------------------------------------------

    def inner(self, other: TwoPhotonState) -> complex:
        """``<self|other>`` in the stored (orthonormal) basis."""
        if other.lattice != self.lattice or other.statistics is not self.statistics:
            raise ValueError("states live on different spaces")
        common, i, j = np.intersect1d(self._keys, other._keys, return_indices=True)
        return complex(np.sum(np.conj(self._amps[i]) * other._amps[j]))

    def __add__(self, other: TwoPhotonState) -> TwoPhotonState:
        return self.combine(other, 1.0)

    def __sub__(self, other: TwoPhotonState) -> TwoPhotonState:
        return self.combine(other, -1.0)

    def __mul__(self, scalar: complex) -> TwoPhotonState:
        return self._replace(amps=self._amps * scalar)

    __rmul__ = __mul__

    def __truediv__(self, scalar: complex) -> TwoPhotonState:
        return self._replace(amps=self._amps / scalar)

    def combine(self, other: TwoPhotonState, coef: complex) -> TwoPhotonState:
        if other.lattice != self.lattice or other.statistics is not self.statistics:
            raise ValueError("states live on different spaces")
        keys = np.concatenate([self._keys, other._keys])
        vals = np.concatenate([self._amps, coef * other._amps])
        uniq, inv = np.unique(keys, return_inverse=True)
        re = np.bincount(inv, weights=vals.real, minlength=uniq.size)
        im = np.bincount(inv, weights=vals.imag, minlength=uniq.size)
        return TwoPhotonState(self.lattice, self.statistics, uniq, re + 1j * im, self.time)

    def max_abs_diff(self, other: TwoPhotonState) -> float:
        d = self - other
        return float(np.max(np.abs(d.amps), initial=0.0))

    def translated(self, shift: int) -> TwoPhotonState:
        """Shift every photon by ``shift`` sites (same lattice)."""
        r, c = self.pair_indices()
        per_site = 4 * self.lattice.n_pol
        r2, c2 = r + shift * per_site, c + shift * per_site
        sites = self.lattice.sites_of(np.concatenate([r2, c2]))
        if np.any(np.abs(sites) > self.lattice.half_width) or np.any(r2 < 0) or np.any(c2 < 0):
            raise ValueError("translation leaves the lattice")
        return self._replace(keys=r2 * self.n_modes + c2)

    def with_time(self, time: int) -> TwoPhotonState:
        return self._replace(time=time)

    def __repr__(self) -> str:
        return (
            f"TwoPhotonState({self.statistics.value}, t={self.time}, "
            f"terms={len(self)}, M={self.lattice.half_width})"
        )

    # serialization --------------------------------------------------------

    def to_json_obj(self) -> dict:
        rows = []
        for (a, b), amp in self.items():
            rows.append({"modes": [a.encode(), b.encode()], "re": amp.real, "im": amp.imag})
        return {
            "header": {
                "statistics": self.statistics.value,
                "time": self.time,
                "lattice": {
                    "half_width": self.lattice.half_width,
                    "polarized": self.lattice.polarized,
                },
            },
            "amplitudes": rows,
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_json_obj(), **kw)

    @classmethod
    def from_json_obj(cls, obj: Mapping) -> TwoPhotonState:
        head = obj["header"]
        lat = LatticeConfig(int(head["lattice"]["half_width"]), bool(head["lattice"]["polarized"]))
        amps = {}
        for rec in obj["amplitudes"]:
            a, b = (Mode.decode(s) for s in rec["modes"])
            amps[(a, b)] = complex(rec["re"], rec["im"])
        return cls.from_amplitudes(lat, Statistics(head["statistics"]), amps, time=int(head["time"]))

    @classmethod
    def from_json(cls, text: str) -> TwoPhotonState:
        return cls.from_json_obj(json.loads(text))


def from_single_modes(
    a: Mode, b: Mode, statistics: Statistics, lattice: LatticeConfig
) -> TwoPhotonState:
    """One photon in each of two incoming modes (both in the same mode allowed for bosons)."""
    statistics = Statistics(statistics)
    for m in (a, b):
        if m.phase is not Phase.INCOMING:
            raise ValueError(f"{m!r} is not an incoming mode")
        lattice.check_mode(m)
    if statistics is Statistics.DISTINGUISHABLE and a == b:
        raise ValueError("two distinguishable photons cannot occupy one identical mode")
    return TwoPhotonState.from_amplitudes(lattice, statistics, {(a, b): 1.0})


def step(
    state: TwoPhotonState, transfer: TransferOperator, backend: str | None = None
) -> TwoPhotonState:
    """Advance one time step."""
    if transfer.lattice != state.lattice:
        raise ValueError("transfer operator and state use different lattices")
    rows, cols, amps = state.ordered()
    transfer.check_support(np.union1d(rows, cols))
    kernel = _kernels.get_kernel(backend)
    keys, vals = kernel(rows, cols, amps, transfer.targets, transfer.coefs, state.n_modes)
    return TwoPhotonState.from_ordered(
        state.lattice, state.statistics, keys, vals, state.time + 1
    )


def evolve(
    state: TwoPhotonState,
    coin: CoinUnitary,
    schedule: PhaseSchedule | None,
    steps: int,
    backend: str | None = None,
) -> list[TwoPhotonState]:
    """States at times ``state.time .. state.time + steps`` (inclusive)."""
    out = [state]
    cur = state
    for _ in range(steps):
        t = single_photon_transfer(coin, schedule, cur.time, cur.lattice)
        cur = step(cur, t, backend)
        out.append(cur)
    return out


def iter_evolve(
    state: TwoPhotonState,
    coin: CoinUnitary,
    schedule: PhaseSchedule | None,
    steps: int,
    backend: str | None = None,
) -> Iterable[TwoPhotonState]:
    cur = state
    yield cur
    for _ in range(steps):
        cur = step(cur, single_photon_transfer(coin, schedule, cur.time, cur.lattice), backend)
        yield cur
