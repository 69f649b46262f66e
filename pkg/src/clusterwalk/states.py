"""Named two-photon inputs and clustering analysis.

Amplitude patterns follow the defining relations literally (including the
overall minus sign of the reflecting state); compare states with
:func:`equal_up_to_phase` when the convention should not matter.

States are anchored at the vertex they are about to enter.  ``RR`` states
occupy incoming ports P1/P2, ``LL`` states P3/P4.
"""

from __future__ import annotations

import enum
import math
import re
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .coin import CoinUnitary, grover_coin, single_photon_transfer
from .fock import TwoPhotonState, Statistics, evolve, step
from .lattice import LatticeConfig, Mode, Phase, Polarization, Port, auto_lattice
from .observables import mixed_direction_probability

__all__ = [
    "CLUSTER_TOL",
    "Classification",
    "Decomposition",
    "EmptyWindow",
    "NamedState",
    "Tag",
    "VanishingState",
    "build",
    "classify_clustering",
    "equal_up_to_phase",
    "first_step_decomposition",
    "parse_named",
    "polarization_bell_fidelity",
]

CLUSTER_TOL = 1e-12
_RT2 = math.sqrt(2.0)
H, V = Polarization.H, Polarization.V


class VanishingState(ValueError):
    """The requested combination is identically zero."""


class EmptyWindow(ValueError):
    """No amplitude in the requested site window."""


class Tag(enum.Enum):
    PSI_T = "psi_t"
    PSI_R = "psi_r"
    A_PLUS = "A+"
    A_MINUS = "A-"
    B_PLUS = "B+"
    B_MINUS = "B-"
    C_PLUS = "C+"
    C_MINUS = "C-"
    PHI_PLUS = "Phi+"
    PHI_MINUS = "Phi-"
    PSI_PLUS = "Psi+"
    PSI_MINUS = "Psi-"

    @property
    def polarized(self) -> bool:
        return self not in (Tag.PSI_T, Tag.PSI_R)


class PairDirection(enum.Enum):
    RR = "RR"
    LL = "LL"


@dataclass(frozen=True)
class NamedState:
    tag: Tag
    ports: tuple[int, int] | None = None
    site: int = 0
    direction: PairDirection | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "tag", Tag(self.tag))
        direction = None if self.direction is None else PairDirection(self.direction)
        ports = self.ports
        if ports is None:
            ports = (3, 4) if direction is PairDirection.LL else (1, 2)
        ports = (int(ports[0]), int(ports[1]))
        for p in ports:
            Port(p)
        sides = {"R" if p <= 2 else "L" for p in ports}
        if len(sides) != 1:
            raise ValueError(f"ports {ports} mix left- and right-moving inputs")
        inferred = PairDirection.RR if sides == {"R"} else PairDirection.LL
        if direction is not None and direction is not inferred:
            raise ValueError(f"ports {ports} do not move {direction.value}")
        if self.tag in (Tag.PSI_T, Tag.PSI_R) and ports[0] == ports[1]:
            raise ValueError(f"{self.tag.value} needs both lines of one side")
        object.__setattr__(self, "ports", ports)
        object.__setattr__(self, "direction", inferred)

    def label(self) -> str:
        i, j = self.ports
        return f"{self.tag.value}:{i},{j}:m={self.site}:{self.direction.value}"


_TAG_ALIASES = {t.value.lower(): t for t in Tag} | {
    "psit": Tag.PSI_T,
    "psir": Tag.PSI_R,
}


def parse_named(text: str) -> NamedState:
    """Parse ``"A+:1,2"``, ``"psi_t:m=0:RR"``, ``"C-:1,1:m=-2"`` and similar."""
    fields = [f.strip() for f in text.strip().split(":") if f.strip()]
    if not fields:
        raise ValueError("empty state tag")
    tag = _TAG_ALIASES.get(fields[0].lower())
    if tag is None:
        raise ValueError(f"unknown state tag {fields[0]!r}")
    ports = None
    site = 0
    direction = None
    for f in fields[1:]:
        if m := re.fullmatch(r"m=(-?\d+)", f):
            site = int(m.group(1))
        elif f in ("RR", "LL"):
            direction = PairDirection(f)
        elif m := re.fullmatch(r"([1-4]),\s*([1-4])", f):
            ports = (int(m.group(1)), int(m.group(2)))
        else:
            raise ValueError(f"cannot parse {f!r} in state tag {text!r}")
    return NamedState(tag, ports, site, direction)


def _creation_products(named: NamedState, polarized: bool) -> list[tuple[complex, tuple, tuple]]:
    """Terms ``coef * a_x^dag a_y^dag`` with modes as ``(port, polarization)``."""
    i, j = named.ports
    t = named.tag
    s = 1.0 / _RT2
    if t in (Tag.PSI_T, Tag.PSI_R):
        sign = 1.0 if t is Tag.PSI_T else -1.0
        if not polarized:
            # (|ii> + |jj>)/2 + |ij>/sqrt2 in Fock amplitudes, i.e. products with 1/(2 sqrt2)
            return [
                (sign * s / 2, (i, None), (i, None)),
                (sign * s / 2, (j, None), (j, None)),
                (1.0 / _RT2, (i, None), (j, None)),
            ]
        return [(s * c, x, y) for c, x, y in _creation_products(NamedState(Tag.A_PLUS, (i, j)), True)] + [
            (sign * s * c, x, y)
            for c, x, y in _creation_products(NamedState(Tag.B_PLUS, (i, j)), True)
        ]
    plus = 1.0 if t in (Tag.A_PLUS, Tag.B_PLUS, Tag.C_PLUS, Tag.PHI_PLUS, Tag.PSI_PLUS) else -1.0
    if t in (Tag.A_PLUS, Tag.A_MINUS, Tag.PSI_PLUS, Tag.PSI_MINUS):
        return [(s, (i, H), (j, V)), (plus * s, (i, V), (j, H))]
    if t in (Tag.B_PLUS, Tag.B_MINUS):
        return [(s, (i, H), (i, V)), (plus * s, (j, V), (j, H))]
    return [(s, (i, H), (j, H)), (plus * s, (i, V), (j, V))]


def build(named: NamedState | str, lattice: LatticeConfig | None = None) -> TwoPhotonState:
    """Normalized boson state for a named input."""
    if isinstance(named, str):
        named = parse_named(named)
    if lattice is None:
        lattice = LatticeConfig(abs(named.site) + 1, polarized=named.tag.polarized)
    if named.tag.polarized and not lattice.polarized:
        raise ValueError(f"{named.tag.value} needs a polarized lattice")
    terms = _creation_products(named, lattice.polarized)
    fock: dict[tuple[Mode, Mode], complex] = {}
    for coef, (px, ppol), (py, qpol) in terms:
        a = Mode(named.site, Port(px), Phase.INCOMING, ppol)
        b = Mode(named.site, Port(py), Phase.INCOMING, qpol)
        key = (min(a, b), max(a, b))
        # a^dag a^dag |0> = sqrt2 |2>
        fock[key] = fock.get(key, 0j) + coef * (_RT2 if a == b else 1.0)
    fock = {k: v for k, v in fock.items() if abs(v) > 1e-15}
    if not fock:
        raise VanishingState(f"{named.label()} is identically zero")
    return TwoPhotonState.from_amplitudes(lattice, Statistics.BOSON, fock, normalize=True)


def equal_up_to_phase(a: TwoPhotonState, b: TwoPhotonState, tol: float = 1e-12) -> bool:
    """Per-amplitude agreement after removing the best global phase."""
    ov = a.inner(b)
    if abs(ov) == 0:
        return a.max_abs_diff(b) <= tol
    phase = ov / abs(ov)
    return a.max_abs_diff(b * np.conj(phase)) <= tol


@dataclass(frozen=True)
class Decomposition:
    reflecting: complex
    transmitting: complex
    residual: float

    @property
    def reflecting_weight(self) -> float:
        return abs(self.reflecting) ** 2

    @property
    def transmitting_weight(self) -> float:
        return abs(self.transmitting) ** 2

    @property
    def relative_sign(self) -> complex:
        """Phase of the transmitting amplitude relative to the reflecting one."""
        if self.reflecting == 0 or self.transmitting == 0:
            return 0j
        z = self.transmitting / self.reflecting
        return z / abs(z)


def _first_step_targets(named: NamedState, lattice: LatticeConfig) -> tuple[TwoPhotonState, TwoPhotonState]:
    m = named.site
    if named.direction is PairDirection.RR:
        refl = NamedState(Tag.PSI_R, (3, 4), m - 1)
        trans = NamedState(Tag.PSI_T, (1, 2), m + 1)
    else:
        refl = NamedState(Tag.PSI_R, (1, 2), m + 1)
        trans = NamedState(Tag.PSI_T, (3, 4), m - 1)
    return build(refl, lattice), build(trans, lattice)


def first_step_decomposition(
    named: NamedState | str, coin: CoinUnitary | None = None
) -> Decomposition:
    """Project the one-step output onto the adjacent reflecting/transmitting states."""
    if isinstance(named, str):
        named = parse_named(named)
    coin = grover_coin() if coin is None else coin
    lattice = LatticeConfig(abs(named.site) + 2, polarized=named.tag.polarized)
    state = build(named, lattice)
    out = step(state, single_photon_transfer(coin, None, 0, lattice))
    refl, trans = _first_step_targets(named, lattice)
    r = refl.inner(out)
    t = trans.inner(out)
    rest = out - refl * r - trans * t
    return Decomposition(r, t, rest.norm_sq())


class Classification(enum.Enum):
    CLUSTERS = "Clusters"
    ANTI_CLUSTERS_FIRST_STEP = "AntiClustersFirstStep"
    DECLUSTERS = "Declusters"


def classify_clustering(
    named: NamedState | str,
    steps: int = 6,
    coin: CoinUnitary | None = None,
    tol: float = CLUSTER_TOL,
) -> Classification:
    """Classify by the opposite-direction probability over ``steps`` steps."""
    if isinstance(named, str):
        named = parse_named(named)
    if steps < 2:
        raise ValueError("classification needs at least two steps")
    coin = grover_coin() if coin is None else coin
    lattice = auto_lattice(steps, polarized=named.tag.polarized, origin=named.site)
    states = evolve(build(named, lattice), coin, None, steps)
    mixed = [mixed_direction_probability(s) for s in states[1:]]
    if max(mixed) < tol:
        return Classification.CLUSTERS
    if abs(mixed[0] - 1.0) < tol:
        return Classification.ANTI_CLUSTERS_FIRST_STEP
    return Classification.DECLUSTERS


def polarization_bell_fidelity(state: TwoPhotonState, sites: Iterable[int]) -> float:
    """Overlap of the one-photon-per-line sector in ``sites`` with (HV + VH)/sqrt2.

    Amplitudes are grouped by spatial configuration (site and port pair);
    each group holds a 2x2 polarization amplitude ``c[pol_upper, pol_lower]``
    and the result is the fidelity of the resulting mixed polarization state.
    """
    lat = state.lattice
    if not lat.polarized:
        raise ValueError("polarization fidelity needs a polarized state")
    window = set(int(s) for s in sites)
    r, c = state.pair_indices()
    s1, s2 = lat.sites_of(r), lat.sites_of(c)
    p1, p2 = lat.ports_of(r), lat.ports_of(c)
    q1, q2 = lat.pols_of(r), lat.pols_of(c)
    groups: dict[tuple[int, int, int], np.ndarray] = {}
    for k in range(len(state)):
        if s1[k] != s2[k] or int(s1[k]) not in window:
            continue
        a_up = p1[k] in (1, 3)
        if a_up == (p2[k] in (1, 3)):
            continue
        if (p1[k] <= 2) != (p2[k] <= 2):
            continue
        if a_up:
            up_port, lo_port, up_pol, lo_pol = p1[k], p2[k], q1[k], q2[k]
        else:
            up_port, lo_port, up_pol, lo_pol = p2[k], p1[k], q2[k], q1[k]
        g = groups.setdefault((int(s1[k]), int(up_port), int(lo_port)), np.zeros((2, 2), complex))
        g[up_pol, lo_pol] += state.amps[k]
    total = sum(float(np.sum(np.abs(g) ** 2)) for g in groups.values())
    if total == 0:
        raise EmptyWindow(f"no one-photon-per-line amplitude on sites {sorted(window)}")
    bell = np.array([[0, 1], [1, 0]]) / _RT2
    hit = sum(abs(np.sum(bell * g)) ** 2 for g in groups.values())
    return float(hit / total)
