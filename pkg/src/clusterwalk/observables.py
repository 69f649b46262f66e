"""Measurement-layer reductions of two-photon states.

Positions are the vertex each photon is about to enter.  Boson outcomes are
unordered; in joint grids a two-site outcome ``{i, j}`` is split evenly over
``(i, j)`` and ``(j, i)`` so the grid is symmetric.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from .coin import CoinUnitary, TransferOperator, scatter_vertex, single_photon_transfer
from .fock import TwoPhotonState
from .lattice import Port, exit_direction

__all__ = [
    "BranchWeights",
    "JointDistribution",
    "branch_weights",
    "clustering_defect",
    "direction_pair_probabilities",
    "expected_front_site",
    "joint_site_distribution",
    "mixed_direction_probability",
    "site_marginal",
    "vertex_exit_table",
]


@dataclass(frozen=True)
class JointDistribution:
    grid: dict[tuple[int, int], float]
    step: int

    def total(self) -> float:
        return float(sum(self.grid.values()))

    def off_diagonal(self) -> float:
        return float(sum(p for (i, j), p in self.grid.items() if i != j))

    def get(self, i: int, j: int) -> float:
        return self.grid.get((i, j), 0.0)

    def sites(self) -> list[int]:
        return sorted({s for key in self.grid for s in key})

    def to_array(self, lo: int, hi: int) -> np.ndarray:
        """Dense grid over sites ``lo..hi``; row is photon one, column photon two."""
        n = hi - lo + 1
        out = np.zeros((n, n))
        for (i, j), p in self.grid.items():
            if lo <= i <= hi and lo <= j <= hi:
                out[i - lo, j - lo] = p
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("site1,site2,probability\n")
        for (i, j) in sorted(self.grid):
            buf.write(f"{i},{j},{self.grid[(i, j)]:.17g}\n")
        return buf.getvalue()

    def to_ppm(self, lo: int, hi: int, scale: int = 8, modulus: bool = False) -> bytes:
        """Binary grayscale PPM, linear and max-normalized (white = largest).

        Photon one runs down the rows from ``lo``; with ``modulus`` the pixel
        value is ``sqrt(p)`` instead of ``p``.
        """
        grid = self.to_array(lo, hi)
        if modulus:
            grid = np.sqrt(grid)
        peak = grid.max()
        levels = np.zeros_like(grid) if peak <= 0 else grid / peak
        pix = np.round(levels * 255).astype(np.uint8)
        pix = np.kron(pix, np.ones((scale, scale), dtype=np.uint8))
        rgb = np.repeat(pix[:, :, None], 3, axis=2)
        h, w = pix.shape
        return f"P6\n{w} {h}\n255\n".encode("ascii") + rgb.tobytes()

    def to_svg(self, lo: int, hi: int, cell: int = 12, modulus: bool = False) -> str:
        grid = self.to_array(lo, hi)
        if modulus:
            grid = np.sqrt(grid)
        peak = grid.max()
        n = grid.shape[0]
        parts = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{n * cell}" height="{n * cell}">',
            f'<rect width="{n * cell}" height="{n * cell}" fill="black"/>',
        ]
        for r in range(n):
            for c in range(n):
                if grid[r, c] <= 0:
                    continue
                g = int(round(255 * grid[r, c] / peak))
                parts.append(
                    f'<rect x="{c * cell}" y="{r * cell}" width="{cell}" height="{cell}" '
                    f'fill="rgb({g},{g},{g})"/>'
                )
        parts.append("</svg>")
        return "\n".join(parts) + "\n"


def _pair_sites(state: TwoPhotonState) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    r, c = state.pair_indices()
    lat = state.lattice
    return lat.sites_of(r), lat.sites_of(c), state.probabilities()


def joint_site_distribution(state: TwoPhotonState) -> JointDistribution:
    s1, s2, p = _pair_sites(state)
    grid: dict[tuple[int, int], float] = {}
    if state.is_boson:
        same = s1 == s2
        w = np.where(same, p, p / 2)
        keys = np.concatenate([np.stack([s1, s2], 1), np.stack([s2, s1], 1)[~same]])
        vals = np.concatenate([w, w[~same]])
    else:
        keys = np.stack([s1, s2], 1)
        vals = p
    for (i, j), v in zip(keys.tolist(), vals.tolist()):
        grid[(i, j)] = grid.get((i, j), 0.0) + v
    return JointDistribution(grid, state.time)


def site_marginal(state: TwoPhotonState) -> dict[int, float]:
    """Expected photon number per site (sums to 2)."""
    s1, s2, p = _pair_sites(state)
    out: dict[int, float] = {}
    for s, v in zip(np.concatenate([s1, s2]).tolist(), np.concatenate([p, p]).tolist()):
        out[s] = out.get(s, 0.0) + v
    return out


def clustering_defect(state: TwoPhotonState) -> float:
    """Probability that the two photons are at different sites."""
    s1, s2, p = _pair_sites(state)
    return float(np.sum(p[s1 != s2]))


def _moving_right(state: TwoPhotonState) -> tuple[np.ndarray, np.ndarray]:
    r, c = state.pair_indices()
    lat = state.lattice
    return lat.ports_of(r) <= 2, lat.ports_of(c) <= 2


def mixed_direction_probability(state: TwoPhotonState) -> float:
    """Probability that the photons travel in opposite directions."""
    right1, right2 = _moving_right(state)
    return float(np.sum(state.probabilities()[right1 != right2]))


def direction_pair_probabilities(
    state: TwoPhotonState, transfer: TransferOperator | CoinUnitary
) -> dict[str, float]:
    """Scatter once and sum probability by exit-side pair.

    The exit side of a photon is the travel direction of the mode it enters
    next, so the sums are read off after one full transfer step.
    """
    from .fock import step

    if isinstance(transfer, CoinUnitary):
        transfer = single_photon_transfer(transfer, None, state.time, state.lattice)
    out = step(state, transfer)
    right1, right2 = _moving_right(out)
    p = out.probabilities()
    return {
        "LL": float(np.sum(p[~right1 & ~right2])),
        "RR": float(np.sum(p[right1 & right2])),
        "mixed": float(np.sum(p[right1 != right2])),
    }


def vertex_exit_table(state: TwoPhotonState, coin: CoinUnitary) -> dict[tuple[int, int], float]:
    """Two-photon exit-port probabilities after one vertex scattering.

    Works on the product-basis tensor with explicit per-photon coin
    application (no lattice transfer).  Keys are unordered exit-port pairs
    ``(i, j)`` with ``i <= j``; sites and polarizations are summed over.
    """
    rows, cols, amps = state.ordered()
    lat = state.lattice
    tensor = {
        (lat.mode(int(i)), lat.mode(int(j))): complex(a) for i, j, a in zip(rows, cols, amps)
    }
    out = scatter_vertex(tensor, coin)
    table = {(i, j): 0.0 for i in range(1, 5) for j in range(i, 5)}
    seen = set()
    for (a, b), amp in out.items():
        if (a, b) in seen:
            continue
        if a == b:
            prob = abs(amp) ** 2
        elif state.is_boson:
            seen.add((b, a))
            prob = abs(amp + out.get((b, a), 0j)) ** 2 / 2
        else:
            prob = abs(amp) ** 2
        key = tuple(sorted((int(a.port), int(b.port))))
        table[key] += prob
    return table


def exit_side(pair: tuple[int, int]) -> str:
    sides = "".join(exit_direction(Port(p)).value for p in pair)
    return "LR" if sides in ("LR", "RL") else sides


def expected_front_site(step: int, origin: int = 0) -> int:
    """Site entered by the ballistic cluster at ``step`` (it enters ``origin + 1`` at step 1)."""
    return origin + step


@dataclass(frozen=True)
class BranchWeights:
    oscillating: float
    ballistic: float
    other: float
    front_site: int

    def as_dict(self) -> dict[str, float]:
        return {
            "oscillating": self.oscillating,
            "ballistic": self.ballistic,
            "other": self.other,
            "front_site": self.front_site,
        }


def branch_weights(
    state: TwoPhotonState,
    origin_window_radius: int = 1,
    origin: int = 0,
    front_site: int | None = None,
) -> BranchWeights:
    """Split probability into the cluster near the origin, the ballistic front and the rest.

    A pair counts as oscillating when both photons are within
    ``origin_window_radius`` of ``origin``, and as ballistic when both enter
    the front site.
    """
    if front_site is None:
        front_site = expected_front_site(state.time, origin)
    if abs(front_site - origin) <= origin_window_radius:
        raise ValueError(
            f"front site {front_site} lies inside the origin window; need step >= "
            f"{origin_window_radius + 1}"
        )
    s1, s2, p = _pair_sites(state)
    near = (np.abs(s1 - origin) <= origin_window_radius) & (
        np.abs(s2 - origin) <= origin_window_radius
    )
    front = (s1 == front_site) & (s2 == front_site)
    return BranchWeights(
        float(np.sum(p[near])),
        float(np.sum(p[front])),
        float(np.sum(p[~near & ~front])),
        front_site,
    )


def support_sites(state: TwoPhotonState, tol: float = 1e-24) -> set[int]:
    s1, s2, p = _pair_sites(state)
    keep = p > tol
    return set(s1[keep].tolist()) | set(s2[keep].tolist())
