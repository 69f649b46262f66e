"""Dense brute-force reference evolution.

Shares nothing with the sparse engine beyond the state container: the
one-step matrix is assembled here from block matrices (coin on each vertex,
then an explicit permutation for the wiring, then a diagonal phase layer),
and the two-photon tensor is advanced as ``psi <- T psi T^T``.
"""

from __future__ import annotations

import numpy as np

from .coin import CoinUnitary, PhaseSchedule
from .fock import TwoPhotonState
from .lattice import BoundaryCrossing, LatticeConfig, Line

__all__ = ["DENSE_MODE_BUDGET", "CapacityError", "brute_force_oracle", "dense_transfer"]

DENSE_MODE_BUDGET = 200


class CapacityError(RuntimeError):
    """The lattice is too large for dense evolution."""


def _mode_number(site: int, port: int, pol: int, lattice: LatticeConfig) -> int:
    return ((site + lattice.half_width) * 4 + (port - 1)) * lattice.n_pol + pol


def dense_transfer(
    coin: CoinUnitary, schedule: PhaseSchedule | None, step: int, lattice: LatticeConfig
) -> tuple[np.ndarray, np.ndarray]:
    """Full ``N x N`` one-step matrix and a mask of leaky (boundary) columns."""
    n = lattice.n_modes
    npol = lattice.n_pol
    # scattering: block diagonal, one 4x4 coin per vertex, identity on polarization
    block = np.kron(coin.entries, np.eye(npol))
    scatter = np.kron(np.eye(lattice.n_sites), block)

    # wiring on outgoing modes (same numbering as incoming); off-lattice rows dropped
    perm = np.zeros((n, n), dtype=np.complex128)
    phases = np.ones(n, dtype=np.complex128)
    active = schedule.phases_at(step) if schedule else {}
    lost = np.zeros(n, dtype=bool)
    for site in range(-lattice.half_width, lattice.half_width + 1):
        for port in (1, 2, 3, 4):
            if port in (3, 4):
                dest_site, dest_port, edge = site + 1, port - 2, site
            else:
                dest_site, dest_port, edge = site - 1, port + 2, site - 1
            line = Line.UPPER if port in (1, 3) else Line.LOWER
            for pol in range(npol):
                src = _mode_number(site, port, pol, lattice)
                if abs(dest_site) > lattice.half_width:
                    lost[src] = True
                    continue
                dst = _mode_number(dest_site, dest_port, pol, lattice)
                perm[dst, src] = 1.0
                phases[dst] = np.exp(1j * active.get((edge, line), 0.0))
    t = np.diag(phases) @ perm @ scatter
    leaky = np.abs(scatter[lost, :]).sum(axis=0) > 0
    return t, leaky


def brute_force_oracle(
    initial: TwoPhotonState,
    coin: CoinUnitary,
    schedule: PhaseSchedule | None,
    steps: int,
) -> TwoPhotonState:
    """Evolve ``steps`` steps with dense linear algebra, then canonicalize."""
    lattice = initial.lattice
    if lattice.n_modes > DENSE_MODE_BUDGET:
        raise CapacityError(
            f"{lattice.n_modes} modes exceeds the dense budget of {DENSE_MODE_BUDGET}"
        )
    psi = initial.to_dense()
    for k in range(steps):
        t, leaky = dense_transfer(coin, schedule, initial.time + k, lattice)
        occupied = (np.abs(psi).sum(axis=0) + np.abs(psi).sum(axis=1)) > 0
        if np.any(occupied & leaky):
            raise BoundaryCrossing("dense evolution reached the lattice boundary")
        psi = t @ psi @ t.T
    return TwoPhotonState.from_dense(
        lattice, initial.statistics, psi, time=initial.time + steps
    )
