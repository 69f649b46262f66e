"""Two-photon quantum walks on a Grover-coin four-port lattice."""

__version__ = "0.1.0"

from ._kernels import BACKEND
from .coin import CoinUnitary, PhaseEntry, PhaseSchedule, grover_coin, single_photon_transfer
from .fock import Statistics, TwoPhotonState, evolve, from_single_modes, step
from .lattice import BoundaryCrossing, LatticeConfig, Mode, Phase, Polarization, Port
from .oracle import CapacityError, brute_force_oracle
from .states import NamedState, build, classify_clustering, parse_named

__all__ = [
    "BACKEND",
    "BoundaryCrossing",
    "CapacityError",
    "CoinUnitary",
    "LatticeConfig",
    "Mode",
    "NamedState",
    "Phase",
    "PhaseEntry",
    "PhaseSchedule",
    "Polarization",
    "Port",
    "Statistics",
    "TwoPhotonState",
    "brute_force_oracle",
    "build",
    "classify_clustering",
    "evolve",
    "from_single_modes",
    "grover_coin",
    "parse_named",
    "single_photon_transfer",
    "step",
]
