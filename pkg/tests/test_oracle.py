import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from clusterwalk import Statistics, brute_force_oracle, evolve, from_single_modes, grover_coin
from clusterwalk.coin import CoinUnitary, single_photon_transfer
from clusterwalk.lattice import BoundaryCrossing, LatticeConfig
from clusterwalk.oracle import CapacityError, dense_transfer

from strategies import HALF_WIDTH, STEPS, modes, schedules

COIN = grover_coin()


@settings(max_examples=30, deadline=None)
@given(
    a=modes(polarized=True, radius=1),
    b=modes(polarized=True, radius=1),
    stats=st.sampled_from(list(Statistics)),
    sched=schedules,
)
def test_oracle_matches_sparse_engine(a, b, stats, sched):
    if stats is Statistics.DISTINGUISHABLE and a == b:
        return
    lat = LatticeConfig(HALF_WIDTH, polarized=True)
    init = from_single_modes(a, b, stats, lat)
    sparse = evolve(init, COIN, sched, STEPS)[-1]
    dense = brute_force_oracle(init, COIN, sched, STEPS)
    assert dense.max_abs_diff(sparse) < 1e-12


def test_dense_transfer_agrees_with_sparse_operator():
    lat = LatticeConfig(3)
    rng = np.random.default_rng(7)
    q, _ = np.linalg.qr(rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4)))
    coin = CoinUnitary(q)
    t, leaky = dense_transfer(coin, None, 0, lat)
    s = single_photon_transfer(coin, None, 0, lat).to_dense()
    assert np.allclose(t, s, atol=1e-15)
    assert leaky.sum() == 8  # every port of both edge vertices


def test_capacity_limit():
    lat = LatticeConfig(30)
    from conftest import incoming

    init = from_single_modes(incoming(0, 1), incoming(0, 2), Statistics.BOSON, lat)
    with pytest.raises(CapacityError):
        brute_force_oracle(init, COIN, None, 1)


def test_oracle_boundary():
    from conftest import incoming

    lat = LatticeConfig(1)
    init = from_single_modes(incoming(1, 1), incoming(0, 2), Statistics.BOSON, lat)
    with pytest.raises(BoundaryCrossing):
        brute_force_oracle(init, COIN, None, 1)
