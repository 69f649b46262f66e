import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from clusterwalk import Statistics, TwoPhotonState, evolve, from_single_modes, grover_coin, step
from clusterwalk.coin import single_photon_transfer
from clusterwalk.lattice import BoundaryCrossing, LatticeConfig

from conftest import incoming
from strategies import HALF_WIDTH, STEPS, modes, schedules

COIN = grover_coin()
SQRT_HALF = 2 ** -0.5


def test_storage_is_canonical():
    lat = LatticeConfig(2)
    a, b = incoming(0, 2), incoming(0, 1)
    s = TwoPhotonState.from_amplitudes(lat, "boson", {(a, b): 0.6, (b, a): 0.2})
    assert len(s) == 1
    assert s.amplitude(a, b) == s.amplitude(b, a) == pytest.approx(0.8)
    d = TwoPhotonState.from_amplitudes(lat, "distinguishable", {(a, b): 0.6, (b, a): 0.8})
    assert len(d) == 2
    assert d.amplitude(b, a) == pytest.approx(0.8)


def test_ordered_view_carries_sqrt_half():
    lat = LatticeConfig(1)
    s = from_single_modes(incoming(0, 1), incoming(0, 2), Statistics.BOSON, lat)
    rows, cols, amps = s.ordered()
    assert len(rows) == 2
    assert np.allclose(amps, SQRT_HALF)
    d = s.to_dense()
    assert np.array_equal(d, d.T)
    assert np.sum(np.abs(d) ** 2) == pytest.approx(1)
    doubled = from_single_modes(incoming(0, 1), incoming(0, 1), Statistics.BOSON, lat)
    assert doubled.ordered()[2].tolist() == [1]


def test_first_step_amplitudes():
    lat = LatticeConfig(2)
    s = from_single_modes(incoming(0, 1), incoming(0, 2), Statistics.BOSON, lat)
    out = step(s, single_photon_transfer(COIN, None, 0, lat))
    amp = out.amplitudes
    q = SQRT_HALF / 2
    assert amp[(incoming(-1, 3), incoming(-1, 3))] == pytest.approx(-q)
    assert amp[(incoming(-1, 4), incoming(-1, 4))] == pytest.approx(-q)
    assert amp[(incoming(-1, 3), incoming(-1, 4))] == pytest.approx(0.5)
    assert amp[(incoming(1, 1), incoming(1, 1))] == pytest.approx(q)
    assert amp[(incoming(1, 2), incoming(1, 2))] == pytest.approx(q)
    assert amp[(incoming(1, 1), incoming(1, 2))] == pytest.approx(0.5)
    assert len(amp) == 6
    assert out.time == 1


def test_identical_distinguishable_photons_rejected():
    with pytest.raises(ValueError):
        from_single_modes(incoming(0, 1), incoming(0, 1), Statistics.DISTINGUISHABLE, LatticeConfig(1))


def test_boundary_raises():
    lat = LatticeConfig(1)
    s = from_single_modes(incoming(0, 1), incoming(0, 2), Statistics.BOSON, lat)
    with pytest.raises(BoundaryCrossing):
        evolve(s, COIN, None, 2)


def test_arithmetic_and_translation():
    lat = LatticeConfig(3)
    s = from_single_modes(incoming(0, 1), incoming(0, 2), Statistics.BOSON, lat)
    assert (s + s).norm_sq() == pytest.approx(4)
    assert (s - s).norm_sq() == 0
    assert (s * 2 / 2).max_abs_diff(s) == 0
    moved = s.translated(2)
    assert moved.amplitude(incoming(2, 1), incoming(2, 2)) == 1
    with pytest.raises(ValueError):
        s.translated(4)
    with pytest.raises(ValueError):
        s + from_single_modes(incoming(0, 1), incoming(0, 2), Statistics.BOSON, LatticeConfig(4))


def test_json_roundtrip():
    lat = LatticeConfig(4, polarized=True)
    from clusterwalk import build

    s = evolve(build("A+:1,2", lat), COIN, None, 3)[-1]
    back = TwoPhotonState.from_json(s.to_json())
    assert back.max_abs_diff(s) == 0
    assert back.time == 3
    assert json.loads(s.to_json())["header"]["statistics"] == "boson"


@settings(max_examples=40, deadline=None)
@given(
    a=modes(radius=1),
    b=modes(radius=1),
    stats=st.sampled_from(list(Statistics)),
    sched=schedules,
)
def test_norm_symmetry_and_backends(a, b, stats, sched):
    if stats is Statistics.DISTINGUISHABLE and a == b:
        return
    lat = LatticeConfig(HALF_WIDTH)
    init = from_single_modes(a, b, stats, lat)
    runs = {name: evolve(init, COIN, sched, STEPS, backend=name) for name in _backends()}
    ref = next(iter(runs.values()))
    for s in ref:
        assert abs(s.norm_sq() - 1) < 1e-12
        if s.is_boson:
            d = s.to_dense()
            assert np.array_equal(d, d.T)
    for states in runs.values():
        for x, y in zip(states, ref):
            assert np.array_equal(x.keys, y.keys)
            assert np.array_equal(x.amps, y.amps)


def _backends():
    from clusterwalk._kernels import BACKENDS

    return sorted(BACKENDS)


def test_single_line_phase_breaks_clustering():
    from clusterwalk.coin import PhaseEntry, PhaseSchedule
    from clusterwalk.lattice import Line
    from clusterwalk.observables import clustering_defect

    lat = LatticeConfig(8)
    init = from_single_modes(incoming(0, 1), incoming(0, 2), Statistics.BOSON, lat)
    sched = PhaseSchedule([PhaseEntry(2, Line.UPPER, math.pi / 2, step=2)])
    states = evolve(init, COIN, sched, 6)
    assert clustering_defect(states[2]) == 0
    assert clustering_defect(states[-1]) > 0.1
