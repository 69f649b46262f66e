import numpy as np
import pytest

from clusterwalk import LatticeConfig, grover_coin
from clusterwalk.coherent import CoherentField, balance_defect, coherent_step, field_csv
from clusterwalk.coin import single_photon_transfer
from clusterwalk.lattice import Direction

from conftest import incoming


def test_from_records():
    lat = LatticeConfig(2)
    f = CoherentField.from_records(
        lat, [{"site": 0, "upper_amp": [1, 0], "lower_amp": [0, 1]}, {"site": 1, "direction": "L", "upper_amp": [2, 0]}]
    )
    assert f.amplitude(incoming(0, 2)) == 1j
    assert f.amplitude(incoming(1, 3)) == 2
    assert f.mean_photon_number() == pytest.approx(6)
    assert f.side_power(Direction.L) == pytest.approx(4)
    assert balance_defect(f, "R") == pytest.approx(np.sqrt(2))
    with pytest.raises(ValueError):
        CoherentField.from_records(LatticeConfig(2, True), [])
    with pytest.raises(ValueError):
        CoherentField(lat, np.zeros(3))


def test_balanced_field_only_transmits():
    lat = LatticeConfig(6)
    f = CoherentField.from_amplitudes(lat, {incoming(0, 1): 0.7, incoming(0, 2): 0.7})
    for _ in range(5):
        f = coherent_step(f, single_photon_transfer(grover_coin(), None, f.time, lat))
    assert f.amplitudes == {incoming(5, 1): pytest.approx(0.7), incoming(5, 2): pytest.approx(0.7)}


def test_field_csv():
    lat = LatticeConfig(2)
    f = CoherentField.from_amplitudes(lat, {incoming(0, 1): 0.5 + 0.5j})
    text = field_csv([f])
    assert text.splitlines() == ["step,site,port,pol,re,im", "0,0,1,-,0.5,0.5"]
