"""End-to-end acceptance checks, one test per criterion with its runtime budget."""

import dataclasses
import math
import time

import numpy as np
import pytest

from clusterwalk import (
    LatticeConfig,
    PhaseEntry,
    PhaseSchedule,
    Statistics,
    brute_force_oracle,
    build,
    classify_clustering,
    evolve,
    grover_coin,
    single_photon_transfer,
)
from clusterwalk.coherent import CoherentField, balance_defect, coherent_step
from clusterwalk.coin import is_unitary
from clusterwalk.lattice import Line
from clusterwalk.observables import (
    branch_weights,
    clustering_defect,
    direction_pair_probabilities,
    joint_site_distribution,
    support_sites,
    vertex_exit_table,
)
from clusterwalk.oracle import dense_transfer
from clusterwalk.presets import list_presets, preset
from clusterwalk.report import run
from clusterwalk.states import Classification, polarization_bell_fidelity

from conftest import incoming

COIN = grover_coin()


class Budget:
    def __init__(self, seconds):
        self.seconds = seconds

    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        elapsed = time.perf_counter() - self.t0
        if exc[0] is None:
            assert elapsed < self.seconds, f"took {elapsed:.2f}s, budget {self.seconds}s"


def switch(edge, step):
    return PhaseSchedule(
        [
            PhaseEntry(edge, Line.UPPER, math.pi / 2, step),
            PhaseEntry(edge, Line.LOWER, -math.pi / 2, step),
        ]
    )


@pytest.mark.criterion(1, "single-vertex exit probabilities")
def test_exit_table(psi0_factory):
    expected = {
        (1, 1): 1 / 8, (1, 2): 1 / 4, (1, 3): 0, (1, 4): 0, (2, 2): 1 / 8,
        (2, 3): 0, (2, 4): 0, (3, 3): 1 / 8, (3, 4): 1 / 4, (4, 4): 1 / 8,
    }
    with Budget(1):
        table = vertex_exit_table(psi0_factory(LatticeConfig(2)), COIN)
    assert set(table) == set(expected)
    for key, p in expected.items():
        assert table[key] == pytest.approx(p, abs=1e-12), key


@pytest.mark.criterion(2, "direction sums after one step")
def test_direction_sums(psi0_factory):
    with Budget(1):
        d = direction_pair_probabilities(psi0_factory(LatticeConfig(2)), COIN)
    assert d["LL"] == pytest.approx(0.5, abs=1e-12)
    assert d["RR"] == pytest.approx(0.5, abs=1e-12)
    assert d["mixed"] == pytest.approx(0.0, abs=1e-12)


@pytest.mark.criterion(3, "bosons cluster for 50 steps, distinguishable photons do not")
def test_long_walk_clustering(psi0_factory):
    with Budget(10):
        lat = LatticeConfig(51)
        bosons = evolve(psi0_factory(lat), COIN, None, 50)
        twins = evolve(psi0_factory(lat, Statistics.DISTINGUISHABLE), COIN, None, 3)
    for s in bosons:
        assert clustering_defect(s) < 1e-12, s.time
    assert max(clustering_defect(s) for s in twins) > 0.1


@pytest.mark.criterion(4, "half oscillates near the origin, half travels ballistically")
def test_split_structure(psi0_factory):
    with Budget(10):
        lat = LatticeConfig(51)
        states = evolve(psi0_factory(lat), COIN, None, 50)
    front_support = None
    for s in states[2:]:
        n = s.time
        bw = branch_weights(s)
        assert bw.oscillating == pytest.approx(0.5, abs=1e-10), n
        assert bw.ballistic == pytest.approx(0.5, abs=1e-10), n
        jd = joint_site_distribution(s)
        osc_sites = {i for (i, j), p in jd.grid.items() if p > 1e-14 and i < n - 1}
        # the reflected pair bounces between the origin and the vertex it came from
        assert osc_sites <= {-1, 0}, (n, osc_sites)
        assert bw.front_site == n
        # ballistic amplitudes: same set of (port, port) terms at every step
        r, c = s.pair_indices()
        at_front = (lat.sites_of(r) == n) & (lat.sites_of(c) == n)
        terms = len(np.flatnonzero(at_front & (s.probabilities() > 1e-14)))
        if front_support is None:
            front_support = terms
        assert terms <= front_support
        assert support_sites(s) == ({-1, n} if n % 2 else {0, n})


@pytest.mark.criterion(5, "reflecting and transmitting states are fixed by two steps")
def test_two_step_fixed_points():
    with Budget(1):
        lat = LatticeConfig(4)
        t0 = build("psi_t:m=0:RR", lat)
        r0 = build("psi_r:3,4:m=-1", lat)
        t2 = evolve(t0, COIN, None, 2)[-1]
        r2 = evolve(r0, COIN, None, 2)[-1]
    assert t2.max_abs_diff(t0.translated(2).with_time(2)) < 1e-12
    assert r2.max_abs_diff(r0.with_time(2)) < 1e-12
    assert t2.norm_sq() == pytest.approx(1.0, abs=1e-12)


@pytest.mark.criterion(6, "clustering census of the polarization families")
def test_census():
    expected = {
        "A+:1,2": Classification.CLUSTERS,
        "B+:1,2": Classification.CLUSTERS,
        "A-:1,2": Classification.ANTI_CLUSTERS_FIRST_STEP,
        "A+:1,1": Classification.DECLUSTERS,
        "A+:2,2": Classification.DECLUSTERS,
        "C+:1,1": Classification.DECLUSTERS,
        "C-:1,1": Classification.DECLUSTERS,
        "C+:2,2": Classification.DECLUSTERS,
        "C-:2,2": Classification.DECLUSTERS,
        "C+:1,2": Classification.DECLUSTERS,
        "C-:1,2": Classification.DECLUSTERS,
    }
    with Budget(5):
        got = {tag: classify_clustering(tag) for tag in expected}
    wrong = {tag: (got[tag].value, want.value) for tag, want in expected.items() if got[tag] != want}
    assert not wrong, f"(got, expected): {wrong}"


@pytest.mark.criterion(7, "polarization entanglement survives transport")
def test_entanglement_transport():
    with Budget(5):
        lat = LatticeConfig(11, polarized=True)
        states = evolve(build("A+:1,2", lat), COIN, None, 10)
    for s in states[2:]:
        n = s.time
        assert polarization_bell_fidelity(s, [n]) == pytest.approx(1.0, abs=1e-10), n
        assert polarization_bell_fidelity(s, [-1, 0, 1]) == pytest.approx(1.0, abs=1e-10), n


@pytest.mark.criterion(8, "coherent inputs: no reflection when balanced, exact one-step split")
def test_coherent_states():
    with Budget(1):
        lat = LatticeConfig(21)
        f = CoherentField.from_records(
            lat, [{"site": 0, "upper_amp": [0.5, 0.0], "lower_amp": [0.5, 0.0]}]
        )
        fields = [f]
        for _ in range(20):
            fields.append(coherent_step(fields[-1], single_photon_transfer(COIN, None, fields[-1].time, lat)))
        alpha, beta = 0.3 + 0.2j, 0.1 - 0.4j
        g = CoherentField.from_amplitudes(lat, {incoming(0, 1): alpha, incoming(0, 2): beta})
        g1 = coherent_step(g, single_photon_transfer(COIN, None, 0, lat))
    for fld in fields:
        ports = lat.ports_of(np.arange(lat.n_modes))
        assert np.max(np.abs(fld.vector[ports >= 3])) <= 1e-12
    # outgoing ports 1..4 of vertex 0: P1/P2 reflect to site -1 (arriving on P3/P4)
    got = [g1.amplitude(incoming(-1, 3)), g1.amplitude(incoming(-1, 4)),
           g1.amplitude(incoming(1, 1)), g1.amplitude(incoming(1, 2))]
    want = [(beta - alpha) / 2, (alpha - beta) / 2, (alpha + beta) / 2, (alpha + beta) / 2]
    assert np.max(np.abs(np.array(got) - np.array(want))) < 1e-12
    assert balance_defect(g1, "R") < 1e-12
    assert g1.mean_photon_number() == pytest.approx(g.mean_photon_number(), abs=1e-12)


def _pairs(state, tol=1e-12):
    return {k for k, p in joint_site_distribution(state).grid.items() if p > tol}


@pytest.mark.criterion(9, "a one-shot phase switch converts ballistic and oscillating branches")
def test_phase_switch(psi0_factory):
    with Budget(5):
        lat = LatticeConfig(14)
        psi0 = psi0_factory(lat)
        one_shot = evolve(psi0, COIN, switch(4, 4), 12)
        persistent = evolve(psi0, COIN, switch(4, None), 9)
        release = evolve(psi0, COIN, switch(-1, 3), 12)
        plain = evolve(psi0, COIN, None, 12)

    # before the switch both runs have the unswitched split
    for n in (2, 3, 4):
        assert branch_weights(one_shot[n]).ballistic == pytest.approx(0.5, abs=1e-10)
        assert one_shot[n].max_abs_diff(plain[n]) < 1e-12

    # ballistic -> oscillating: the pair stops and bounces between sites 4 and 5
    # (at step 5 the stalled pair still coincides with the would-be front)
    for n in range(6, 13):
        bw = branch_weights(one_shot[n])
        assert bw.ballistic == pytest.approx(0.0, abs=1e-12), n
        assert bw.oscillating == pytest.approx(0.5, abs=1e-10), n
        stuck = branch_weights(one_shot[n], origin=4, origin_window_radius=1, front_site=n + 10)
        assert stuck.other == pytest.approx(0.5, abs=1e-10)
        assert _pairs(one_shot[n]) == {(-1, -1) if n % 2 else (0, 0), (5, 5) if n % 2 else (4, 4)}

    # oscillating -> ballistic: a shot on edge -1 during an odd step releases the bounce
    for n in range(5, 13):
        bw = branch_weights(release[n])
        assert bw.ballistic == pytest.approx(0.5, abs=1e-10), n
        assert _pairs(release[n]) == {(n - 4, n - 4), (n, n)}

    # a persistent phase on the same edge reverses the front instead of trapping it
    assert _pairs(persistent[7]) == {(-1, -1), (3, 3)}
    assert _pairs(persistent[9]) == {(-1, -1), (1, 1)}


@pytest.mark.criterion(10, "sparse engine matches the dense oracle")
def test_oracle_equivalence():
    with Budget(30):
        worst = 0.0
        checked = 0
        for name in list_presets():
            cfg = preset(name)
            cfg = preset(name, steps=min(cfg.steps, 10))
            if cfg.initial_kind == "coherent":
                lat = cfg.resolved_lattice()
                assert lat.half_width <= 12
                f = CoherentField.from_records(lat, cfg.initial)
                v = f.vector.copy()
                for k in range(cfg.steps):
                    t, _ = dense_transfer(cfg.coin, cfg.schedule, k, lat)
                    v = t @ v
                    f = coherent_step(f, single_photon_transfer(cfg.coin, cfg.schedule, k, lat))
                    worst = max(worst, float(np.max(np.abs(f.vector - v))))
                checked += 1
                continue
            if cfg.initial_kind == "census":
                for named in cfg.initial:
                    lat = LatticeConfig(named.site + cfg.steps + 1, polarized=True)
                    states = evolve(build(named, lat), cfg.coin, cfg.schedule, cfg.steps)
                    ref = brute_force_oracle(states[0], cfg.coin, cfg.schedule, cfg.steps)
                    worst = max(worst, ref.max_abs_diff(states[-1]))
                    checked += 1
                continue
            variants = [cfg]
            if cfg.initial_kind == "modes":
                other = (
                    Statistics.DISTINGUISHABLE
                    if cfg.statistics is Statistics.BOSON
                    else Statistics.BOSON
                )
                variants.append(dataclasses.replace(cfg, statistics=other))
            extra = switch(3, None) if not cfg.schedule else PhaseSchedule()
            variants += [dataclasses.replace(v, schedule=extra) for v in list(variants)]
            for v in variants:
                assert v.resolved_lattice().half_width <= 12
                rep = run(v, verify=True)
                worst = max(worst, rep.summary["oracle_max_abs_diff"])
                checked += 1
    assert checked >= 20
    assert worst < 1e-12


@pytest.mark.criterion(11, "norm, exchange symmetry, unitarity and determinism")
def test_global_invariants(psi0_factory, tmp_path):
    with Budget(10):
        lat = LatticeConfig(51)
        for stats in Statistics:
            states = evolve(psi0_factory(lat, stats), COIN, switch(2, None), 50)
            for s in states:
                assert abs(s.norm_sq() - 1.0) < 1e-10
        bosons = evolve(psi0_factory(LatticeConfig(21)), COIN, switch(2, 5), 20)
        for s in bosons:
            dense = s.to_dense()
            assert np.array_equal(dense, dense.T)
        for n in (0, 3):
            for sched in (None, switch(1, None)):
                assert is_unitary(single_photon_transfer(COIN, sched, n, LatticeConfig(6)))
                assert is_unitary(single_photon_transfer(COIN, sched, n, LatticeConfig(4, True)))
        outs = []
        for k in range(2):
            out = tmp_path / f"run{k}"
            run(preset("fig6", steps=6), out)
            outs.append({p.name: p.read_bytes() for p in sorted(out.iterdir())})
    assert outs[0] == outs[1]
