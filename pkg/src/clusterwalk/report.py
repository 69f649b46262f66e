"""Scenario execution, invariant checks and file outputs."""

from __future__ import annotations

import io
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .coherent import CoherentField, balance_defect, coherent_step, field_csv
from .coin import single_photon_transfer
from .config import OutputSpec, RunConfig
from .fock import NORM_TOL, TwoPhotonState, from_single_modes, step
from .lattice import Direction
from .observables import (
    branch_weights,
    clustering_defect,
    joint_site_distribution,
    mixed_direction_probability,
    vertex_exit_table,
)
from .oracle import DENSE_MODE_BUDGET, CapacityError, brute_force_oracle
from .states import (
    EmptyWindow,
    build,
    classify_clustering,
    first_step_decomposition,
    polarization_bell_fidelity,
)

__all__ = ["InvariantBreach", "RunReport", "run", "ORACLE_TOL", "ORACLE_MAX_HALF_WIDTH"]

log = logging.getLogger(__name__)

ORACLE_TOL = 1e-12
ORACLE_MAX_HALF_WIDTH = 12
CLUSTER_TOL = 1e-12
SPLIT_TOL = 1e-10
BELL_TOL = 1e-10
COHERENT_TOL = 1e-12


class InvariantBreach(RuntimeError):
    """Raised by :func:`run` with ``strict=True`` when a check fails."""


@dataclass
class RunReport:
    name: str
    config_sha256: str
    records: list[dict] = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    breaches: list[str] = field(default_factory=list)
    outputs: list[str] = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.breaches

    def to_obj(self) -> dict:
        return {
            "provenance": {
                "config_sha256": self.config_sha256,
                "engine": "clusterwalk",
                "engine_version": __version__,
                "preset": self.name,
            },
            "records": self.records,
            "summary": self.summary,
            "breaches": self.breaches,
            "outputs": self.outputs,
            **({"extra": self.extra} if self.extra else {}),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_obj(), indent=2, sort_keys=True) + "\n"


def _initial_state(config: RunConfig, lattice) -> TwoPhotonState:
    if config.initial_kind == "named":
        return build(config.initial, lattice)
    a, b = config.initial
    return from_single_modes(a, b, config.statistics, lattice)


def _directions(state: TwoPhotonState) -> dict[str, float]:
    r, c = state.pair_indices()
    lat = state.lattice
    right1, right2 = lat.ports_of(r) <= 2, lat.ports_of(c) <= 2
    p = state.probabilities()
    return {
        "LL": float(np.sum(p[~right1 & ~right2])),
        "RR": float(np.sum(p[right1 & right2])),
        "mixed": float(np.sum(p[right1 != right2])),
    }


class _Writer:
    def __init__(self, out_dir: Path | None, report: RunReport):
        self.out_dir = out_dir
        self.report = report

    def write(self, rel: str, payload: str | bytes) -> None:
        if self.out_dir is None:
            return
        path = self.out_dir / rel
        path.parent.mkdir(parents=True, exist_ok=True)
        if isinstance(payload, bytes):
            path.write_bytes(payload)
        else:
            path.write_text(payload)
        self.report.outputs.append(str(rel))


def _csv(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(f"{v:.17g}" if isinstance(v, float) else str(v) for v in row) + "\n")
    return buf.getvalue()


def _write_joint(spec: OutputSpec, states, writer: _Writer, lattice) -> None:
    lo, hi = -lattice.half_width, lattice.half_width
    modulus = spec.observable == "joint_modulus"
    chosen = [s for s in states if spec.wants(s.time)]
    per_step = "{step}" in spec.path
    if spec.format == "csv" and not per_step:
        rows = []
        for s in chosen:
            jd = joint_site_distribution(s)
            for (i, j) in sorted(jd.grid):
                p = jd.grid[(i, j)]
                rows.append([s.time, i, j, float(np.sqrt(p)) if modulus else p])
        writer.write(spec.path, _csv(["step", "site1", "site2", "modulus" if modulus else "probability"], rows))
        return
    for s in chosen:
        jd = joint_site_distribution(s)
        rel = spec.path.format(step=s.time)
        if spec.format == "csv":
            writer.write(rel, jd.to_csv())
        elif spec.format == "ppm":
            writer.write(rel, jd.to_ppm(lo, hi, modulus=modulus))
        else:
            writer.write(rel, jd.to_svg(lo, hi, modulus=modulus))


def _run_two_photon(config: RunConfig, report: RunReport, writer: _Writer, verify: bool) -> None:
    lattice = config.resolved_lattice()
    init = _initial_state(config, lattice)
    states = [init]
    for _ in range(config.steps):
        t = single_photon_transfer(config.coin, config.schedule, states[-1].time, lattice)
        states.append(step(states[-1], t))

    checks = set(config.checks)
    norm0 = init.norm_sq()
    max_drift = max_defect = max_mixed = 0.0
    max_off = 0.0
    for s in states:
        norm = s.norm_sq()
        rec = {
            "step": s.time,
            "norm": norm,
            "terms": len(s),
            "clustering_defect": clustering_defect(s),
            "mixed_direction": mixed_direction_probability(s),
        }
        max_drift = max(max_drift, abs(norm - norm0))
        max_defect = max(max_defect, rec["clustering_defect"])
        max_mixed = max(max_mixed, rec["mixed_direction"])
        if s.time <= 3:
            max_off = max(max_off, rec["clustering_defect"])
        if s.time >= 2 and "branch_split" in checks:
            rec["branch_weights"] = branch_weights(s).as_dict()
        if lattice.polarized and "bell_fidelity" in checks and s.time >= 2:
            for label, sites in (("ballistic", [s.time]), ("oscillating", [-1, 0, 1])):
                try:
                    rec[f"fidelity_{label}"] = polarization_bell_fidelity(s, sites)
                except EmptyWindow:
                    rec[f"fidelity_{label}"] = None
        report.records.append(rec)

    report.summary = {
        "steps": config.steps,
        "half_width": lattice.half_width,
        "max_norm_drift": max_drift,
        "max_clustering_defect": max_defect,
        "max_mixed_direction": max_mixed,
    }
    if max_drift > NORM_TOL:
        report.breaches.append(f"norm drift {max_drift:.3e} exceeds {NORM_TOL:g}")
    if "clustering" in checks:
        if max_defect >= CLUSTER_TOL or max_mixed >= CLUSTER_TOL:
            report.breaches.append(
                f"clustering defect {max_defect:.3e} / mixed direction {max_mixed:.3e} "
                f"not below {CLUSTER_TOL:g}"
            )
    if "declusters" in checks:
        report.summary["off_diagonal_by_step3"] = max_off
        if max_off <= 0.1:
            report.breaches.append(f"off-diagonal mass by step 3 is {max_off:.3e}, expected > 0.1")
    if "branch_split" in checks:
        worst = 0.0
        for rec in report.records:
            bw = rec.get("branch_weights")
            if bw:
                worst = max(worst, abs(bw["oscillating"] - 0.5), abs(bw["ballistic"] - 0.5))
        report.summary["max_branch_weight_error"] = worst
        if worst > SPLIT_TOL:
            report.breaches.append(f"branch weights deviate from 1/2 by {worst:.3e}")
    if "bell_fidelity" in checks:
        fids = [
            rec[k]
            for rec in report.records
            for k in ("fidelity_ballistic", "fidelity_oscillating")
            if k in rec
        ]
        worst = max((1 - f if f is not None else 1.0 for f in fids), default=0.0)
        report.summary["max_bell_infidelity"] = worst
        if worst > BELL_TOL:
            report.breaches.append(f"Bell fidelity drops by {worst:.3e}")

    if verify:
        _verify(config, init, states, report)

    for spec in config.outputs:
        if spec.observable in ("joint", "joint_modulus"):
            _write_joint(spec, states, writer, lattice)
        elif spec.observable == "branch_weights":
            rows = []
            for s in states:
                if s.time >= 2 and spec.wants(s.time):
                    bw = branch_weights(s)
                    rows.append([s.time, bw.oscillating, bw.ballistic, bw.other, bw.front_site])
            writer.write(spec.path, _csv(["step", "oscillating", "ballistic", "other", "front_site"], rows))
        elif spec.observable == "directions":
            rows = []
            for s in states:
                if spec.wants(s.time):
                    d = _directions(s)
                    rows.append([s.time, d["LL"], d["RR"], d["mixed"]])
            writer.write(spec.path, _csv(["step", "LL", "RR", "mixed"], rows))
        elif spec.observable == "exit_table":
            table = vertex_exit_table(init, config.coin)
            rows = []
            for (i, j), p in table.items():
                side = ("L" if i <= 2 else "R") + ("L" if j <= 2 else "R")
                rows.append([f"{i}{j}", p, "LR" if side in ("LR", "RL") else side])
            writer.write(spec.path, _csv(["transition", "probability", "exit_direction"], rows))
        elif spec.observable == "state":
            snaps = [s.to_json_obj() for s in states if spec.wants(s.time)]
            writer.write(spec.path, json.dumps(snaps, indent=1, sort_keys=True) + "\n")
        elif spec.observable == "fidelity":
            rows = []
            for s in states:
                if s.time < 2 or not spec.wants(s.time):
                    continue
                row = [s.time]
                for sites in ([s.time], [-1, 0, 1]):
                    try:
                        row.append(polarization_bell_fidelity(s, sites))
                    except EmptyWindow:
                        row.append("")
                rows.append(row)
            writer.write(spec.path, _csv(["step", "ballistic", "oscillating"], rows))
        else:
            log.warning("observable %s does not apply to a two-photon run", spec.observable)


def _verify(config: RunConfig, init: TwoPhotonState, states, report: RunReport) -> None:
    lattice = init.lattice
    if lattice.half_width > ORACLE_MAX_HALF_WIDTH or lattice.n_modes > DENSE_MODE_BUDGET:
        raise CapacityError(
            f"--verify needs half_width <= {ORACLE_MAX_HALF_WIDTH} "
            f"(got {lattice.half_width}); reduce --steps"
        )
    worst = 0.0
    ref = init
    for k in range(1, len(states)):
        ref = brute_force_oracle(ref, config.coin, config.schedule, 1)
        worst = max(worst, ref.max_abs_diff(states[k]))
    report.summary["oracle_max_abs_diff"] = worst
    if worst > ORACLE_TOL:
        report.breaches.append(f"oracle disagreement {worst:.3e} exceeds {ORACLE_TOL:g}")


def _run_coherent(config: RunConfig, report: RunReport, writer: _Writer) -> None:
    lattice = config.resolved_lattice()
    fields = [CoherentField.from_records(lattice, config.initial)]
    for _ in range(config.steps):
        t = single_photon_transfer(config.coin, config.schedule, fields[-1].time, lattice)
        fields.append(coherent_step(fields[-1], t))
    n0 = fields[0].mean_photon_number()
    ports = lattice.ports_of(np.arange(lattice.n_modes))
    sites = lattice.sites_of(np.arange(lattice.n_modes))
    worst_refl = worst_bal = drift = 0.0
    for f in fields:
        left = np.abs(f.vector[ports >= 3])
        refl = float(left.max(initial=0.0))
        front = f.time
        at_front = f.vector[(sites == front) & (ports <= 2)]
        bal = float(abs(at_front[0] - at_front[1])) if f.time >= 1 and at_front.size else 0.0
        worst_refl = max(worst_refl, refl)
        worst_bal = max(worst_bal, bal)
        drift = max(drift, abs(f.mean_photon_number() - n0))
        report.records.append(
            {
                "step": f.time,
                "mean_photon_number": f.mean_photon_number(),
                "max_reflected_amplitude": refl,
                "front_balance_defect": bal,
                "balance_defect_R": balance_defect(f, Direction.R),
                "balance_defect_L": balance_defect(f, Direction.L),
            }
        )
    report.summary = {
        "steps": config.steps,
        "half_width": lattice.half_width,
        "max_photon_number_drift": drift,
        "max_reflected_amplitude": worst_refl,
        "max_front_balance_defect": worst_bal,
    }
    if drift > COHERENT_TOL:
        report.breaches.append(f"photon number drift {drift:.3e} exceeds {COHERENT_TOL:g}")
    if "no_reflection" in config.checks and worst_refl > COHERENT_TOL:
        report.breaches.append(f"reflected amplitude {worst_refl:.3e} for a balanced input")
    if "transmitted_balance" in config.checks and worst_bal > COHERENT_TOL:
        report.breaches.append(f"transmitted front unbalanced by {worst_bal:.3e}")
    for spec in config.outputs:
        if spec.observable == "coherent_amplitudes":
            writer.write(spec.path, field_csv(f for f in fields if spec.wants(f.time)))
        else:
            log.warning("observable %s does not apply to a coherent run", spec.observable)


def _run_census(config: RunConfig, report: RunReport, writer: _Writer) -> None:
    rows = []
    for named in config.initial:
        cls = classify_clustering(named, config.steps, config.coin)
        dec = first_step_decomposition(named, config.coin)
        rec = {
            "tag": named.label(),
            "classification": cls.value,
            "reflecting_weight": dec.reflecting_weight,
            "transmitting_weight": dec.transmitting_weight,
            "residual": dec.residual,
        }
        report.records.append(rec)
        rows.append([rec["tag"], rec["classification"], dec.reflecting_weight,
                     dec.transmitting_weight, dec.residual])
    report.summary = {
        "steps": config.steps,
        "clusters": [r["tag"] for r in report.records if r["classification"] == "Clusters"],
    }
    for spec in config.outputs:
        if spec.observable == "census":
            writer.write(
                spec.path,
                _csv(["tag", "classification", "reflecting_weight", "transmitting_weight",
                      "residual"], rows),
            )


def run(
    config: RunConfig,
    out_dir: str | Path | None = None,
    verify: bool | None = None,
    strict: bool = False,
) -> RunReport:
    """Execute a configured scenario; outputs go under ``out_dir`` when given.

    Raises ``BoundaryCrossing`` / ``CapacityError`` on sizing problems and,
    with ``strict``, :class:`InvariantBreach` when any check fails.
    """
    verify = config.verify if verify is None else verify
    report = RunReport(config.name, config.digest())
    out = None if out_dir is None else Path(out_dir)
    writer = _Writer(out, report)
    if config.initial_kind == "coherent":
        _run_coherent(config, report, writer)
    elif config.initial_kind == "census":
        _run_census(config, report, writer)
    else:
        _run_two_photon(config, report, writer, verify)
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        (out / "config.json").write_text(
            json.dumps(config.to_obj(), indent=2, sort_keys=True) + "\n"
        )
        report.outputs.append("config.json")
        report.outputs.append("report.json")
        (out / "report.json").write_text(report.to_json())
    if strict and report.breaches:
        raise InvariantBreach("; ".join(report.breaches))
    return report
