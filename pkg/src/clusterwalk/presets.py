"""Preset experiments, one per reproduced result."""

from __future__ import annotations

import math
from typing import Callable

from .config import RunConfig, parse_config

__all__ = ["PRESETS", "UnknownPreset", "list_presets", "preset"]

PSI0 = {"kind": "modes", "modes": ["0:1:-", "0:2:-"]}
HEATMAP_STEPS = [3, 6, 9, 12]


class UnknownPreset(KeyError):
    def __str__(self) -> str:
        return f"unknown preset {self.args[0]!r}; try one of: {', '.join(list_presets())}"


def _table1(steps):
    return {
        "steps": 1 if steps is None else steps,
        "initial": PSI0,
        "outputs": [
            {"observable": "exit_table", "format": "csv", "path": "table1.csv"},
            {"observable": "directions", "format": "csv", "path": "directions.csv"},
        ],
        "checks": ["clustering"],
    }


def _split(steps):
    return {
        "steps": 20 if steps is None else steps,
        "initial": PSI0,
        "outputs": [
            {"observable": "branch_weights", "format": "csv", "path": "branch_weights.csv"},
            {"observable": "joint", "format": "csv", "path": "joint.csv"},
        ],
        "checks": ["clustering", "branch_split"],
    }


def _heatmaps(statistics, checks):
    def make(steps):
        n = 12 if steps is None else steps
        at = [s for s in HEATMAP_STEPS if s <= n] or [n]
        return {
            "steps": n,
            "statistics": statistics,
            "initial": PSI0,
            "outputs": [
                {"observable": "joint", "format": "csv", "path": "joint.csv"},
                {"observable": "joint", "format": "ppm", "path": "joint_{step}.ppm", "steps": at},
                {"observable": "joint_modulus", "format": "csv", "path": "joint_modulus.csv"},
            ],
            "checks": checks,
        }

    return make


def _entangled(steps):
    return {
        "steps": 10 if steps is None else steps,
        "lattice": {"half_width": "auto", "polarized": True},
        "initial": {"kind": "named", "tag": "A+:1,2"},
        "outputs": [
            {"observable": "fidelity", "format": "csv", "path": "fidelity.csv"},
            {"observable": "branch_weights", "format": "csv", "path": "branch_weights.csv"},
        ],
        "checks": ["clustering", "branch_split", "bell_fidelity"],
    }


def _coherent(upper, lower, default_steps, checks):
    def make(steps):
        return {
            "steps": default_steps if steps is None else steps,
            "initial": {
                "kind": "coherent",
                "field": [{"site": 0, "upper_amp": upper, "lower_amp": lower}],
            },
            "outputs": [
                {"observable": "coherent_amplitudes", "format": "csv", "path": "amplitudes.csv"}
            ],
            "checks": checks,
        }

    return make


SWITCH_STEP = 4


def _phase_switch(steps):
    # the ballistic cluster crosses the line between vertices k and k+1 during step k
    k = SWITCH_STEP
    return {
        "steps": 12 if steps is None else steps,
        "initial": PSI0,
        "schedule": [
            {"step": k, "edge": k, "line": "upper", "phase": math.pi / 2},
            {"step": k, "edge": k, "line": "lower", "phase": -math.pi / 2},
        ],
        "outputs": [
            {"observable": "joint", "format": "csv", "path": "joint.csv"},
            {"observable": "directions", "format": "csv", "path": "directions.csv"},
        ],
        "checks": ["clustering"],
    }


CENSUS_TAGS = [
    "A+:1,2", "A-:1,2", "B+:1,2", "B-:1,2", "C+:1,2", "C-:1,2",
    "A+:1,1", "A+:2,2", "B+:1,1", "C+:1,1", "C-:1,1", "C+:2,2", "C-:2,2",
]


def _census(steps):
    return {
        "steps": 6 if steps is None else steps,
        "lattice": {"half_width": "auto", "polarized": True},
        "initial": {"kind": "census", "tags": CENSUS_TAGS},
        "outputs": [{"observable": "census", "format": "csv", "path": "census.csv"}],
    }


PRESETS: dict[str, Callable[[int | None], dict]] = {
    "table1": _table1,
    "split": _split,
    "fig6": _heatmaps("boson", ["clustering"]),
    "fig7": _heatmaps("distinguishable", ["declusters"]),
    "entangled": _entangled,
    "coherent_balanced": _coherent([0.5, 0.0], [0.5, 0.0], 20, ["no_reflection"]),
    "coherent_unbalanced": _coherent([0.3, 0.0], [0.1, 0.0], 6, ["transmitted_balance"]),
    "phase_switch": _phase_switch,
    "appendixB_census": _census,
}


def list_presets() -> list[str]:
    return list(PRESETS)


def preset(name: str, steps: int | None = None) -> RunConfig:
    try:
        make = PRESETS[name]
    except KeyError:
        raise UnknownPreset(name) from None
    obj = make(steps)
    obj["name"] = name
    return parse_config(obj)
