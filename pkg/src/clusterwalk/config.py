"""Run configuration: TOML schema, validation and canonical hashing.

Example::

    steps = 12
    statistics = "boson"

    [lattice]
    half_width = "auto"
    polarized = false

    [initial]
    kind = "modes"              # or "named", "coherent", "census"
    modes = ["0:1:-", "0:2:-"]

    [[schedule]]
    step = 4
    edge = 4
    line = "upper"
    phase = 1.5707963267948966

    [[outputs]]
    observable = "joint"
    format = "csv"
    path = "joint_{step}.csv"
    steps = [3, 6, 9, 12]
"""

from __future__ import annotations

import hashlib
import json
import re
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .coin import CoinUnitary, PhaseSchedule, grover_coin, is_unitary
from .fock import Statistics
from .lattice import LatticeConfig, Mode
from .states import parse_named

__all__ = ["ConfigError", "OutputSpec", "RunConfig", "load_config", "parse_config"]

OBSERVABLES = {
    "joint": {"csv", "ppm", "svg"},
    "joint_modulus": {"csv", "ppm", "svg"},
    "branch_weights": {"csv"},
    "directions": {"csv"},
    "exit_table": {"csv"},
    "state": {"json"},
    "coherent_amplitudes": {"csv"},
    "fidelity": {"csv"},
    "census": {"csv"},
}
INITIAL_KINDS = ("modes", "named", "coherent", "census")
CHECKS = (
    "clustering",
    "branch_split",
    "declusters",
    "bell_fidelity",
    "no_reflection",
    "transmitted_balance",
)


class ConfigError(ValueError):
    """Schema violation; ``path`` is the offending key, ``line`` its source line if known."""

    def __init__(self, message: str, path: str = "", line: int | None = None):
        self.path = path
        self.line = line
        where = path or "<root>"
        if line is not None:
            where += f" (line {line})"
        super().__init__(f"{where}: {message}")


@dataclass(frozen=True)
class OutputSpec:
    observable: str
    format: str
    path: str
    steps: tuple[int, ...] | None = None  # None: every step where meaningful

    def wants(self, step: int) -> bool:
        return self.steps is None or step in self.steps


@dataclass(frozen=True)
class RunConfig:
    steps: int
    statistics: Statistics
    initial_kind: str
    initial: Any
    lattice: LatticeConfig | None = None  # None: auto-size
    polarized: bool = False
    coin: CoinUnitary = field(default_factory=grover_coin)
    schedule: PhaseSchedule = field(default_factory=PhaseSchedule)
    outputs: tuple[OutputSpec, ...] = ()
    checks: tuple[str, ...] = ()
    name: str = "custom"
    verify: bool = False

    def resolved_lattice(self) -> LatticeConfig:
        if self.lattice is not None:
            return self.lattice
        origin = 0
        if self.initial_kind == "named":
            origin = self.initial.site
        elif self.initial_kind == "modes":
            origin = max(abs(m.site) for m in self.initial)
        elif self.initial_kind == "coherent":
            origin = max((abs(int(r["site"])) for r in self.initial), default=0)
        return LatticeConfig(max(1, origin + self.steps + 1), self.polarized)

    def to_obj(self) -> dict:
        """Canonical plain-data form (round-trips through :func:`parse_config`)."""
        if self.initial_kind == "modes":
            initial = {"kind": "modes", "modes": [m.encode() for m in self.initial]}
        elif self.initial_kind == "named":
            initial = {"kind": "named", "tag": self.initial.label()}
        elif self.initial_kind == "census":
            initial = {"kind": "census", "tags": [n.label() for n in self.initial]}
        else:
            initial = {"kind": "coherent", "field": [dict(r) for r in self.initial]}
        if not self.coin.is_grover():
            z = self.coin.entries
            coin = {
                "kind": "custom",
                "matrix": [[[float(v.real), float(v.imag)] for v in row] for row in z],
            }
        else:
            coin = {"kind": "grover"}
        obj: dict[str, Any] = {
            "name": self.name,
            "steps": self.steps,
            "statistics": self.statistics.value,
            "lattice": {
                "half_width": "auto" if self.lattice is None else self.lattice.half_width,
                "polarized": self.polarized,
            },
            "coin": coin,
            "initial": initial,
            "schedule": self.schedule.to_records(),
            "outputs": [
                {
                    "observable": o.observable,
                    "format": o.format,
                    "path": o.path,
                    **({} if o.steps is None else {"steps": list(o.steps)}),
                }
                for o in self.outputs
            ],
            "checks": list(self.checks),
        }
        for rec in obj["schedule"]:
            if rec["step"] is None:
                del rec["step"]
        return obj

    def digest(self) -> str:
        blob = json.dumps(self.to_obj(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def _line_of(text: str | None, path: str) -> int | None:
    """Best-effort source line for a dotted key path."""
    if not text:
        return None
    parts = [p for p in re.split(r"[.\[\]]", path) if p and not p.isdigit()]
    if not parts:
        return None
    lines = text.splitlines()
    start = 0
    if len(parts) > 1:
        table = re.compile(r"^\s*\[\[?\s*" + re.escape(".".join(parts[:-1])) + r"\s*\]\]?\s*$")
        for i, ln in enumerate(lines):
            if table.match(ln):
                start = i
                break
    key = re.compile(r"^\s*" + re.escape(parts[-1]) + r"\s*=")
    for i in range(start, len(lines)):
        if key.match(lines[i]):
            return i + 1
    header = re.compile(r"^\s*\[\[?\s*" + re.escape(".".join(parts)) + r"\s*\]\]?\s*$")
    for i, ln in enumerate(lines):
        if header.match(ln):
            return i + 1
    return None


class _Validator:
    def __init__(self, text: str | None):
        self.text = text

    def fail(self, path: str, message: str):
        raise ConfigError(message, path, _line_of(self.text, path))

    def get(self, obj: dict, key: str, path: str, types, default=..., required=False):
        full = f"{path}.{key}" if path else key
        if key not in obj:
            if required or default is ...:
                self.fail(full, "missing required key")
            return default
        val = obj[key]
        if not isinstance(val, types) or (isinstance(val, bool) and bool not in _as_tuple(types)):
            names = "/".join(t.__name__ for t in _as_tuple(types))
            self.fail(full, f"expected {names}, got {type(val).__name__}")
        return val

    def unknown(self, obj: dict, allowed: set[str], path: str) -> None:
        extra = sorted(set(obj) - allowed)
        if extra:
            full = f"{path}.{extra[0]}" if path else extra[0]
            self.fail(full, f"unknown key (allowed: {', '.join(sorted(allowed))})")


def _as_tuple(t):
    return t if isinstance(t, tuple) else (t,)


def parse_config(obj: dict, text: str | None = None) -> RunConfig:
    """Validate a decoded config mapping."""
    v = _Validator(text)
    v.unknown(
        obj,
        {"name", "steps", "statistics", "lattice", "coin", "initial", "schedule", "outputs",
         "checks", "verify"},
        "",
    )
    steps = v.get(obj, "steps", "", int, required=True)
    if steps < 0:
        v.fail("steps", "must be >= 0")
    stat_name = v.get(obj, "statistics", "", str, default="boson")
    try:
        statistics = Statistics(stat_name)
    except ValueError:
        v.fail("statistics", f"must be 'boson' or 'distinguishable', got {stat_name!r}")

    lat_obj = v.get(obj, "lattice", "", dict, default={})
    v.unknown(lat_obj, {"half_width", "polarized"}, "lattice")
    hw = v.get(lat_obj, "half_width", "lattice", (int, str), default="auto")
    polarized = v.get(lat_obj, "polarized", "lattice", bool, default=False)
    if isinstance(hw, str):
        if hw != "auto":
            v.fail("lattice.half_width", f"must be an integer or 'auto', got {hw!r}")
        lattice = None
    else:
        if hw < 1:
            v.fail("lattice.half_width", "must be >= 1")
        lattice = LatticeConfig(hw, polarized)

    coin_obj = v.get(obj, "coin", "", dict, default={"kind": "grover"})
    v.unknown(coin_obj, {"kind", "matrix"}, "coin")
    kind = v.get(coin_obj, "kind", "coin", str, default="grover")
    if kind == "grover":
        coin = grover_coin()
    elif kind == "custom":
        rows = v.get(coin_obj, "matrix", "coin", list, required=True)
        try:
            m = np.array([[complex(*e) if isinstance(e, list) else complex(e) for e in r] for r in rows])
        except (TypeError, ValueError):
            v.fail("coin.matrix", "entries must be numbers or [re, im] pairs")
        if m.shape != (4, 4):
            v.fail("coin.matrix", f"must be 4x4, got shape {m.shape}")
        if not is_unitary(m):
            v.fail("coin.matrix", "matrix is not unitary within 1e-12")
        coin = CoinUnitary(m)
    else:
        v.fail("coin.kind", f"must be 'grover' or 'custom', got {kind!r}")

    init = v.get(obj, "initial", "", dict, required=True)
    ikind = v.get(init, "kind", "initial", str, required=True)
    if ikind not in INITIAL_KINDS:
        v.fail("initial.kind", f"must be one of {', '.join(INITIAL_KINDS)}")
    if ikind == "modes":
        v.unknown(init, {"kind", "modes"}, "initial")
        texts = v.get(init, "modes", "initial", list, required=True)
        if len(texts) != 2:
            v.fail("initial.modes", "needs exactly two modes")
        initial = []
        for k, s in enumerate(texts):
            try:
                m = Mode.decode(str(s))
            except ValueError as exc:
                v.fail(f"initial.modes[{k}]", str(exc))
            if (m.polarization is not None) != polarized:
                v.fail(f"initial.modes[{k}]", "polarization does not match lattice.polarized")
            initial.append(m)
        initial = tuple(initial)
        if statistics is Statistics.DISTINGUISHABLE and initial[0] == initial[1]:
            v.fail("initial.modes", "distinguishable photons cannot share one mode")
    elif ikind == "named":
        v.unknown(init, {"kind", "tag"}, "initial")
        try:
            initial = parse_named(v.get(init, "tag", "initial", str, required=True))
        except ValueError as exc:
            v.fail("initial.tag", str(exc))
        if initial.tag.polarized and not polarized:
            v.fail("lattice.polarized", f"{initial.tag.value} needs polarized = true")
        if statistics is not Statistics.BOSON:
            v.fail("statistics", "named states are boson states")
    elif ikind == "census":
        v.unknown(init, {"kind", "tags"}, "initial")
        initial = []
        for k, s in enumerate(v.get(init, "tags", "initial", list, required=True)):
            try:
                initial.append(parse_named(str(s)))
            except ValueError as exc:
                v.fail(f"initial.tags[{k}]", str(exc))
        initial = tuple(initial)
        if steps < 2:
            v.fail("steps", "census classification needs steps >= 2")
    else:
        v.unknown(init, {"kind", "field"}, "initial")
        recs = v.get(init, "field", "initial", list, required=True)
        initial = []
        for k, rec in enumerate(recs):
            path = f"initial.field[{k}]"
            if not isinstance(rec, dict):
                v.fail(path, "expected a table")
            v.unknown(rec, {"site", "upper_amp", "lower_amp", "direction"}, path)
            v.get(rec, "site", path, int, required=True)
            for key in ("upper_amp", "lower_amp"):
                amp = v.get(rec, key, path, list, default=[0.0, 0.0])
                if len(amp) != 2 or not all(isinstance(x, (int, float)) for x in amp):
                    v.fail(f"{path}.{key}", "expected [re, im]")
            if str(rec.get("direction", "R")).upper() not in ("R", "L"):
                v.fail(f"{path}.direction", "must be 'R' or 'L'")
            initial.append(dict(rec))
        initial = tuple(initial)
        if polarized:
            v.fail("lattice.polarized", "coherent fields are unpolarized")

    sched = v.get(obj, "schedule", "", list, default=[])
    for k, rec in enumerate(sched):
        path = f"schedule[{k}]"
        if not isinstance(rec, dict):
            v.fail(path, "expected a table")
        v.unknown(rec, {"step", "edge", "line", "phase"}, path)
        v.get(rec, "edge", path, int, required=True)
        v.get(rec, "phase", path, (int, float), required=True)
        if v.get(rec, "line", path, str, required=True) not in ("upper", "lower"):
            v.fail(f"{path}.line", "must be 'upper' or 'lower'")
        if "step" in rec:
            if v.get(rec, "step", path, int) < 0:
                v.fail(f"{path}.step", "must be >= 0")
    try:
        schedule = PhaseSchedule.from_records(sched)
    except ValueError as exc:
        v.fail("schedule", str(exc))

    outputs = []
    for k, rec in enumerate(v.get(obj, "outputs", "", list, default=[])):
        path = f"outputs[{k}]"
        if not isinstance(rec, dict):
            v.fail(path, "expected a table")
        v.unknown(rec, {"observable", "format", "path", "steps"}, path)
        name = v.get(rec, "observable", path, str, required=True)
        if name not in OBSERVABLES:
            v.fail(f"{path}.observable", f"unknown observable (have {', '.join(sorted(OBSERVABLES))})")
        fmt = v.get(rec, "format", path, str, required=True)
        if fmt not in OBSERVABLES[name]:
            v.fail(f"{path}.format", f"{name} supports {', '.join(sorted(OBSERVABLES[name]))}")
        target = v.get(rec, "path", path, str, required=True)
        which = v.get(rec, "steps", path, list, default=None)
        if which is not None and not all(isinstance(x, int) for x in which):
            v.fail(f"{path}.steps", "expected a list of integers")
        outputs.append(OutputSpec(name, fmt, target, None if which is None else tuple(which)))

    checks = v.get(obj, "checks", "", list, default=[])
    for k, c in enumerate(checks):
        if c not in CHECKS:
            v.fail(f"checks[{k}]", f"unknown check (have {', '.join(CHECKS)})")

    if lattice is not None and ikind != "census":
        need = RunConfig(steps, statistics, ikind, initial, None, polarized).resolved_lattice()
        if lattice.half_width < need.half_width:
            v.fail(
                "lattice.half_width",
                f"{lattice.half_width} too small for {steps} steps (need >= {need.half_width} "
                "or 'auto')",
            )

    return RunConfig(
        steps=steps,
        statistics=statistics,
        initial_kind=ikind,
        initial=initial,
        lattice=lattice,
        polarized=polarized,
        coin=coin,
        schedule=schedule,
        outputs=tuple(outputs),
        checks=tuple(checks),
        name=v.get(obj, "name", "", str, default="custom"),
        verify=v.get(obj, "verify", "", bool, default=False),
    )


def load_config(path: str | Path) -> RunConfig:
    text = Path(path).read_text()
    try:
        obj = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"TOML syntax error: {exc}") from exc
    return parse_config(obj, text)

