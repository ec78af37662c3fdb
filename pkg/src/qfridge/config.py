"""Scenario configuration: YAML documents with a strict key schema.

Example (the ``fig4a`` preset)::

    scenario: relax
    system: {delta: 0.1, g: 1.0, q: 0.0}
    chi: [0.0, 0.5, 0.8, 0.9, 0.95, 0.98, 0.99, 1.0]
    baths:
      cold: {theta: 0.05, w_res: 0.1, quality: 10}
      hot: {theta: 0.2, w_res: 0.1, quality: 10}
    init: state1
    grid: {start: 0.01, stop: 1000, num: 301, scale: log, include_zero: true}

``grid`` is the scenario's own axis: Gamma_down*t for ``relax``, q for
``steady`` and ``rates``, w for ``spectrum``, Omega for ``drive``. It takes
either ``values: [...]`` or ``start/stop/num/scale``.
"""
from __future__ import annotations

import copy
import json
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from .baths import Bath

SCENARIOS = ("rates", "spectrum", "steady", "relax", "drive")
GRID_AXIS = {"rates": "q", "spectrum": "w", "steady": "q", "relax": "gamma_t", "drive": "omega"}
INIT_STATES = ("state1", "state2", "state3", "state4")

DEFAULTS: dict[str, Any] = {
    "system": {"q": 0.0},
    "chi": [0.0],
    "init": "state1",
    "output": {"dir": None, "plot": False},
    "numerics": {
        "cycle_tol": 1e-4,
        "n_cycles_max": 200,
        "samples_per_cycle": 200,
        "max_refinements": 4,
    },
}

_SCHEMA: dict[str, Any] = {
    "scenario": None,
    "system": {"delta": None, "g": None, "q": None},
    "chi": None,
    "baths": {
        "cold": {"theta": None, "w_res": None, "quality": None},
        "hot": {"theta": None, "w_res": None, "quality": None},
    },
    "init": None,
    "grid": {"values": None, "start": None, "stop": None, "num": None, "scale": None,
             "include_zero": None},
    "output": {"dir": None, "plot": None},
    "numerics": {"cycle_tol": None, "n_cycles_max": None, "samples_per_cycle": None,
                 "max_refinements": None},
}


class ConfigError(ValueError):
    """Malformed document or a value outside its domain."""


@dataclass(frozen=True)
class Numerics:
    cycle_tol: float = 1e-4
    n_cycles_max: int = 200
    samples_per_cycle: int = 200
    max_refinements: int = 4


@dataclass(frozen=True)
class ScenarioConfig:
    scenario: str
    delta: float
    g: float
    q: float
    chi: tuple
    cold: Bath
    hot: Bath
    init: tuple  # four populations
    init_label: str
    grid: tuple
    output_dir: str | None = None
    plot: bool = False
    numerics: Numerics = field(default_factory=Numerics)

    @property
    def baths(self) -> tuple[Bath, Bath]:
        return (self.cold, self.hot)

    @property
    def grid_axis(self) -> str:
        return GRID_AXIS[self.scenario]

    def to_dict(self) -> dict:
        d = asdict(self)
        d["grid_axis"] = self.grid_axis
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))


# ---------------------------------------------------------------------------


def list_presets() -> list[str]:
    root = resources.files("qfridge") / "presets"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".yaml"))


def preset_text(name: str) -> str:
    path = resources.files("qfridge") / "presets" / f"{name}.yaml"
    if not path.is_file():
        raise ConfigError(f"unknown preset {name!r}; available: {', '.join(list_presets())}")
    return path.read_text()


def load_document(text: str, source: str = "<config>") -> dict:
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" line {mark.line + 1}" if mark is not None else ""
        raise ConfigError(f"{source}:{where} parse error: {exc}") from None
    if doc is None:
        return {}
    if not isinstance(doc, dict):
        raise ConfigError(f"{source}: top level must be a mapping")
    return doc


def _check_keys(doc, schema, path=""):
    for key, value in doc.items():
        dotted = f"{path}{key}"
        if key not in schema:
            raise ConfigError(f"unknown key {dotted!r}")
        sub = schema[key]
        if isinstance(sub, dict):
            if not isinstance(value, dict):
                raise ConfigError(f"key {dotted!r} must be a mapping")
            _check_keys(value, sub, dotted + ".")


def merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for key, value in over.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


def apply_override(doc: dict, item: str) -> dict:
    """Apply ``dotted.key=value``; the value is parsed as YAML."""
    if "=" not in item:
        raise ConfigError(f"override {item!r} must look like key=value")
    key, raw = item.split("=", 1)
    parts = key.strip().split(".")
    value = load_document(f"v: {raw}", f"override {key}")["v"]
    patch: dict = {}
    node = patch
    for p in parts[:-1]:
        node = node.setdefault(p, {})
    node[parts[-1]] = value
    _check_keys(patch, _SCHEMA)
    return merge(doc, patch)


def _number(doc, dotted, cast=float):
    node = doc
    for p in dotted.split("."):
        if not isinstance(node, dict) or p not in node or node[p] is None:
            raise ConfigError(f"missing required key {dotted!r}")
        node = node[p]
    if isinstance(node, bool):
        raise ConfigError(f"key {dotted!r} must be a number, got {node!r}")
    try:
        return cast(node)
    except (TypeError, ValueError):
        raise ConfigError(f"key {dotted!r} must be a number, got {node!r}") from None


def _bounded(name, value, lo=None, hi=None, lo_open=False):
    if lo is not None and (value < lo or (lo_open and value == lo)):
        op = ">" if lo_open else ">="
        raise ConfigError(f"key {name!r} = {value} violates bound {op} {lo}")
    if hi is not None and value > hi:
        raise ConfigError(f"key {name!r} = {value} violates bound <= {hi}")
    return value


def _grid(doc, scenario):
    spec = doc.get("grid")
    if spec is None:
        if scenario in ("rates", "steady"):
            return (float(doc["system"].get("q", 0.0)),)
        raise ConfigError("missing required key 'grid'")
    if "values" in spec and spec["values"] is not None:
        values = spec["values"]
        if not isinstance(values, list) or not values:
            raise ConfigError("key 'grid.values' must be a nonempty list")
        try:
            vals = [float(v) for v in values]
        except (TypeError, ValueError):
            raise ConfigError("key 'grid.values' must hold numbers") from None
    else:
        start = _number(doc, "grid.start")
        stop = _number(doc, "grid.stop")
        num = _number(doc, "grid.num", int)
        if num < 1:
            raise ConfigError(f"key 'grid.num' = {num} violates bound >= 1")
        scale = spec.get("scale", "linear")
        if scale == "log":
            if start <= 0 or stop <= 0:
                raise ConfigError("log grid needs positive 'grid.start' and 'grid.stop'")
            vals = list(np.geomspace(start, stop, num))
        elif scale == "linear":
            vals = list(np.linspace(start, stop, num))
        else:
            raise ConfigError(f"key 'grid.scale' must be 'linear' or 'log', got {scale!r}")
        if spec.get("include_zero"):
            vals = [0.0] + vals
        vals = [float(v) for v in vals]
    axis = GRID_AXIS[scenario]
    for v in vals:
        if axis == "q":
            _bounded("grid", v, 0.0, 0.5)
        elif axis == "omega":
            _bounded("grid", v, 0.0, lo_open=True)
        elif axis == "gamma_t":
            _bounded("grid", v, 0.0)
    return tuple(vals)


def _init(value):
    if isinstance(value, str):
        if value not in INIT_STATES:
            raise ConfigError(f"key 'init' must be one of {INIT_STATES} or a populations list")
        pops = [0.0] * 4
        pops[int(value[-1]) - 1] = 1.0
        return tuple(pops), value
    if isinstance(value, dict) and set(value) == {"populations"}:
        value = value["populations"]
    if isinstance(value, list) and len(value) == 4:
        try:
            pops = [float(v) for v in value]
        except (TypeError, ValueError):
            raise ConfigError("key 'init' populations must be numbers") from None
        if min(pops) < 0 or abs(sum(pops) - 1.0) > 1e-9:
            raise ConfigError("key 'init' populations must be nonnegative and sum to 1")
        return tuple(pops), "custom"
    raise ConfigError("key 'init' must be a state name or a list of four populations")


def build_config(doc: dict) -> ScenarioConfig:
    """Validate a merged document (defaults already applied) into a config."""
    _check_keys(doc, _SCHEMA)
    scenario = doc.get("scenario")
    if scenario not in SCENARIOS:
        raise ConfigError(f"key 'scenario' must be one of {SCENARIOS}, got {scenario!r}")
    delta = _bounded("system.delta", _number(doc, "system.delta"), 0.0, lo_open=True)
    g = _bounded("system.g", _number(doc, "system.g"), 0.0)
    q = _bounded("system.q", _number(doc, "system.q"), 0.0, 0.5)

    chis = doc.get("chi")
    if not isinstance(chis, list):
        chis = [chis]
    if not chis:
        raise ConfigError("key 'chi' must be a nonempty list")
    chi_vals = []
    for c in chis:
        if isinstance(c, bool) or not isinstance(c, (int, float)):
            raise ConfigError(f"key 'chi' must hold numbers, got {c!r}")
        chi_vals.append(_bounded("chi", float(c), -1.0, 1.0))

    baths = {}
    for label in ("cold", "hot"):
        vals = {}
        for name in ("theta", "w_res", "quality"):
            vals[name] = _bounded(f"baths.{label}.{name}",
                                  _number(doc, f"baths.{label}.{name}"), 0.0, lo_open=True)
        baths[label] = Bath(label=label, **vals)

    pops, init_label = _init(doc.get("init"))
    numerics = Numerics(
        cycle_tol=_bounded("numerics.cycle_tol", _number(doc, "numerics.cycle_tol"), 0.0,
                           lo_open=True),
        n_cycles_max=_bounded("numerics.n_cycles_max", _number(doc, "numerics.n_cycles_max", int), 1),
        samples_per_cycle=_bounded("numerics.samples_per_cycle",
                                   _number(doc, "numerics.samples_per_cycle", int), 2),
        max_refinements=_bounded("numerics.max_refinements",
                                 _number(doc, "numerics.max_refinements", int), 0),
    )
    out = doc.get("output", {})
    return ScenarioConfig(
        scenario=scenario, delta=delta, g=g, q=q, chi=tuple(chi_vals),
        cold=baths["cold"], hot=baths["hot"], init=pops, init_label=init_label,
        grid=_grid(doc, scenario), output_dir=out.get("dir"), plot=bool(out.get("plot")),
        numerics=numerics,
    )


def parse_config(text: str, overrides=(), source: str = "<config>") -> ScenarioConfig:
    """Parse a YAML document, apply defaults and ``key=value`` overrides, validate."""
    doc = load_document(text, source)
    _check_keys(doc, _SCHEMA)
    doc = merge(DEFAULTS, doc)
    for item in overrides:
        doc = apply_override(doc, item)
    return build_config(doc)


def load_config(path: str | Path, overrides=()) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text, overrides, source=str(path))


def load_preset(name: str, overrides=()) -> ScenarioConfig:
    return parse_config(preset_text(name), overrides, source=f"preset {name}")
