"""Scenario files: TOML with a fixed schema, unknown keys rejected.

Layout::

    kind = "phase" | "static" | "dynamic"
    seed = 0                       # optional, default 0

    [models]                       # slave / master names from the catalog
    [phase] | [static] | [dynamic] # controller table matching ``kind``
    [output]                       # dir, trace_every, plots
    [thresholds]                   # pass/fail limits written to report.json

See ``scenarios/README.md`` for every key.
"""
from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import tomli

from ..errors import ConfigError
from ..models import CATALOG

KINDS = ("phase", "static", "dynamic")

# key -> (type tag, default); a default of ... marks a required key
SCHEMA = {
    "phase": {
        "epsilon": ("float", ...),
        "delta": ("float", ...),
        "x0": ("vector", ...),
        "n_periods": ("int", 51),
        "cycle_seed": ("vector", None),
        "period_guess": ("float", ...),
        "master_anchor": ("vector", None),
        "control_run": ("bool", False),
        "rtol": ("float", 1e-9),
        "atol": ("float", 1e-11),
    },
    "static": {
        "gains": ("vector", ...),
        "mode": ("str", "raw"),
        "x0": ("vector", ...),
        "t_end": ("float", ...),
        "h": ("float", 1e-3),
        "box_lo": ("vector", None),
        "box_hi": ("vector", None),
        "n_samples": ("int", 10_000),
        "random_starts": ("int", 0),
        "certify": ("bool", True),
    },
    "dynamic": {
        "epsilon": ("float", ...),
        "B": ("matrix", ...),
        "C": ("matrix", ...),
        "xi0": ("vector", ...),
        "t_end": ("float", ...),
        "h": ("float", None),
        "u0": ("vector", None),
        "perturbation": ("table", None),
    },
    "models": {
        "slave": ("str", ...),
        "master": ("str", ...),
        "master_x0": ("vector", None),
    },
    "output": {
        "dir": ("str", "out"),
        "trace_every": ("int", 1),
        "plots": ("bool", True),
    },
}

THRESHOLDS = {
    "phase": {"lag_ratio_max", "final_lag_fraction_max", "prop_residual_max",
              "control_lag_change_max"},
    "static": {"switch_ratio_min", "hit_within_bound", "post_hit_error_max",
               "bound_violations_max"},
    "dynamic": {"tail_error_max", "chatter_switches_max"},
}

PERTURBATION_KEYS = {"amplitude", "frequency", "direction"}


@dataclass
class Scenario:
    kind: str
    seed: int
    models: dict
    params: dict
    output: dict
    thresholds: dict
    source: Path = field(default=None)
    raw: dict = field(default_factory=dict, repr=False)


def _coerce(tag: str, value, where: str):
    try:
        if tag == "float":
            if isinstance(value, bool):
                raise TypeError
            out = float(value)
            if not math.isfinite(out):
                raise ValueError
            return out
        if tag == "int":
            if isinstance(value, bool) or int(value) != value:
                raise TypeError
            return int(value)
        if tag == "bool":
            if not isinstance(value, bool):
                raise TypeError
            return value
        if tag == "str":
            if not isinstance(value, str):
                raise TypeError
            return value
        if tag == "vector":
            arr = np.array(value, dtype=float)
            if arr.ndim != 1 or not np.all(np.isfinite(arr)):
                raise ValueError
            return arr
        if tag == "matrix":
            arr = np.array(value, dtype=float)
            if arr.ndim == 1:
                arr = np.diag(arr)
            if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or not np.all(np.isfinite(arr)):
                raise ValueError
            return arr
        if tag == "table":
            if not isinstance(value, dict):
                raise TypeError
            return dict(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{where}: expected {tag}, got {value!r}") from None
    raise AssertionError(tag)


def _table(data: dict, name: str, required: bool = True) -> dict:
    if name not in data:
        if required:
            raise ConfigError(f"missing table [{name}]")
        data = {name: {}}
    table = data[name]
    if not isinstance(table, dict):
        raise ConfigError(f"[{name}] must be a table")
    schema = SCHEMA[name]
    unknown = set(table) - set(schema)
    if unknown:
        raise ConfigError(f"unknown key(s) in [{name}]: {sorted(unknown)}")
    out = {}
    for key, (tag, default) in schema.items():
        if key in table:
            out[key] = _coerce(tag, table[key], f"[{name}].{key}")
        elif default is ...:
            raise ConfigError(f"missing key [{name}].{key}")
        else:
            out[key] = copy.deepcopy(default)
    return out


def parse_scenario(data: dict, source=None) -> Scenario:
    """Validate an already-decoded TOML document."""
    allowed = {"kind", "seed", "models", "output", "thresholds", *KINDS}
    unknown = set(data) - allowed
    if unknown:
        raise ConfigError(f"unknown top-level key(s): {sorted(unknown)}")
    kind = data.get("kind")
    if kind not in KINDS:
        raise ConfigError(f"kind must be one of {KINDS}, got {kind!r}")
    for other in KINDS:
        if other != kind and other in data:
            raise ConfigError(f"table [{other}] given for a {kind!r} scenario")
    seed = _coerce("int", data.get("seed", 0), "seed")
    models = _table(data, "models")
    for role in ("slave", "master"):
        if models[role] not in CATALOG:
            raise ConfigError(f"unknown {role} model {models[role]!r}")
    params = _table(data, kind)
    output = _table(data, "output", required=False)
    thresholds = data.get("thresholds", {})
    if not isinstance(thresholds, dict):
        raise ConfigError("[thresholds] must be a table")
    unknown = set(thresholds) - THRESHOLDS[kind]
    if unknown:
        raise ConfigError(f"unknown threshold(s) for {kind!r}: {sorted(unknown)}")
    thresholds = {k: (v if isinstance(v, bool) else _coerce("float", v, f"[thresholds].{k}"))
                  for k, v in thresholds.items()}
    _validate(kind, params, output)
    return Scenario(kind, seed, models, params, output, thresholds,
                    Path(source) if source else None, copy.deepcopy(data))


def _validate(kind: str, p: dict, output: dict) -> None:
    if output["trace_every"] < 1:
        raise ConfigError("[output].trace_every must be >= 1")
    if kind == "phase":
        if p["epsilon"] < 0 or p["delta"] < 0:
            raise ConfigError("epsilon and delta must be non-negative")
        if p["n_periods"] < 2:
            raise ConfigError("n_periods must be at least 2")
        if p["period_guess"] <= 0:
            raise ConfigError("period_guess must be positive")
    elif kind == "static":
        if np.any(p["gains"] >= 0):
            raise ConfigError("static gains must all be negative")
        if p["mode"] not in ("raw", "filippov"):
            raise ConfigError("mode must be 'raw' or 'filippov'")
        if p["h"] <= 0 or p["t_end"] <= 0:
            raise ConfigError("h and t_end must be positive")
        if (p["box_lo"] is None) != (p["box_hi"] is None):
            raise ConfigError("give both box_lo and box_hi or neither")
        if p["random_starts"] and p["box_lo"] is None:
            raise ConfigError("random_starts needs box_lo/box_hi")
        if p["gains"].size != p["x0"].size:
            raise ConfigError("gains and x0 differ in dimension")
    else:
        n = p["xi0"].size
        if p["B"].shape != (n, n) or p["C"].shape != (n, n):
            raise ConfigError("B and C must be n x n with n = len(xi0)")
        if p["epsilon"] <= 0 or p["t_end"] <= 0:
            raise ConfigError("epsilon and t_end must be positive")
        pert = p["perturbation"]
        if pert is not None:
            unknown = set(pert) - PERTURBATION_KEYS
            if unknown:
                raise ConfigError(f"unknown perturbation key(s): {sorted(unknown)}")
            for key in ("amplitude", "frequency"):
                pert[key] = _coerce("float", pert.get(key, 0.0), f"perturbation.{key}")
            pert["direction"] = _coerce("vector", pert.get("direction", [1.0] * n),
                                        "perturbation.direction")


def load_toml(path) -> dict:
    path = Path(path)
    try:
        with path.open("rb") as fh:
            return tomli.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"no such file: {path}") from None
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def load_scenario(path) -> Scenario:
    return parse_scenario(load_toml(path), source=path)


def apply_override(data: dict, dotted: str, value) -> dict:
    """Copy of ``data`` with ``a.b.c = value`` set."""
    out = copy.deepcopy(data)
    node = out
    parts = dotted.split(".")
    for part in parts[:-1]:
        node = node.setdefault(part, {})
        if not isinstance(node, dict):
            raise ConfigError(f"cannot override {dotted!r}: {part!r} is not a table")
    node[parts[-1]] = value
    return out
