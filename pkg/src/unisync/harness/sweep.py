"""Cartesian parameter sweeps over a base scenario.

Sweep file layout::

    base = "example3.toml"          # resolved relative to the sweep file
    jobs = 1                        # worker processes
    [grid]
    "dynamic.epsilon" = [0.01, 0.003, 0.001]
    [output]
    dir = "out/sweep"

Each grid point becomes one row of ``sweep.csv``; its report goes to
``rows/<index>/report.json``. A failing row fills the ``error`` column and the
sweep carries on.
"""
from __future__ import annotations

import csv
import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Optional

import numpy as np

from ..errors import ConfigError, SyncError
from .config import load_toml, parse_scenario, apply_override
from .scenarios import execute

METRICS = {
    "phase": ["lag_first", "lag_final", "lag_ratio", "final_lag_fraction", "prop_residual"],
    "static": ["hitting_time", "t_hit_bound", "M_I", "mu_I", "certificate_valid",
               "post_hit_max_error", "switch_ratio_min", "final_error"],
    "dynamic": ["tail_error", "max_error", "reduced_x_error", "reduced_u_error_after_1",
                "chatter_switches_max", "sign_changes_max"],
}
SWEEP_KEYS = {"base", "jobs", "grid", "output"}


def load_sweep(path):
    path = Path(path)
    data = load_toml(path)
    unknown = set(data) - SWEEP_KEYS
    if unknown:
        raise ConfigError(f"unknown sweep key(s): {sorted(unknown)}")
    if "base" not in data:
        raise ConfigError("sweep needs a 'base' scenario")
    base_path = path.parent / data["base"]
    base = load_toml(base_path)
    grid = data.get("grid", {})
    if not isinstance(grid, dict) or not all(isinstance(v, list) for v in grid.values()):
        raise ConfigError("[grid] must map dotted keys to lists")
    output = data.get("output", {})
    if set(output) - {"dir"}:
        raise ConfigError(f"unknown key(s) in sweep [output]: {sorted(set(output) - {'dir'})}")
    jobs = data.get("jobs", 1)
    if not isinstance(jobs, int) or jobs < 1:
        raise ConfigError("jobs must be a positive integer")
    kind = parse_scenario(base, base_path).kind
    return base, grid, kind, jobs, output.get("dir", "out/sweep")


def grid_points(grid: dict):
    keys = list(grid)
    if not keys or any(len(v) == 0 for v in grid.values()):
        return keys, []
    return keys, [dict(zip(keys, combo)) for combo in itertools.product(*grid.values())]


def _row(args):
    base, point, seed, row_dir = args
    data = base
    for key, value in point.items():
        data = apply_override(data, key, value)
    if seed is not None:
        data = dict(data, seed=seed)
    out = {"error": ""}
    try:
        sc = parse_scenario(data)
        result = execute(sc)
    except (SyncError, FloatingPointError, np.linalg.LinAlgError, ValueError) as exc:
        out["error"] = f"{type(exc).__name__}: {exc}"
        return out
    rep = result.report
    out.update({m: rep.scalars.get(m, "") for m in METRICS[sc.kind]})
    out["passed"] = rep.passed
    row_dir.mkdir(parents=True, exist_ok=True)
    (row_dir / "report.json").write_text(rep.to_json(indent=2) + "\n")
    return out


def _fmt(v):
    if isinstance(v, bool) or isinstance(v, str):
        return str(v)
    if isinstance(v, (list, tuple)):
        return ";".join(_fmt(u) for u in v)
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    return repr(v) if not math.isfinite(v) else f"{v:.17g}"


def sweep(path, out: Optional[str] = None, seed: Optional[int] = None, quiet: bool = False,
          jobs: Optional[int] = None) -> Path:
    """Run every grid point; returns the path of the merged CSV."""
    base, grid, kind, cfg_jobs, out_dir = load_sweep(path)
    out_dir = Path(out if out is not None else out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    keys, points = grid_points(grid)
    tasks = [(base, pt, seed, out_dir / "rows" / f"{i:04d}") for i, pt in enumerate(points)]
    workers = jobs or cfg_jobs
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_row, tasks))
    else:
        rows = [_row(t) for t in tasks]
    header = keys + METRICS[kind] + ["passed", "error"]
    target = out_dir / "sweep.csv"
    with target.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for pt, row in zip(points, rows):
            w.writerow([_fmt(pt[k]) for k in keys]
                       + [_fmt(row[m]) if m in row and row[m] != "" else "" for m in METRICS[kind]]
                       + [_fmt(row["passed"]) if "passed" in row else "", row["error"]])
            if not quiet:
                print(", ".join(f"{k}={pt[k]}" for k in keys), "->",
                      row["error"] or ("pass" if row["passed"] else "threshold fail"))
    return target
