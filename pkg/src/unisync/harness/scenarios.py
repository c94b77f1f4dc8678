"""Scenario pipelines: run one configured experiment, emit trace, report and plots."""
from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np

from ..errors import ConfigError, InvalidController, SingularB, SyncError
from ..limit_cycle import find_limit_cycle
from ..models import get_model, master_reference
from ..numeric import integrate_adaptive
from ..phase_sync import PhaseCoupling, simulate_phase_sync
from ..report import SyncReport
from ..singular_sync import (DynamicFeedback, SFunction, equivalent_control, reduced_solution,
                             simulate_dynamic)
from ..sliding_sync import Box, StaticFeedback, certify_gains, contact_rates, simulate_static
from . import svg
from .config import Scenario, load_scenario

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG, EXIT_SIM = 0, 1, 2, 3
REFERENCE_DT = 1e-3
PHASE_SAMPLES_PER_PERIOD = 256


@dataclass
class RunResult:
    """Everything a run produces before it touches the file system."""

    report: SyncReport
    columns: List[str]
    table: np.ndarray
    figures: List[Tuple[str, list]] = field(default_factory=list)


# --- helpers -----------------------------------------------------------------

def _trace_table(t, x, y, u=None):
    x, y = np.atleast_2d(x), np.atleast_2d(y)
    n = x.shape[1]
    cols = ["t"] + [f"x_{i + 1}" for i in range(n)] + [f"y0_{i + 1}" for i in range(n)] \
        + [f"e_{i + 1}" for i in range(n)]
    parts = [np.asarray(t)[:, None], x, y, x - y]
    if u is not None:
        cols += [f"u_{i + 1}" for i in range(n)]
        parts.append(u)
    return cols, np.hstack(parts)


def _reference(sc: Scenario, t_end: float):
    """Master field and a sampled reference trajectory on ``[0, t_end]``."""
    name = sc.models["master"]
    master = get_model(name)
    x0 = sc.models["master_x0"]
    if x0 is None:
        if name != "forced_master_nn":
            raise ConfigError(f"master {name!r} has no closed-form reference; give [models].master_x0")
        return master, master_reference(t_end, REFERENCE_DT)
    if x0.size != master.dim:
        raise ConfigError("master_x0 has the wrong dimension")
    return master, integrate_adaptive(master, x0, 0.0, t_end, rtol=1e-11, atol=1e-13)


def _threshold(report: SyncReport, sc: Scenario, key: str, value, op: str):
    if key in sc.thresholds:
        limit = sc.thresholds[key]
        if isinstance(limit, bool):
            report.checks[key] = {"value": bool(value), "limit": limit, "op": "==",
                                  "passed": bool(value) == limit}
        else:
            report.check(key, float(value), float(limit), op)


def _overlay(title, t, x, y, xlim=None, labels=("x_1 (slave)", "y0_1 (master)")):
    return svg.Panel(title, xlim=xlim).add(t, x, labels[0], "solid", "#1f4e9c") \
        .add(t, y, labels[1], "dashed", "#c0392b")


# --- phase synchronisation ---------------------------------------------------

def run_phase(sc: Scenario) -> RunResult:
    p = sc.params
    slave_f, master_f = get_model(sc.models["slave"]), get_model(sc.models["master"])
    seed = p["cycle_seed"] if p["cycle_seed"] is not None else p["x0"]
    master = find_limit_cycle(master_f, seed, p["period_guess"])
    if p["master_anchor"] is not None:
        master = master.anchored_near(p["master_anchor"])
    if sc.models["slave"] == sc.models["master"]:
        slave = master
    else:
        slave = find_limit_cycle(slave_f, seed, p["period_guess"])
    pc = PhaseCoupling.from_cycles(slave, master, p["epsilon"], p["delta"])
    n = p["n_periods"]
    traj, report = simulate_phase_sync(pc, p["x0"], n, rtol=p["rtol"], atol=p["atol"])
    T = pc.period
    s = report.scalars
    s["lag_ratio"] = s["lag_final"] / s["lag_first"] if s["lag_first"] > 0 else math.inf
    s["final_lag_fraction"] = s["lag_final"] / T
    if p["control_run"]:
        pc0 = PhaseCoupling(0.0, p["delta"], master, slave, pc.Dmin)
        _, rep0 = simulate_phase_sync(pc0, p["x0"], n, rtol=p["rtol"], atol=p["atol"])
        first, final = rep0.scalars["lag_first"], rep0.scalars["lag_final"]
        s["control_lag_first"], s["control_lag_final"] = first, final
        s["control_lag_change"] = abs(final - first) / first if first > 0 else 0.0
        report.series["control_phase_lag"] = rep0.series["phase_lag"]
    _threshold(report, sc, "lag_ratio_max", s["lag_ratio"], "<=")
    _threshold(report, sc, "final_lag_fraction_max", s["final_lag_fraction"], "<=")
    _threshold(report, sc, "prop_residual_max", s["prop_residual"], "<")
    if "control_lag_change" in s:
        _threshold(report, sc, "control_lag_change_max", s["control_lag_change"], "<=")
    elif "control_lag_change_max" in sc.thresholds:
        raise ConfigError("control_lag_change_max needs control_run = true")

    t = np.linspace(0.0, n * T, n * PHASE_SAMPLES_PER_PERIOD + 1)
    x, y = traj(t), master.state(t)
    cols, table = _trace_table(t, x, y)
    panels = [_overlay("period [T, 2T]", t, x[:, 0], y[:, 0], (T, 2 * T)),
              _overlay(f"period [{n - 1}T, {n}T]", t, x[:, 0], y[:, 0], ((n - 1) * T, n * T))]
    return RunResult(report, cols, table, [("phase_sync.svg", panels)])


# --- static (sliding) feedback -----------------------------------------------

def _static_setup(sc: Scenario):
    p = sc.params
    slave = get_model(sc.models["slave"])
    if slave.dim != p["x0"].size:
        raise ConfigError("x0 does not match the slave dimension")
    try:
        fb = StaticFeedback(p["gains"], p["mode"])
        box = Box.of(p["box_lo"], p["box_hi"]) if p["box_lo"] is not None else Box.of(p["x0"], p["x0"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    if not box.contains(p["x0"]):
        raise ConfigError("x0 lies outside the declared box")
    master, y0ref = _reference(sc, p["t_end"])
    return p, slave, master, y0ref, fb, box


def certify(sc: Scenario):
    """Gain certificate for a static scenario (never raises on small gains)."""
    if sc.kind != "static":
        raise ConfigError("certify needs a static scenario")
    p, slave, master, y0ref, fb, box = _static_setup(sc)
    cert = certify_gains(fb, slave, master, y0ref, box, p["n_samples"], seed=sc.seed,
                         t_span=(0.0, p["t_end"]), strict=False)
    return cert, cert.bound_for(p["x0"], y0ref(0.0))


def run_static(sc: Scenario) -> RunResult:
    p, slave, master, y0ref, fb, box = _static_setup(sc)
    traj, log, report = simulate_static(fb, slave, y0ref, p["x0"], p["t_end"], p["h"])
    s = report.scalars
    pre, post = contact_rates(log, p["t_end"])
    ratio = np.where(pre > 0, post / np.where(pre > 0, pre, 1.0), 0.0)
    report.series["pre_contact_rate"] = pre.tolist()
    report.series["post_contact_rate"] = post.tolist()
    report.series["switch_ratio"] = ratio.tolist()
    s["switch_ratio_min"] = float(ratio.min())

    if p["certify"]:
        cert = certify_gains(fb, slave, master, y0ref, box, p["n_samples"], seed=sc.seed,
                             t_span=(0.0, p["t_end"]), strict=False)
        bound = cert.bound_for(p["x0"], y0ref(0.0))
        s.update(M_I=cert.M_I, mu_I=cert.mu_I, certificate_valid=cert.valid,
                 t_hit_bound=bound, t_hit_bound_box=cert.t_hit_bound)
        # without a valid certificate there is no bound to be within
        s["hit_within_bound"] = bool(cert.valid and s["hitting_time"] <= bound)
        if p["random_starts"]:
            rng = np.random.default_rng(sc.seed)
            starts = box.sample(rng, p["random_starts"])
            bounds = [cert.bound_for(x0, y0ref(0.0)) for x0 in starts]
            hits = []
            if cert.valid:
                for x0, tb in zip(starts, bounds):
                    # only the hitting time matters; a run past its bound is a violation
                    horizon = min(p["t_end"], 1.01 * tb + 10 * p["h"])
                    _, _, rep = simulate_static(fb, slave, y0ref, x0, horizon, p["h"])
                    hits.append(rep.scalars["hitting_time"])
                violations = sum(1 for th, tb in zip(hits, bounds) if not th <= tb)
            else:
                violations = len(starts)
            report.series.update(random_starts=starts.tolist(), random_hitting_times=hits,
                                 random_bounds=bounds)
            s["bound_violations"] = violations
    elif {"hit_within_bound", "bound_violations_max"} & set(sc.thresholds):
        raise ConfigError("bound thresholds need certify = true")

    _threshold(report, sc, "switch_ratio_min", s["switch_ratio_min"], ">=")
    if "hit_within_bound" in s:
        _threshold(report, sc, "hit_within_bound", s["hit_within_bound"], "==")
    _threshold(report, sc, "post_hit_error_max", s["post_hit_max_error"], "<=")
    if "bound_violations" in s:
        _threshold(report, sc, "bound_violations_max", s["bound_violations"], "<=")
    elif "bound_violations_max" in sc.thresholds:
        raise ConfigError("bound_violations_max needs random_starts > 0")

    t = traj.t
    y = y0ref(t)
    cols, table = _trace_table(t, traj.x, y)
    tc = report.series["first_contact"][0]
    if not math.isfinite(tc):
        tc = 0.5 * p["t_end"]
    half = min(0.1, 0.5 * p["t_end"])
    panels = [_overlay("x_1 and y0_1", t, traj.x[:, 0], y[:, 0]),
              _overlay("zoom around the hitting zone", t, traj.x[:, 0], y[:, 0],
                       (max(0.0, tc - half), min(p["t_end"], tc + half)))]
    return RunResult(report, cols, table, [("static_sync.svg", panels)])


# --- dynamic (singularly perturbed) feedback ----------------------------------

def _perturbation(spec):
    if spec is None:
        return None
    amp, freq, direction = spec["amplitude"], spec["frequency"], spec["direction"]

    def p(t, x):
        return amp * math.sin(freq * t) * direction

    return p


def run_dynamic(sc: Scenario) -> RunResult:
    p = sc.params
    slave = get_model(sc.models["slave"])
    if slave.dim != p["xi0"].size:
        raise ConfigError("xi0 does not match the slave dimension")
    try:
        fb = DynamicFeedback(p["B"], p["C"], p["epsilon"], p["xi0"])
    except (InvalidController, SingularB) as exc:
        raise ConfigError(str(exc)) from exc
    if p["perturbation"] is not None and p["perturbation"]["direction"].size != slave.dim:
        raise ConfigError("perturbation direction has the wrong dimension")
    master, y0ref = _reference(sc, p["t_end"])
    x_traj, u_traj, report = simulate_dynamic(
        fb, slave, master, y0ref, p["t_end"], u_init=p["u0"], h=p["h"],
        perturbation=_perturbation(p["perturbation"]))
    s = report.scalars
    s["chatter_switches_max"] = int(max(report.series["u_chatter_switches"]))
    s["sign_changes_max"] = int(max(report.series["u_sign_changes"]))

    # distance to the reduced (slow-manifold) solution, on a thinned grid
    sf = SFunction(y0ref, master, fb.C, fb.xi0)
    t = x_traj.t
    idx = np.arange(0, t.size, max(1, t.size // 20_000))
    tt = t[idx]
    x_red = reduced_solution(sf, tt)
    u_red = np.array([equivalent_control(fb, slave, master, y0ref, ti, sf) for ti in tt.tolist()])
    late = tt >= min(1.0, tt[-1])
    s["reduced_x_error"] = float(np.max(np.abs(x_traj.x[idx] - x_red)))
    s["reduced_u_error_after_1"] = float(np.max(np.abs(u_traj.x[idx][late] - u_red[late])))

    _threshold(report, sc, "tail_error_max", s["tail_error"], "<")
    _threshold(report, sc, "chatter_switches_max", s["chatter_switches_max"], "<=")

    y = y0ref(t)
    cols, table = _trace_table(t, x_traj.x, y, u_traj.x)
    t_mid = 2 * math.pi if p["t_end"] > 2 * math.pi + 0.2 else 0.5 * p["t_end"]
    zoom = (max(0.0, t_mid - 0.2), min(p["t_end"], t_mid + 0.2))
    panels = [_overlay("x_1 and y0_1", t, x_traj.x[:, 0], y[:, 0]),
              _overlay("zoom around t = 2 pi" if t_mid == 2 * math.pi else "zoom", t,
                       x_traj.x[:, 0], y[:, 0], zoom)]
    control = [svg.Panel("control u_1 and equivalent control").add(t, u_traj.x[:, 0], "u_1", "solid")
               .add(tt, u_red[:, 0], "u0_1", "dotted", "#c0392b")]
    return RunResult(report, cols, table, [("dynamic_sync.svg", panels),
                                           ("dynamic_control.svg", control)])


PIPELINES = {"phase": run_phase, "static": run_static, "dynamic": run_dynamic}


def execute(sc: Scenario) -> RunResult:
    """Run a validated scenario in memory."""
    return PIPELINES[sc.kind](sc)


# --- artifacts ----------------------------------------------------------------

def write_trace(path, columns, table, every: int = 1) -> None:
    rows = table[::every]
    if (table.shape[0] - 1) % every:
        rows = np.vstack([rows, table[-1:]])
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(",".join(columns) + "\n")
        np.savetxt(fh, rows, fmt="%.17g", delimiter=",")


def write_artifacts(result: RunResult, out_dir, trace_every: int = 1, plots: bool = True) -> None:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_trace(out_dir / "trace.csv", result.columns, result.table, trace_every)
    (out_dir / "report.json").write_text(result.report.to_json(indent=2) + "\n")
    if plots:
        for name, panels in result.figures:
            svg.write(out_dir / name, panels)


def resolve_out(sc: Scenario, out: Optional[str]) -> Path:
    if out is not None:
        return Path(out)
    return Path(sc.output["dir"])


def _say(quiet: bool, msg: str) -> None:
    if not quiet:
        print(msg)


def run_scenario(path, out: Optional[str] = None, seed: Optional[int] = None,
                 quiet: bool = False) -> int:
    """Load, run and write one scenario; returns the process exit code."""
    try:
        sc = load_scenario(path)
        if seed is not None:
            sc.seed = seed
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        result = execute(sc)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SyncError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"simulation failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SIM
    out_dir = resolve_out(sc, out)
    write_artifacts(result, out_dir, sc.output["trace_every"], sc.output["plots"])
    rep = result.report
    for name, c in rep.checks.items():
        _say(quiet, f"{'PASS' if c['passed'] else 'FAIL'} {name}: {c['value']} {c['op']} {c['limit']}")
    _say(quiet, f"artifacts written to {out_dir}")
    return EXIT_PASS if rep.passed else EXIT_FAIL
