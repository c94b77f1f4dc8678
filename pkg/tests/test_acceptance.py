"""Acceptance criteria, one test each, at the stated tolerances.

Every test records a PASS/FAIL line that is printed in the terminal summary
(section "acceptance criteria") and also to stdout, so the verdicts are
visible with or without ``-s``.
"""
import json
import math
import subprocess
import sys
import time

import numpy as np
import pytest

from unisync.harness import execute, parse_scenario, run_scenario
from unisync.harness.config import apply_override, load_toml
from unisync.models import CATALOG, forced_master_nn, get_model, master_orbit
from unisync.numeric import fd_jacobian
from unisync.report import SyncReport
from unisync.phase_sync import _circ_dist, distance_integral, malkin_F, theta_star

from conftest import ACCEPTANCE_LINES, SCENARIOS

BUNDLED = sorted(p.stem for p in SCENARIOS.glob("*.toml") if not p.stem.startswith("sweep"))


def record(number: int, title: str, checks: dict) -> None:
    """Store and print one verdict line; ``checks`` maps a label to (ok, detail)."""
    ok = all(v[0] for v in checks.values())
    detail = "; ".join(f"{k}={v[1]}{'' if v[0] else ' (fail)'}" for k, v in checks.items())
    line = f"{'PASS' if ok else 'FAIL'} criterion {number:2d} {title}: {detail}"
    ACCEPTANCE_LINES[f"{number:02d}"] = line
    print(line)
    assert ok, line


class _Runs:
    """Runs each bundled scenario at most once per session, on demand."""

    def __init__(self, root):
        self.root = root
        self.cache = {}

    def __getitem__(self, name):
        if name not in self.cache:
            out = self.root / name
            start = time.perf_counter()
            code = run_scenario(SCENARIOS / f"{name}.toml", out=str(out), quiet=True)
            elapsed = time.perf_counter() - start
            parsed = SyncReport.from_json((out / "report.json").read_text())
            rep = {"scalars": parsed.scalars, "series": parsed.series}
            self.cache[name] = (code, elapsed, rep, out)
        return self.cache[name]


@pytest.fixture(scope="session")
def runs(tmp_path_factory):
    return _Runs(tmp_path_factory.mktemp("bundled"))


def test_criterion_01_fhn_period():
    start = time.perf_counter()
    proc = subprocess.run([sys.executable, "-m", "unisync", "limit-cycle", "fhn"],
                          capture_output=True, text=True)
    wall = time.perf_counter() - start
    info = json.loads(proc.stdout)
    T = info["period"]
    record(1, "FHN period", {
        "exit": (proc.returncode == 0, proc.returncode),
        "T": (abs(T - 9.83) <= 0.01 * 9.83, f"{T:.6f}"),
        "runtime_s": (wall < 5.0, f"{wall:.2f}"),
    })


def test_criterion_02_floquet_structure(fhn_floquet, fhn_adjoint, fhn_cycle):
    mults = fhn_floquet.multipliers
    trivial = [m for m in mults if 0.999 <= m.real <= 1.001 and abs(m.imag) < 1e-9]
    others = sorted(mults, key=lambda m: abs(m - 1))[1:]
    ts = np.linspace(0.0, fhn_cycle.period, 100, endpoint=False)
    norm_err = float(np.max(np.abs(fhn_adjoint.normalization(ts) - 1.0)))
    record(2, "Floquet structure", {
        "trivial_multiplier": (len(trivial) == 1, f"{trivial[0].real:.9f}" if trivial else "none"),
        "other_modulus": (all(abs(m) < 1 for m in others), ",".join(f"{abs(m):.3e}" for m in others)),
        "adjoint_normalization_error": (norm_err <= 1e-5, f"{norm_err:.2e}"),
    })


def test_criterion_03_phase_synchronization(runs):
    code, elapsed, rep, _ = runs["example1"]
    s = rep["scalars"]
    record(3, "phase synchronization", {
        "lag_ratio": (s["lag_ratio"] <= 0.2, f"{s['lag_ratio']:.4f}"),
        "final_lag_over_T": (s["final_lag_fraction"] <= 0.1, f"{s['final_lag_fraction']:.4f}"),
        "control_lag_change": (s["control_lag_change"] <= 0.05, f"{s['control_lag_change']:.2e}"),
        "runtime_s": (elapsed < 60.0, f"{elapsed:.1f}"),
    })


def test_criterion_04_malkin_properties(fhn_cycle):
    cyc = fhn_cycle.anchored_near((-0.7481, 1.5164))
    th = theta_star(cyc, cyc)
    theta0, T = th[0], cyc.period
    zero = malkin_F(cyc, cyc, 0.0, theta_star_result=th)
    F0 = distance_integral(cyc, cyc, theta0) - zero.Dmin
    profiles = [malkin_F(cyc, cyc, d, theta_star_result=th) for d in (0.2, 0.1, 0.05, 0.025)]
    per = max(p.periodicity_error / np.max(np.abs(p.values)) for p in profiles)
    dist = [_circ_dist(p.selected, theta0, T) for p in profiles]
    record(4, "Malkin function", {
        "periodicity_rel": (per <= 1e-6, f"{per:.2e}"),
        "F0_at_theta0": (abs(F0) <= 1e-9, f"{F0:.2e}"),
        "ladder_distance": (all(b < a for a, b in zip(dist, dist[1:])),
                            ",".join(f"{d:.4f}" for d in dist)),
    })


def test_criterion_05_finite_time_synchronization(runs):
    code, elapsed, rep, _ = runs["example2_filippov"]
    s = rep["scalars"]
    record(5, "finite-time synchronization (b = -3.5)", {
        "certificate_valid": (bool(s["certificate_valid"]), s["certificate_valid"]),
        "hit_le_bound": (bool(s["hit_within_bound"]),
                         f"{s['hitting_time']:.4f}<={s['t_hit_bound']:.4g}"),
        "random_start_violations": (s["bound_violations"] == 0, s["bound_violations"]),
        "post_hit_error": (s["post_hit_max_error"] <= 1e-6, f"{s['post_hit_max_error']:.3e}"),
        "runtime_s": (elapsed < 30.0, f"{elapsed:.1f}"),
    })


def test_criterion_06_chattering_and_cure(runs):
    _, t_raw, raw, _ = runs["example2"]
    _, t_dyn, dyn, _ = runs["example3"]
    ratios = raw["series"]["switch_ratio"]
    chatter = dyn["series"]["u_chatter_switches"]
    tail = dyn["scalars"]["tail_error"]
    record(6, "chattering and its cure", {
        "raw_switch_ratio": (min(ratios) >= 100, ",".join(f"{r:.1f}" for r in ratios)),
        "dynamic_chatter_switches": (max(chatter) == 0, ",".join(str(c) for c in chatter)),
        "dynamic_sign_changes": (True, ",".join(str(c) for c in dyn["series"]["u_sign_changes"])),
        "tail_error": (tail < 0.05, f"{tail:.4f}"),
        "runtime_s": (t_raw + t_dyn < 60.0, f"{t_raw + t_dyn:.1f}"),
    })


def test_criterion_07_singular_perturbation_ladder(runs):
    base = load_toml(SCENARIOS / "example3.toml")
    xs, us = [], []
    for eps in (0.01, 0.003):
        s = execute(parse_scenario(apply_override(base, "dynamic.epsilon", eps))).report.scalars
        xs.append(s["reduced_x_error"])
        us.append(s["reduced_u_error_after_1"])
    s = runs["example3"][2]["scalars"]
    xs.append(s["reduced_x_error"])
    us.append(s["reduced_u_error_after_1"])
    record(7, "singular-perturbation ladder (eps 0.01, 0.003, 0.001)", {
        "sup_x_error": (xs[0] > xs[1] > xs[2], ",".join(f"{v:.4g}" for v in xs)),
        "sup_u_error_after_1": (us[0] > us[1] > us[2], ",".join(f"{v:.4g}" for v in us)),
    })


def test_criterion_08_robustness(runs):
    code, _, rep, _ = runs["example3_perturbed"]
    tail = rep["scalars"]["tail_error"]
    record(8, "robustness to p = 0.1 sin(5t)(1,1,1)", {"tail_error": (tail < 0.05, f"{tail:.4f}")})


def test_criterion_09_model_transcription():
    f = forced_master_nn()
    res = 0.0
    for t in np.linspace(0.0, 4 * math.pi, 1000):
        dy = np.array([-math.sin(t), math.cos(t), math.sin(t)])
        res = max(res, float(np.max(np.abs(f(t, master_orbit(t)) - dy))))
    rng = np.random.default_rng(2024)
    worst = {}
    for name in sorted(CATALOG):
        g = get_model(name)
        err = 0.0
        n = 0
        while n < 100:
            x = rng.uniform(-2.5, 2.5, g.dim)
            if name == "chaotic_cnn" and np.min(np.abs(np.abs(x) - 1)) < 1e-3:
                continue
            J = g.jacobian(0.3, x)
            err = max(err, float(np.max(np.abs(J - fd_jacobian(g.func, 0.3, x)))
                                 / max(1.0, np.max(np.abs(J)))))
            n += 1
        worst[name] = err
    record(9, "model transcription", {
        "master_residual": (res <= 1e-12, f"{res:.2e}"),
        "jacobian_rel_error": (max(worst.values()) <= 1e-5, f"{max(worst.values()):.2e}"),
    })


def test_criterion_10_determinism(runs, tmp_path):
    checks = {}
    for name in BUNDLED:
        first = runs[name][3] / "trace.csv"
        again = tmp_path / name
        run_scenario(SCENARIOS / f"{name}.toml", out=str(again), quiet=True)
        same = first.read_bytes() == (again / "trace.csv").read_bytes()
        checks[name] = (same, "identical" if same else "differs")
    record(10, "determinism", checks)
