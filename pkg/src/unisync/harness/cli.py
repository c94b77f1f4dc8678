"""Command line entry point.

    unisync run <cfg>         run one scenario, write trace.csv, report.json, *.svg
    unisync sweep <cfg>       run a parameter grid, write sweep.csv
    unisync limit-cycle <model> [--seed x,y] [--period-guess T]
    unisync certify <cfg>     gain certificate of a static scenario

Exit codes: 0 pass, 1 threshold failure, 2 configuration error,
3 simulation failure.
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from ..errors import ConfigError, SyncError
from ..limit_cycle import adjoint_cycle, find_limit_cycle, monodromy
from ..models import CATALOG, get_model
from .config import load_scenario
from .scenarios import EXIT_CONFIG, EXIT_FAIL, EXIT_PASS, EXIT_SIM, certify, run_scenario
from .sweep import sweep

CYCLE_DEFAULTS = {
    "fhn": ((5.0, -5.0), 10.0),
    "van_der_pol": ((2.0, 0.0), 6.6),
    "hopf_normal_form": ((0.5, 0.0), 6.3),
    "harmonic_oscillator": ((1.0, 0.0), 6.3),
}


def _vector(text: str):
    try:
        return np.array([float(v) for v in text.split(",")])
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", metavar="DIR", help="output directory (overrides the config)")
    common.add_argument("--seed", type=int, metavar="N", help="rng seed (overrides the config)")
    common.add_argument("--quiet", action="store_true", help="suppress progress output")

    ap = argparse.ArgumentParser(prog="unisync", description=__doc__.split("\n")[0],
                                 formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = ap.add_subparsers(dest="command", required=True)
    p = sub.add_parser("run", parents=[common], help="run one scenario")
    p.add_argument("config")
    p = sub.add_parser("sweep", parents=[common], help="run a parameter grid")
    p.add_argument("config")
    p.add_argument("--jobs", type=int, help="worker processes")
    p = sub.add_parser("limit-cycle", parents=[common], help="locate a limit cycle")
    p.add_argument("model", choices=sorted(CATALOG))
    p.add_argument("--seed-state", "--seed-point", dest="seed_state", type=_vector, metavar="x,y")
    p.add_argument("--period-guess", type=float, metavar="T")
    p = sub.add_parser("certify", parents=[common], help="gain certificate only")
    p.add_argument("config")
    return ap


def _limit_cycle(args) -> int:
    seed_state, guess = CYCLE_DEFAULTS.get(args.model, (None, None))
    if args.seed_state is not None:
        seed_state = args.seed_state
    if args.period_guess is not None:
        guess = args.period_guess
    if seed_state is None or guess is None:
        print(f"model {args.model!r} needs --seed and --period-guess", file=sys.stderr)
        return EXIT_CONFIG
    field = get_model(args.model)
    if len(seed_state) != field.dim:
        print(f"seed has {len(seed_state)} entries, model dimension is {field.dim}", file=sys.stderr)
        return EXIT_CONFIG
    start = time.perf_counter()
    try:
        cycle = find_limit_cycle(field, seed_state, guess)
        fl = monodromy(cycle)
        adj = adjoint_cycle(cycle, fl)
    except SyncError as exc:
        print(f"simulation failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SIM
    ts = np.linspace(0.0, cycle.period, 100, endpoint=False)
    info = {
        "model": args.model,
        "period": cycle.period,
        "anchor": cycle.anchor.tolist(),
        "closure": cycle.closure,
        "multipliers": [[float(m.real), float(m.imag)] for m in fl.multipliers],
        "adjoint_normalization_error": float(np.max(np.abs(adj.normalization(ts) - 1.0))),
        "runtime_s": time.perf_counter() - start,
    }
    text = json.dumps(info, indent=2)
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        (Path(args.out) / "limit_cycle.json").write_text(text + "\n")
    if not args.quiet:
        print(text)
    return EXIT_PASS


def _certify(args) -> int:
    try:
        sc = load_scenario(args.config)
        if args.seed is not None:
            sc.seed = args.seed
        cert, bound = certify(sc)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SyncError as exc:
        print(f"simulation failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SIM
    info = {"M_I": cert.M_I, "mu_I": cert.mu_I, "valid": cert.valid,
            "t_hit_bound_box": cert.t_hit_bound, "t_hit_bound_x0": bound,
            "box": [cert.box.lo.tolist(), cert.box.hi.tolist()], "seed": sc.seed}
    text = json.dumps(info, indent=2, default=str)
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        (Path(args.out) / "certificate.json").write_text(text + "\n")
    if not args.quiet:
        print(text)
    return EXIT_PASS if cert.valid else EXIT_FAIL


def main(argv=None) -> int:
    ap = _parser()
    if argv is None:
        argv = sys.argv[1:]
    argv = list(argv)
    # `limit-cycle` takes --seed as a state; every other command takes an integer
    if argv and argv[0] == "limit-cycle":
        argv = ["--seed-state" if a == "--seed" else
                "--seed-state=" + a[7:] if a.startswith("--seed=") else a for a in argv]
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_PASS
    if args.command == "run":
        return run_scenario(args.config, args.out, args.seed, args.quiet)
    if args.command == "sweep":
        try:
            sweep(args.config, args.out, args.seed, args.quiet, args.jobs)
        except ConfigError as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        return EXIT_PASS
    if args.command == "limit-cycle":
        return _limit_cycle(args)
    return _certify(args)


if __name__ == "__main__":
    sys.exit(main())
