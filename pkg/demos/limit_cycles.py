"""Locate limit cycles, their Floquet multipliers and phase response.

Run from the repository root::

    python demos/limit_cycles.py

Writes ``out/demos/limit_cycles.svg``.
"""
from pathlib import Path

import numpy as np

from unisync import adjoint_cycle, find_limit_cycle, get_model, monodromy
from unisync.harness import svg

OUT = Path("out/demos")

# name, seed state, rough period
CASES = [("fhn", (5.0, -5.0), 10.0, "#1f4e9c"), ("van_der_pol", (2.0, 0.0), 6.6, "#b22222"),
         ("hopf_normal_form", (0.5, 0.0), 6.3, "#2e8b57")]


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    orbit = svg.Panel("limit cycles in the (x1, x2) plane", xlabel="x1")
    response = svg.Panel("phase response z*_1 over one period", xlabel="t / T")
    for name, seed, guess, color in CASES:
        cycle = find_limit_cycle(get_model(name), seed, guess)
        fl = monodromy(cycle)
        adj = adjoint_cycle(cycle, fl)
        T = cycle.period
        ts = np.linspace(0.0, T, 400)
        pts = cycle.state(ts)
        print(f"{name:18s} T = {T:.6f}  multipliers = "
              + ", ".join(f"{abs(m):.3e}" for m in fl.multipliers)
              + f"  normalisation error = {np.max(np.abs(adj.normalization(ts) - 1)):.1e}")
        orbit.add(pts[:, 0], pts[:, 1], name, color=color)
        response.add(ts / T, adj(ts)[:, 0], name, color=color)
    # the trivial multiplier is 1; the other measures how fast nearby orbits collapse onto the cycle
    svg.write(OUT / "limit_cycles.svg", [orbit, response])
    print(f"figure written to {OUT / 'limit_cycles.svg'}")


if __name__ == "__main__":
    main()
