"""Discontinuous feedback chatters; a singularly perturbed feedback does not.

A chaotic cellular network tracks a forced master. With the raw sign
feedback the control switches at up to the step rate once an error
component reaches zero. The dynamic feedback ``eps u' = B s(t, x) + ...`` tracks
just as well with a smooth control. Run from the repository root::

    python demos/chattering_and_cure.py

Writes ``out/demos/chattering.svg``.
"""
import math
from pathlib import Path

import numpy as np

from unisync import DynamicFeedback, StaticFeedback, get_model, simulate_dynamic, simulate_static
from unisync.harness import svg
from unisync.models import master_reference
from unisync.sliding_sync import contact_rates

OUT = Path("out/demos")
T_END = 4 * math.pi
X0 = np.array([-1.0, 1.0, 1.0])


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    slave, master = get_model("chaotic_cnn"), get_model("forced_master_nn")
    y0 = master_reference(T_END)

    fb = StaticFeedback((-3.5, -3.5, -3.5), mode="raw")
    traj, log, rep = simulate_static(fb, slave, y0, X0, T_END, 1e-4)
    pre, post = contact_rates(log, T_END)
    print("raw sign feedback, h = 1e-4")
    for i in range(3):
        print(f"  component {i + 1}: {pre[i]:8.2f} switches/s before contact, "
              f"{post[i]:8.1f} after")

    dfb = DynamicFeedback(-np.eye(3), -np.eye(3), 1e-3, X0)
    x_traj, u_traj, drep = simulate_dynamic(dfb, slave, master, y0, T_END)
    print("dynamic feedback, eps = 1e-3")
    print(f"  tail tracking error {drep.scalars['tail_error']:.4f}, "
          f"rapid switches per component {drep.series['u_chatter_switches']}")

    # the raw control, reconstructed from the error sign, against the smooth one
    e = traj.x - y0(traj.t)
    u_raw = -3.5 * np.sign(e[:, 0])
    zoom = (3.95, 4.25)  # around the first contact of component 1
    p1 = svg.Panel("u_1, raw sign feedback", xlim=zoom).add(traj.t, u_raw, "u_1 raw")
    p2 = svg.Panel("u_1, dynamic feedback", xlim=(0, T_END)).add(
        u_traj.t, u_traj.x[:, 0], "u_1 dynamic", color="#2e8b57")
    svg.write(OUT / "chattering.svg", [p1, p2])
    print(f"figure written to {OUT / 'chattering.svg'}")


if __name__ == "__main__":
    main()
