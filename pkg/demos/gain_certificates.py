"""How large must the sliding gains be for a finite-time guarantee?

For each gain b the sampled drift bound M_I over the box [-2, 2]^3 gives
mu_I = b + M_I. A negative mu_I certifies that the error reaches zero no
later than V(e(0)) / |mu_I|; the Filippov run then shows when it actually
does. Run from the repository root::

    python demos/gain_certificates.py
"""
import math

import numpy as np

from unisync import Box, StaticFeedback, certify_gains, get_model, simulate_static
from unisync.models import master_reference

T_END = 4 * math.pi
X0 = np.array([-1.0, 1.0, 1.0])


def main():
    slave, master = get_model("chaotic_cnn"), get_model("forced_master_nn")
    y0 = master_reference(T_END)
    box = Box.of([-2.0] * 3, [2.0] * 3)
    print(f"{'b':>6} {'M_I':>8} {'mu_I':>8} {'valid':>6} {'bound':>8} {'hit':>8} {'post-hit error':>15}")
    for b in (-3.5, -5.0, -10.0, -20.0, -25.0):
        fb = StaticFeedback((b, b, b), mode="filippov")
        cert = certify_gains(fb, slave, master, y0, box, seed=0, strict=False)
        _, _, rep = simulate_static(fb, slave, y0, X0, T_END, 1e-3)
        s = rep.scalars
        print(f"{b:6.1f} {cert.M_I:8.3f} {cert.mu_I:8.3f} {str(cert.valid):>6} "
              f"{cert.bound_for(X0, y0(0.0)):8.4f} {s['hitting_time']:8.4f} "
              f"{s['post_hit_max_error']:15.3e}")
    # the certificate is sufficient, not necessary: moderate gains may still
    # synchronise, but nothing guarantees it before the run


if __name__ == "__main__":
    main()
