"""Chattering-free tracking through a singularly perturbed dynamic feedback.

The slave is driven by ``-B u`` where ``u`` relaxes, on the fast time scale
``eps``, toward the control that keeps the surface function

    s(t, x) = exp(C t) (xi0 - y0(0)) - (x - y0(t))

at zero. On the slow manifold the error obeys ``x - y0 = exp(C t)(xi0 - y0(0))``
exactly, which the simulations are checked against.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import InvalidController, SingularB
from .numeric import SymExp, Trajectory, VectorField, as_state, check_symmetric, integrate_fixed
from .report import SyncReport
from .sliding_sync import SwitchLog

CHATTER_DWELL = 0.05


@dataclass(frozen=True)
class DynamicFeedback:
    """Gain matrix ``B``, surface matrix ``C``, time scale ``eps`` and start ``xi0``.

    ``alpha = -max eig(C)`` and ``nu = -max eig((B + B^T)/2)`` are computed at
    construction; both must be positive.
    """

    B: np.ndarray
    C: np.ndarray
    eps: float
    xi0: np.ndarray
    alpha: float = field(init=False)
    nu: float = field(init=False)

    def __post_init__(self):
        B = np.atleast_2d(np.array(self.B, dtype=float))
        C = check_symmetric(self.C)
        xi0 = as_state(self.xi0, B.shape[0])
        if B.shape != C.shape:
            raise InvalidController("B and C must have the same shape")
        if not self.eps > 0:
            raise InvalidController("eps must be positive")
        alpha = -float(np.max(np.linalg.eigvalsh(C)))
        nu = -float(np.max(np.linalg.eigvalsh(0.5 * (B + B.T))))
        if not alpha > 0:
            raise InvalidController("C must have strictly negative eigenvalues")
        if not nu > 0:
            raise InvalidController("B must have a negative definite symmetric part")
        if abs(np.linalg.det(B)) < 1e-300:
            raise SingularB("B is singular")
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "xi0", xi0)
        object.__setattr__(self, "eps", float(self.eps))
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "nu", nu)

    def with_eps(self, eps: float) -> "DynamicFeedback":
        return DynamicFeedback(self.B, self.C, eps, self.xi0)


class SFunction:
    """Surface ``s(t, x) = exp(Ct)(xi0 - y0(0)) - (x - y0(t))``.

    ``y0`` comes from ``y0ref``; its time derivative is the master field on
    the reference, ``psi(t, y0(t))``, never a difference quotient.
    """

    def __init__(self, y0ref: Trajectory, master: VectorField, C, xi0):
        self.y0ref = y0ref
        self.master = master
        self.expC = SymExp(C)
        self.C = self.expC.C
        self.xi0 = as_state(xi0)
        self.offset = self.xi0 - y0ref(y0ref.t0)
        self.t0 = y0ref.t0

    def anchor(self, t: float) -> np.ndarray:
        """``exp(C t) (xi0 - y0(0))``, the prescribed error on the slow manifold."""
        return self.expC.apply(t - self.t0, self.offset)

    def y0(self, t: float) -> np.ndarray:
        return self.y0ref(t)

    def y0_dot(self, t: float) -> np.ndarray:
        return self.master.func(t, self.y0ref(t))

    def ds_dt(self, t: float) -> np.ndarray:
        return self.C @ self.anchor(t) + self.y0_dot(t)

    def __call__(self, t: float, x) -> np.ndarray:
        return self.anchor(t) - (np.asarray(x) - self.y0ref(t))


def s_eval(sf: SFunction, t: float, x) -> np.ndarray:
    return sf(t, x)


def s_partials(sf: SFunction, t: float, x):
    """``(ds/dt, ds/dx)`` = ``(C exp(Ct)(xi0 - y0(0)) + y0'(t), -I)``."""
    return sf.ds_dt(t), -np.eye(sf.xi0.size)


def frozen_equilibrium(fb: DynamicFeedback, slave: VectorField, sf: SFunction,
                       t: float, x) -> np.ndarray:
    """Root of ``g(t, xi0, x, .)``: the fast variable's rest point at frozen ``(t, x)``."""
    rhs = sf.ds_dt(t) - slave.func(t, x)
    return -np.linalg.solve(fb.B, rhs)


def coupled_dynamic_rhs(fb: DynamicFeedback, slave: VectorField, sf: SFunction, t: float,
                        z: np.ndarray, perturbation: Optional[Callable] = None) -> np.ndarray:
    """Right-hand side of the stacked state ``z = (x, u)``.

    ``x' = phi + p - B u`` and ``eps u' = ds/dt + ds/dx (phi + p - B u)``.
    """
    n = fb.xi0.size
    x, u = z[:n], z[n:]
    drift = slave.func(t, x)
    if perturbation is not None:
        drift = drift + perturbation(t, x)
    xdot = drift - fb.B @ u
    return np.concatenate([xdot, (sf.ds_dt(t) - xdot) / fb.eps])


def reduced_solution(sf: SFunction, t) -> np.ndarray:
    """Slow-manifold trajectory ``x0(t) = y0(t) + exp(Ct)(xi0 - y0(0))``."""
    if np.ndim(t) == 0:
        return sf.y0ref(t) + sf.anchor(t)
    t = np.asarray(t, dtype=float)
    return sf.y0ref(t) + np.array([sf.anchor(ti) for ti in t])


def equivalent_control(fb: DynamicFeedback, slave: VectorField, master: VectorField,
                       y0ref: Trajectory, t: float, sf: Optional[SFunction] = None) -> np.ndarray:
    """``u0(t) = -B^{-1}[C exp(Ct)(xi0 - y0(0)) + psi(t, y0(t)) - phi(t, x0(t))]``."""
    if sf is None:
        sf = SFunction(y0ref, master, fb.C, fb.xi0)
    try:
        Binv_rhs = np.linalg.solve(
            fb.B, sf.C @ sf.anchor(t) + master.func(t, y0ref(t)) - slave.func(t, reduced_solution(sf, t)))
    except np.linalg.LinAlgError as exc:
        raise SingularB(str(exc)) from exc
    return -Binv_rhs


def chatter_switches(log: SwitchLog, dwell: float = CHATTER_DWELL, after: float = 0.0):
    """Per-component count of sign switches closer than ``dwell`` to the previous one.

    Smooth controls cross zero at the slow time scale of the reference; a
    switch following another within ``dwell`` is high-frequency chatter.
    """
    out = []
    for ts in log.times:
        ts = ts[ts >= after]
        out.append(int(np.count_nonzero(np.diff(ts) < dwell)))
    return out


def simulate_dynamic(fb: DynamicFeedback, slave: VectorField, master: VectorField,
                     y0ref: Trajectory, t_end: float, *, u_init=None, h: Optional[float] = None,
                     perturbation: Optional[Callable] = None, transient: float = 0.5,
                     tail_fraction: float = 0.2):
    """Integrate the singularly perturbed closed loop from ``x(0) = xi0``.

    ``u(0)`` defaults to the equivalent control at ``t0``, so no boundary
    layer is visible. The fixed RK4 step defaults to ``eps / 20``, well inside
    the explicit stability limit for the fast contraction at rate ``nu/eps``.

    Returns ``(x_traj, u_traj, report)``.
    """
    sf = SFunction(y0ref, master, fb.C, fb.xi0)
    n = fb.xi0.size
    t0 = y0ref.t0
    if u_init is None:
        u_init = equivalent_control(fb, slave, master, y0ref, t0, sf)
    z0 = np.concatenate([fb.xi0, as_state(u_init, n)])
    if h is None:
        h = fb.eps / 20.0
    phi = slave.func
    B, eps = fb.B, fb.eps
    # ds/dt does not depend on the state; RK4 revisits each stage time twice
    cache = {}

    def ds_dt(t):
        v = cache.get(t)
        if v is None:
            if len(cache) > 4:
                cache.clear()
            v = cache[t] = sf.ds_dt(t)
        return v

    def rhs(t, z):
        x = z[:n]
        drift = phi(t, x)
        if perturbation is not None:
            drift = drift + perturbation(t, x)
        xdot = drift - B @ z[n:]
        out = np.empty(2 * n)
        out[:n] = xdot
        out[n:] = (ds_dt(t) - xdot) / eps
        return out

    traj = integrate_fixed(rhs, z0, t0, t_end, h)
    x_traj = Trajectory(traj.t, traj.x[:, :n], traj.dx[:, :n], meta=traj.meta)
    u_traj = Trajectory(traj.t, traj.x[:, n:], traj.dx[:, n:], meta=traj.meta)
    report = _dynamic_report(fb, sf, x_traj, u_traj, transient, tail_fraction)
    return x_traj, u_traj, report


def simulate_dynamic_perturbed(fb, slave, master, y0ref, p: Callable, t_end: float, **kw):
    """Same as :func:`simulate_dynamic` with an additive drift ``p(t, x)``."""
    return simulate_dynamic(fb, slave, master, y0ref, t_end, perturbation=p, **kw)


def _dynamic_report(fb, sf, x_traj, u_traj, transient, tail_fraction) -> SyncReport:
    t = x_traj.t
    err = np.max(np.abs(x_traj.x - sf.y0ref(t)), axis=1)
    t0, t1 = t[0], t[-1]
    tail = t >= t1 - tail_fraction * (t1 - t0)
    u = u_traj.x
    log = SwitchLog.from_errors(t, u)
    late = t >= t0 + transient
    report = SyncReport("dynamic")
    report.scalars.update(
        eps=fb.eps, h=float(x_traj.meta["h"]), alpha=fb.alpha, nu=fb.nu,
        tail_error=float(err[tail].max()), max_error=float(err.max()),
        final_error=float(err[-1]),
    )
    report.series["u_total_variation"] = np.sum(np.abs(np.diff(u[late], axis=0)), axis=0).tolist()
    report.series["u_sign_changes"] = [int(np.count_nonzero(ts >= t0 + transient)) for ts in log.times]
    report.series["u_chatter_switches"] = chatter_switches(log, after=t0 + transient)
    stride = max(1, len(t) // 2000)
    report.series["t"] = t[::stride].tolist()
    report.series["tracking_error"] = err[::stride].tolist()
    return report
