"""Periodic orbits of autonomous fields: shooting, Floquet data, adjoint.

Orbits are stored on a uniform RK4 grid of ``n_steps`` intervals per period,
which keeps the discrete flow used by Newton, the stored orbit and the
variational equation mutually consistent.
"""
from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Optional

import numpy as np

from .errors import DegenerateMultiplier, NoConvergence, NonFiniteState, TransientEscape
from .numeric import Trajectory, VectorField, as_state, detect_crossing, integrate_adaptive, integrate_fixed

CLOSURE_TOL = 1e-8


@dataclass(frozen=True)
class LimitCycle:
    """A T-periodic orbit ``x0(t)`` sampled on ``[0, T]``.

    ``orbit`` is a cubic-Hermite trajectory on a uniform grid. ``state`` and
    ``velocity`` evaluate the periodic extension.
    """

    field: VectorField
    period: float
    orbit: Trajectory
    meta: dict = dc_field(default_factory=dict, compare=False)

    @property
    def anchor(self) -> np.ndarray:
        return self.orbit.x[0].copy()

    @property
    def closure(self) -> float:
        return float(np.max(np.abs(self.orbit.x[-1] - self.orbit.x[0])))

    @property
    def n_steps(self) -> int:
        return len(self.orbit) - 1

    def state(self, t):
        return self.orbit(np.mod(t, self.period))

    def velocity(self, t):
        x = self.state(t)
        if np.ndim(t) == 0:
            return np.asarray(self.field(0.0, x))
        return np.array([self.field(0.0, xi) for xi in x])

    def samples(self, n: int):
        """``n`` uniform phases on ``[0, T)`` and the orbit states there."""
        tau = self.period * np.arange(n) / n
        return tau, self.state(tau)

    def shifted(self, s: float) -> "LimitCycle":
        """Same orbit re-anchored at phase ``s``: new x0(t) = old x0(t + s)."""
        n = self.n_steps
        tau = self.period * np.arange(n + 1) / n
        xs = self.state(tau + s)
        xs[-1] = xs[0]
        dxs = np.array([self.field(0.0, xi) for xi in xs])
        orbit = Trajectory(tau, xs, dxs)
        meta = dict(self.meta, shift=float(s))
        return LimitCycle(self.field, self.period, orbit, meta)

    def nearest_phase(self, point, n: int = 2048) -> float:
        """Phase on ``[0, T)`` whose orbit point is closest to ``point``."""
        point = np.asarray(point, dtype=float)
        tau, xs = self.samples(n)
        k = int(np.argmin(np.sum((xs - point) ** 2, axis=1)))
        dist = lambda s: float(np.sum((self.state(s) - point) ** 2))
        step = self.period / n
        return float(np.mod(golden_min(dist, tau[k] - step, tau[k] + step, 1e-12), self.period))

    def anchored_near(self, point) -> "LimitCycle":
        return self.shifted(self.nearest_phase(point))


def golden_min(fn, a: float, b: float, tol: float = 1e-8) -> float:
    """Golden-section minimiser of a unimodal ``fn`` on ``[a, b]``."""
    inv_phi = (np.sqrt(5.0) - 1.0) / 2.0
    c = b - inv_phi * (b - a)
    d = a + inv_phi * (b - a)
    fc, fd = fn(c), fn(d)
    while b - a > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - inv_phi * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + inv_phi * (b - a)
            fd = fn(d)
    return 0.5 * (a + b)


def _variational_rhs(field: VectorField):
    n = field.dim
    f, jac = field.func, field.jacobian

    def rhs(t, z):
        x = z[:n]
        Y = z[n:].reshape(n, n)
        out = np.empty_like(z)
        out[:n] = f(t, x)
        out[n:] = (jac(t, x) @ Y).reshape(-1)
        return out

    return rhs


def flow_and_monodromy(field: VectorField, x0, T: float, n_steps: int):
    """RK4 flow map ``x(T)`` and its state Jacobian ``Y(T)`` from ``x0``."""
    n = field.dim
    z0 = np.concatenate([as_state(x0, n), np.eye(n).reshape(-1)])
    traj = integrate_fixed(_variational_rhs(field), z0, 0.0, T, T / n_steps)
    zT = traj.x[-1]
    return zT[:n].copy(), zT[n:].reshape(n, n).copy()


def find_limit_cycle(field: VectorField, seed, T_guess: float, *, n_steps: int = 4096,
                     burn_in: float = 20.0, box: float = 1e6, tol: float = 1e-10,
                     max_iter: int = 50) -> LimitCycle:
    """Locate an attracting periodic orbit by Newton shooting.

    The seed is first relaxed for ``burn_in * T_guess`` time units. The
    relaxed point ``p`` defines the section ``<f(p), x - p> = 0``; the first
    upward crossing after ``0.5 * T_guess`` gives the initial period. Newton
    then solves ``phi_T(x) - x = 0`` on the section for ``(x, T)``.

    Raises
    ------
    TransientEscape
        If the burn-in leaves ``[-box, box]^n`` or blows up.
    NoConvergence
        If Newton fails within ``max_iter`` steps, or the shooting Jacobian
        is singular (non-isolated family of orbits, e.g. a linear centre).
    """
    n = field.dim
    seed = as_state(seed, n)
    try:
        relax = integrate_adaptive(field, seed, 0.0, burn_in * T_guess, rtol=1e-9, atol=1e-12)
    except NonFiniteState as exc:
        raise TransientEscape(str(exc)) from exc
    if np.max(np.abs(relax.x)) > box:
        raise TransientEscape(f"burn-in left the box [-{box:g}, {box:g}]^{n}")
    p = relax.x[-1].copy()
    normal = np.asarray(field(0.0, p), dtype=float)
    if np.linalg.norm(normal) < 1e-12:
        raise NoConvergence("relaxed seed sits on an equilibrium")

    probe = integrate_adaptive(field, p, 0.0, 2.0 * T_guess, rtol=1e-9, atol=1e-12)
    hits = detect_crossing(probe, lambda t, x: (x - p) @ normal, "up", vectorized=True)
    hits = [h for h in hits if h[0] > 0.5 * T_guess]
    if not hits:
        raise NoConvergence("no return to the section within 2*T_guess")
    T = hits[0][0]
    x = p.copy()

    eye = np.eye(n)
    for it in range(max_iter):
        xT, Y = flow_and_monodromy(field, x, T, n_steps)
        res = np.concatenate([xT - x, [normal @ (x - p)]])
        J = np.zeros((n + 1, n + 1))
        J[:n, :n] = Y - eye
        J[:n, n] = field(0.0, xT)
        J[n, :n] = normal
        sv = np.linalg.svd(J, compute_uv=False)
        if sv[-1] <= 1e-8 * sv[0]:
            raise NoConvergence("shooting Jacobian is singular: the orbit is not isolated")
        if np.max(np.abs(res)) <= tol:
            break
        step = np.linalg.solve(J, -res)
        x = x + step[:n]
        T = T + step[n]
        if not T > 0 or not np.all(np.isfinite(x)):
            raise NoConvergence("Newton iterate left the admissible region")
    else:
        raise NoConvergence(f"no convergence after {max_iter} Newton steps")

    orbit = integrate_fixed(field, x, 0.0, T, T / n_steps)
    cycle = LimitCycle(field, float(T), orbit, {"newton_iterations": it, "residual": float(np.max(np.abs(res)))})
    if cycle.closure > CLOSURE_TOL:
        raise NoConvergence(f"closure {cycle.closure:.3g} exceeds {CLOSURE_TOL:g}")
    return cycle


@dataclass(frozen=True)
class FloquetData:
    monodromy: np.ndarray
    multipliers: np.ndarray

    @property
    def trivial_index(self) -> int:
        return int(np.argmin(np.abs(self.multipliers - 1.0)))

    @property
    def trivial(self) -> complex:
        return complex(self.multipliers[self.trivial_index])

    @property
    def nontrivial(self) -> np.ndarray:
        return np.delete(self.multipliers, self.trivial_index)


def monodromy(cycle: LimitCycle) -> FloquetData:
    """Integrate Y' = f'(x0(t)) Y, Y(0) = I over one period."""
    _, Y = flow_and_monodromy(cycle.field, cycle.anchor, cycle.period, cycle.n_steps)
    return FloquetData(Y, np.linalg.eigvals(Y))


@dataclass(frozen=True)
class AdjointCycle:
    """Periodic adjoint solution z*(t) normalised by <z*, x0'> = 1."""

    z: Trajectory
    cycle: LimitCycle

    def __call__(self, t):
        return self.z(np.mod(t, self.cycle.period))

    def normalization(self, t) -> np.ndarray:
        """<z*(t), x0'(t)> at the given phases (should be identically 1)."""
        z = np.atleast_2d(self(t))
        v = np.atleast_2d(self.cycle.velocity(np.atleast_1d(t)))
        return np.sum(z * v, axis=1)

    @property
    def periodicity_error(self) -> float:
        return float(np.max(np.abs(self.z.x[-1] - self.z.x[0])))


def adjoint_cycle(cycle: LimitCycle, floquet: Optional[FloquetData] = None,
                  tol: float = 1e-3) -> AdjointCycle:
    """T-periodic solution of z' = -f'(x0(t))^T z with <z, x0'> = 1.

    The initial value is the left eigenvector of the monodromy for the
    multiplier 1. The adjoint ODE is then integrated backwards over one
    period, the direction in which its non-trivial modes decay.

    Raises
    ------
    DegenerateMultiplier
        If there is not exactly one multiplier within ``tol`` of 1.
    """
    if floquet is None:
        floquet = monodromy(cycle)
    lam, vecs = np.linalg.eig(floquet.monodromy.T)
    near = np.flatnonzero(np.abs(lam - 1.0) < tol)
    if near.size != 1:
        raise DegenerateMultiplier(f"{near.size} multipliers within {tol:g} of 1: {lam}")
    w = np.real(vecs[:, near[0]])
    orbit = cycle.orbit
    w = w / (w @ orbit.dx[0])

    n_steps = cycle.n_steps
    h = cycle.period / n_steps
    jac = cycle.field.jacobian
    JT = [jac(0.0, xk).T for xk in orbit.x]
    mids = orbit(orbit.t[:-1] + 0.5 * h)
    JTm = [jac(0.0, xm).T for xm in mids]
    zs = np.empty_like(orbit.x)
    dzs = np.empty_like(orbit.x)
    z = w.copy()
    zs[-1] = z
    for k in range(n_steps, 0, -1):
        a, m, b = JT[k], JTm[k - 1], JT[k - 1]
        k1 = -(a @ z)
        k2 = -(m @ (z - 0.5 * h * k1))
        k3 = -(m @ (z - 0.5 * h * k2))
        k4 = -(b @ (z - h * k3))
        dzs[k] = k1
        z = z - (h / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)
        zs[k - 1] = z
    dzs[0] = -(JT[0] @ z)
    return AdjointCycle(Trajectory(orbit.t, zs, dzs), cycle)
