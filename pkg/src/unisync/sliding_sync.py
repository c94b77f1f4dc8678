"""Finite-time tracking with the discontinuous feedback ``B sgn(x - y0(t))``.

Two integration modes are offered. ``raw`` evaluates ``sgn`` at every RK4
stage (``sgn(0) = 0``) and reproduces the chattering seen with imperfect
switching. ``filippov`` freezes each sign over a step and, when a component
of the error reaches zero while its drift is dominated by the gain, pins it
to the reference and moves it with the equivalent dynamics ``x_i' = y0_i'``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import DomainExceeded, GainTooSmall
from .numeric import Trajectory, VectorField, as_state, integrate_fixed, _check_finite
from .report import SyncReport

V_TOL = 1e-3
MODES = ("raw", "filippov")


@dataclass(frozen=True)
class StaticFeedback:
    """Diagonal gains ``b_i < 0`` and the integration mode."""

    gains: tuple
    mode: str = "raw"

    def __post_init__(self):
        gains = tuple(float(b) for b in np.atleast_1d(self.gains))
        if not all(b < 0 for b in gains):
            raise ValueError("all static gains must be negative")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        object.__setattr__(self, "gains", gains)

    @property
    def b(self) -> np.ndarray:
        return np.array(self.gains)


def coupled_static_rhs(fb: StaticFeedback, slave: VectorField, y0ref: Trajectory,
                       t: float, x: np.ndarray) -> np.ndarray:
    """``phi(t, x) + B sgn(x - y0(t))`` with the selection ``sgn(0) = 0``."""
    return slave.func(t, x) + fb.b * np.sign(x - y0ref(t))


@dataclass(frozen=True)
class Box:
    lo: np.ndarray
    hi: np.ndarray

    @classmethod
    def of(cls, lo, hi) -> "Box":
        lo, hi = np.asarray(lo, dtype=float), np.asarray(hi, dtype=float)
        if lo.shape != hi.shape or np.any(hi < lo):
            raise ValueError("box needs lo <= hi componentwise")
        return cls(lo, hi)

    def inflate(self, factor: float) -> "Box":
        c, r = 0.5 * (self.lo + self.hi), 0.5 * (self.hi - self.lo)
        return Box(c - factor * r, c + factor * r)

    def hull(self, points: np.ndarray) -> "Box":
        return Box(np.minimum(self.lo, points.min(axis=0)), np.maximum(self.hi, points.max(axis=0)))

    def contains(self, x) -> bool:
        x = np.asarray(x)
        return bool(np.all(x >= self.lo) and np.all(x <= self.hi))

    def corners(self) -> np.ndarray:
        n = self.lo.size
        idx = (np.arange(2 ** n)[:, None] >> np.arange(n)) & 1
        return np.where(idx, self.hi, self.lo)

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return rng.uniform(self.lo, self.hi, size=(size, self.lo.size))


@dataclass(frozen=True)
class SwitchLog:
    """Sign-switch times of each error component."""

    times: tuple

    @classmethod
    def from_errors(cls, t: np.ndarray, e: np.ndarray) -> "SwitchLog":
        out = []
        for i in range(e.shape[1]):
            col = e[:, i]
            nz = np.flatnonzero(col)
            a, b = nz[:-1], nz[1:]
            flip = np.sign(col[a]) != np.sign(col[b])
            a, b = a[flip], b[flip]
            # linear interpolation of the crossing inside each bracket
            w = col[a] / (col[a] - col[b])
            out.append(t[a] + w * (t[b] - t[a]))
        return cls(tuple(out))

    def count(self, i: int, window) -> int:
        lo, hi = window
        ts = self.times[i]
        return int(np.count_nonzero((ts >= lo) & (ts <= hi)))

    def first(self, i: int) -> float:
        ts = self.times[i]
        return float(ts[0]) if ts.size else math.inf


def chattering_rate(log: SwitchLog, window) -> np.ndarray:
    """Sign switches per unit time of each component inside ``window``."""
    lo, hi = window
    if not hi > lo:
        raise ValueError("empty window")
    return np.array([log.count(i, window) / (hi - lo) for i in range(len(log.times))])


@dataclass(frozen=True)
class GainCertificate:
    """Sampled drift bound ``M_I`` and the resulting finite-time guarantee."""

    M_I: float
    mu_I: float
    t_hit_bound: float
    box: Box
    valid: bool

    def bound_for(self, x0, y0_start) -> float:
        """``-V(e(0)) / mu_I`` for a specific initial state."""
        if not self.valid:
            return math.inf
        return float(np.sum(np.abs(np.asarray(x0) - y0_start)) / -self.mu_I)


def certify_gains(fb: StaticFeedback, slave: VectorField, master: VectorField,
                  y0ref: Trajectory, box: Box, n_samples: int = 10_000, *,
                  seed: int = 0, t_span=None, inflation: float = 2.0,
                  safety: float = 1.25, drift_margin: float = 0.0,
                  strict: bool = True) -> GainCertificate:
    """Estimate ``M_I >= |phi_i(t, x) - psi_i(t, y0(t))|`` by seeded sampling.

    States are drawn uniformly from the box hull of ``box`` and the range of
    ``y0``, inflated by ``inflation`` about its centre; times uniformly from
    ``t_span`` (default: the span of ``y0ref``). The maximum is multiplied by
    ``safety``; ``drift_margin`` adds a known disturbance bound. The hitting
    bound reported is the worst case over the corners of ``box``.

    Raises
    ------
    GainTooSmall
        If ``mu_I = max_i(M_I + b_i) >= 0`` and ``strict`` is set.
    """
    if n_samples < 1:
        raise ValueError("need at least one sample")
    rng = np.random.default_rng(seed)
    t_lo, t_hi = t_span if t_span is not None else (y0ref.t0, y0ref.t_end)
    region = box.hull(y0ref.x).inflate(inflation)
    ts = rng.uniform(t_lo, t_hi, size=n_samples)
    xs = region.sample(rng, n_samples)
    ys = y0ref(ts)
    worst = 0.0
    for t, x, y in zip(ts.tolist(), xs, ys):
        drift = np.max(np.abs(slave.func(t, x) - master.func(t, y)))
        if drift > worst:
            worst = float(drift)
    M_I = safety * worst + drift_margin
    mu_I = float(np.max(M_I + fb.b))
    valid = mu_I < 0
    if not valid and strict:
        raise GainTooSmall(f"mu_I = {mu_I:.4g} >= 0: gains must be below -{M_I:.4g}")
    y_start = y0ref(y0ref.t0)
    V0 = max(float(np.sum(np.abs(c - y_start))) for c in box.corners())
    t_hit = V0 / -mu_I if valid else math.inf
    return GainCertificate(M_I, mu_I, t_hit, box, valid)


def _filippov_run(fb: StaticFeedback, slave: VectorField, y0ref: Trajectory,
                  x0: np.ndarray, t0: float, t_end: float, h: float,
                  disturbance: Optional[Callable]) -> Trajectory:
    phi = slave.func
    b = fb.b
    absb = np.abs(b)
    n = x0.size
    steps = max(1, int(math.ceil((t_end - t0) / h - 1e-9)))
    h = (t_end - t0) / steps
    times = (t0 + h * np.arange(steps + 1))
    times[-1] = t_end
    tl = times.tolist()
    drift = phi if disturbance is None else (lambda t, x: phi(t, x) + disturbance(t))

    xs = np.empty((steps + 1, n))
    ks = np.empty((steps + 1, n))
    slide = np.zeros(n, dtype=bool)
    sgn = np.zeros(n)
    x = x0.copy()
    y = y0ref(t0)
    dy = y0ref.deriv(t0)
    e = x - y
    for i in range(n):
        if e[i] != 0:
            sgn[i] = math.copysign(1.0, e[i])
    _update_sliding(x, y, dy, drift(t0, x), absb, slide, sgn)

    def rhs(t, z):
        d = drift(t, z) + b * sgn
        if slide.any():
            d[slide] = y0ref.deriv(t)[slide]
        return d

    half = 0.5 * h
    pins = 0
    for k in range(steps):
        t = tl[k]
        xs[k] = x
        k1 = rhs(t, x)
        k2 = rhs(t + half, x + half * k1)
        k3 = rhs(t + half, x + half * k2)
        k4 = rhs(tl[k + 1], x + h * k3)
        ks[k] = k1
        x = x + (h / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)
        _check_finite(x, tl[k + 1])
        y = y0ref(tl[k + 1])
        e = x - y
        crossed = ~slide & (np.sign(e) != sgn)
        if crossed.any():
            x = x.copy()
            for i in np.flatnonzero(crossed):
                if e[i] == 0 or np.sign(e[i]) != sgn[i]:
                    trial = x.copy()
                    trial[i] = y[i]
                    dy = y0ref.deriv(tl[k + 1])
                    if abs(drift(tl[k + 1], trial)[i] - dy[i]) < absb[i]:
                        x[i] = y[i]
                        slide[i] = True
                        pins += 1
                    else:
                        sgn[i] = np.sign(e[i])
        if slide.any():
            x = x.copy()
            x[slide] = y[slide]
            dy = y0ref.deriv(tl[k + 1])
            _update_sliding(x, y, dy, drift(tl[k + 1], x), absb, slide, sgn)
    xs[steps] = x
    ks[steps] = rhs(t_end, x)
    return Trajectory(times, xs, ks, meta={"method": "rk4-filippov", "h": h, "pins": pins})


def _update_sliding(x, y, dy, fx, absb, slide, sgn):
    """Pin components on the surface whose drift the gain dominates; release others."""
    for i in range(x.size):
        on_surface = slide[i] or x[i] == y[i]
        if not on_surface:
            continue
        gap = fx[i] - dy[i]
        if abs(gap) < absb[i]:
            slide[i] = True
        else:
            slide[i] = False
            sgn[i] = math.copysign(1.0, gap)


def simulate_static(fb: StaticFeedback, slave: VectorField, y0ref: Trajectory, x0,
                    t_end: float, h: float, *, box: Optional[Box] = None,
                    disturbance: Optional[Callable] = None, v_tol: float = V_TOL):
    """Fixed-step simulation of the slave under static feedback.

    Returns ``(trajectory, switch_log, report)``. The report carries the
    Lyapunov history ``V = sum |e_i|``, the first time with ``V <= v_tol``,
    the worst error after that time and per-component switch counts.

    Raises
    ------
    DomainExceeded
        If ``box`` is given and the trajectory leaves its 10x inflation.
    NonFiniteState
        On numerical blow-up.
    """
    n = slave.dim
    x0 = as_state(x0, n)
    if box is not None and not box.contains(x0):
        raise ValueError("initial state lies outside the declared box")
    t0 = y0ref.t0
    if fb.mode == "raw":
        phi = slave.func
        b = fb.b

        def rhs(t, x):
            d = phi(t, x) + b * np.sign(x - y0ref(t))
            return d if disturbance is None else d + disturbance(t)

        traj = integrate_fixed(rhs, x0, t0, t_end, h)
    else:
        traj = _filippov_run(fb, slave, y0ref, x0, t0, t_end, h, disturbance)
    if box is not None:
        outer = box.inflate(10.0)
        if np.any(traj.x < outer.lo) or np.any(traj.x > outer.hi):
            raise DomainExceeded("trajectory left the 10x inflated initial box")

    e = traj.x - y0ref(traj.t)
    V = np.sum(np.abs(e), axis=1)
    log = SwitchLog.from_errors(traj.t, e)
    below = np.flatnonzero(V <= v_tol)
    t_hit = float(traj.t[below[0]]) if below.size else math.inf
    post = np.max(np.abs(e[below[0]:])) if below.size else math.inf
    # V is non-increasing up to this per-step slack once the surfaces are hit
    rises = np.diff(V)
    report = SyncReport("static")
    report.scalars.update(
        mode=fb.mode, h=float(traj.meta["h"]), V0=float(V[0]), hitting_time=t_hit,
        post_hit_max_error=float(post), max_V_increase=float(rises.max(initial=0.0)),
        final_error=float(np.max(np.abs(e[-1]))),
    )
    report.series["switch_count"] = [int(ts.size) for ts in log.times]
    report.series["first_contact"] = [log.first(i) for i in range(n)]
    stride = max(1, len(traj) // 2000)
    report.series["t"] = traj.t[::stride].tolist()
    report.series["lyapunov"] = V[::stride].tolist()
    return traj, log, report


def contact_rates(log: SwitchLog, t_end: float, t0: float = 0.0):
    """Per-component pre- and post-contact switch rates.

    The contact time of component ``i`` is its first sign switch; the
    pre-contact window ``[t0, contact]`` includes that switch, the
    post-contact window is ``(contact, t_end]``.
    """
    pre, post = [], []
    for i, ts in enumerate(log.times):
        if ts.size == 0:
            pre.append(0.0)
            post.append(0.0)
            continue
        tc = float(ts[0])
        pre.append(1.0 / max(tc - t0, np.finfo(float).tiny))
        post.append((ts.size - 1) / (t_end - tc) if t_end > tc else 0.0)
    return np.array(pre), np.array(post)
