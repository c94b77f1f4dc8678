"""Integrators, dense trajectories, event location and symmetric expm.

Everything here works on plain ``numpy`` float arrays. A state vector is a
1-D array of length ``n``; a trajectory stores a strictly increasing time
grid together with states and, when available, the time derivatives that
feed its cubic Hermite interpolant.
"""
from __future__ import annotations

import bisect
import math
from typing import Callable, Optional

import numpy as np

from .errors import NonFiniteState, NotSymmetric, OutOfDomain, StepUnderflow

Rhs = Callable[[float, np.ndarray], np.ndarray]


def as_state(x, dim: Optional[int] = None) -> np.ndarray:
    """Copy ``x`` into a finite 1-D float array, checking its length."""
    arr = np.array(x, dtype=float).reshape(-1)
    if dim is not None and arr.size != dim:
        raise ValueError(f"expected a state of dimension {dim}, got {arr.size}")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteState("state contains NaN or Inf")
    return arr


def fd_jacobian(f: Rhs, t: float, x: np.ndarray, step: float = 1e-6) -> np.ndarray:
    """Central finite-difference Jacobian of ``f(t, .)`` at ``x``."""
    x = np.asarray(x, dtype=float)
    n = x.size
    jac = np.empty((n, n))
    for j in range(n):
        dx = step * max(1.0, abs(x[j]))
        xp = x.copy()
        xm = x.copy()
        xp[j] += dx
        xm[j] -= dx
        jac[:, j] = (np.asarray(f(t, xp)) - np.asarray(f(t, xm))) / (2 * dx)
    return jac


class VectorField:
    """Right-hand side ``x' = f(t, x)`` with optional analytic Jacobian.

    Parameters
    ----------
    dim : int
        State dimension.
    func : callable
        ``func(t, x) -> ndarray`` of shape ``(dim,)``. Must be deterministic.
    jac : callable, optional
        ``jac(t, x) -> ndarray`` of shape ``(dim, dim)``. Central finite
        differences are used when omitted.
    autonomous : bool
        Whether ``func`` ignores ``t``.
    name : str
        Label used in reports.
    """

    def __init__(self, dim: int, func: Rhs, jac: Optional[Callable] = None,
                 *, autonomous: bool = True, name: str = ""):
        self.dim = int(dim)
        self.func = func
        self.jac = jac
        self.autonomous = autonomous
        self.name = name

    def __call__(self, t: float, x: np.ndarray) -> np.ndarray:
        return self.func(t, x)

    def jacobian(self, t: float, x: np.ndarray) -> np.ndarray:
        if self.jac is None:
            return fd_jacobian(self.func, t, x)
        return self.jac(t, x)

    def __repr__(self) -> str:
        return f"VectorField(name={self.name!r}, dim={self.dim}, autonomous={self.autonomous})"


def _rhs_of(field) -> Rhs:
    return getattr(field, "func", field)


class Trajectory:
    """Sampled solution curve with linear or cubic Hermite interpolation.

    ``x[i]`` is the state at ``t[i]``; ``dx[i]`` (optional) its derivative.
    With derivatives the interpolant is the piecewise cubic Hermite curve,
    otherwise piecewise linear. Queries outside ``[t0, t_end]`` raise
    :class:`OutOfDomain`.
    """

    def __init__(self, t, x, dx=None, *, events=None, meta=None):
        t = np.array(t, dtype=float).reshape(-1)
        x = np.array(x, dtype=float)
        if x.ndim == 1:
            x = x.reshape(-1, 1)
        if t.size < 2:
            raise ValueError("a trajectory needs at least two samples")
        if x.shape[0] != t.size:
            raise ValueError("time grid and states disagree in length")
        steps = np.diff(t)
        if not np.all(steps > 0):
            raise ValueError("time grid must be strictly increasing")
        if dx is not None:
            dx = np.array(dx, dtype=float).reshape(x.shape)
            dx.flags.writeable = False
        t.flags.writeable = False
        x.flags.writeable = False
        self.t = t
        self.x = x
        self.dx = dx
        self.events = dict(events or {})
        self.meta = dict(meta or {})
        self._steps = steps
        self._uniform = bool(np.allclose(steps, steps[0], rtol=1e-9, atol=0.0))
        self._slack = 1e-12 * max(1.0, abs(t[0]), abs(t[-1]))
        self._tlist = t.tolist()
        self._h0 = float(steps[0])

    @classmethod
    def from_function(cls, fn, dfn, t0: float, t1: float, n: int) -> "Trajectory":
        """Sample ``fn`` (and its derivative ``dfn``) on ``n`` uniform intervals."""
        ts = np.linspace(t0, t1, n + 1)
        xs = np.array([fn(s) for s in ts])
        dxs = np.array([dfn(s) for s in ts])
        return cls(ts, xs, dxs)

    @property
    def order(self) -> str:
        return "linear" if self.dx is None else "cubic"

    @property
    def dim(self) -> int:
        return self.x.shape[1]

    @property
    def t0(self) -> float:
        return float(self.t[0])

    @property
    def t_end(self) -> float:
        return float(self.t[-1])

    def __len__(self) -> int:
        return self.t.size

    def _locate(self, tq: np.ndarray) -> np.ndarray:
        t = self.t
        if np.any(tq < t[0] - self._slack) or np.any(tq > t[-1] + self._slack):
            raise OutOfDomain(
                f"query outside [{t[0]!r}, {t[-1]!r}]")
        last = t.size - 2
        if self._uniform:
            idx = np.floor((tq - t[0]) / self._steps[0]).astype(int)
            idx = np.clip(idx, 0, last)
            # rounding in the index arithmetic can land one cell off
            idx = np.where((idx < last) & (tq >= t[np.minimum(idx + 1, last + 1)]), idx + 1, idx)
            idx = np.where((idx > 0) & (tq < t[idx]), idx - 1, idx)
            return idx
        return np.clip(np.searchsorted(t, tq, side="right") - 1, 0, last)

    def _index(self, tq: float) -> int:
        t = self._tlist
        if tq < t[0] - self._slack or tq > t[-1] + self._slack:
            raise OutOfDomain(f"query {tq!r} outside [{t[0]!r}, {t[-1]!r}]")
        last = len(t) - 2
        if self._uniform:
            i = min(max(int((tq - t[0]) / self._h0), 0), last)
            if i < last and tq >= t[i + 1]:
                i += 1
            elif i > 0 and tq < t[i]:
                i -= 1
            return i
        return min(max(bisect.bisect_right(t, tq) - 1, 0), last)

    def _eval_scalar(self, tq: float, derivative: bool):
        i = self._index(tq)
        t0 = self._tlist[i]
        h = self._tlist[i + 1] - t0
        s = (tq - t0) / h
        x0, x1 = self.x[i], self.x[i + 1]
        if self.dx is None:
            return (x1 - x0) / h if derivative else x0 + s * (x1 - x0)
        d0, d1 = self.dx[i], self.dx[i + 1]
        s2 = s * s
        if derivative:
            return ((6 * s2 - 6 * s) / h) * (x0 - x1) + (3 * s2 - 4 * s + 1) * d0 + (3 * s2 - 2 * s) * d1
        s3 = s2 * s
        return ((2 * s3 - 3 * s2 + 1) * x0 + ((s3 - 2 * s2 + s) * h) * d0
                + (3 * s2 - 2 * s3) * x1 + ((s3 - s2) * h) * d1)

    def _eval(self, tq, derivative: bool):
        if np.ndim(tq) == 0:
            return self._eval_scalar(float(tq), derivative)
        tq = np.atleast_1d(np.asarray(tq, dtype=float))
        i = self._locate(tq)
        h = self._steps[i][:, None]
        s = ((tq - self.t[i])[:, None]) / h
        x0, x1 = self.x[i], self.x[i + 1]
        if self.dx is None:
            out = (x1 - x0) / h if derivative else x0 + s * (x1 - x0)
        else:
            d0, d1 = self.dx[i], self.dx[i + 1]
            s2 = s * s
            if derivative:
                out = ((6 * s2 - 6 * s) / h * (x0 - x1)
                       + (3 * s2 - 4 * s + 1) * d0 + (3 * s2 - 2 * s) * d1)
            else:
                s3 = s2 * s
                out = ((2 * s3 - 3 * s2 + 1) * x0 + (s3 - 2 * s2 + s) * h * d0
                       + (3 * s2 - 2 * s3) * x1 + (s3 - s2) * h * d1)
        return out

    def __call__(self, tq):
        """Interpolated state(s) at ``tq`` (scalar or array)."""
        return self._eval(tq, derivative=False)

    def deriv(self, tq):
        """Time derivative of the interpolant at ``tq``."""
        return self._eval(tq, derivative=True)

    def window(self, t0: float, t1: float) -> "Trajectory":
        """Grid points inside ``[t0, t1]`` as a new trajectory."""
        mask = (self.t >= t0 - self._slack) & (self.t <= t1 + self._slack)
        return Trajectory(self.t[mask], self.x[mask],
                          None if self.dx is None else self.dx[mask])

    def __repr__(self) -> str:
        return (f"Trajectory(n={len(self)}, dim={self.dim}, "
                f"span=[{self.t0:g}, {self.t_end:g}], order={self.order})")


def _check_finite(x: np.ndarray, t: float) -> None:
    if not np.isfinite(x).all():
        raise NonFiniteState(f"non-finite state at t={t:.6g}")


def integrate_fixed(field, x0, t0: float, t1: float, h: float) -> Trajectory:
    """Classical fourth-order Runge-Kutta on a uniform grid.

    The requested step ``h`` is shrunk, if necessary, so that an integer
    number of equal steps spans ``[t0, t1]`` exactly. Every step is stored,
    together with the field value there (used by the Hermite interpolant).

    Raises
    ------
    NonFiniteState
        If a step produces NaN or Inf.
    """
    if not h > 0:
        raise ValueError("step must be positive")
    if not t1 > t0:
        raise ValueError("need t1 > t0")
    f = _rhs_of(field)
    x = as_state(x0)
    n = max(1, int(math.ceil((t1 - t0) / h - 1e-9)))
    h = (t1 - t0) / n
    ts = (t0 + h * np.arange(n + 1))
    ts[-1] = t1
    times = ts.tolist()
    xs = np.empty((n + 1, x.size))
    ks = np.empty((n + 1, x.size))
    half = 0.5 * h
    sixth = h / 6.0
    for k in range(n):
        t = times[k]
        xs[k] = x
        k1 = f(t, x)
        k2 = f(t + half, x + half * k1)
        k3 = f(t + half, x + half * k2)
        k4 = f(times[k + 1], x + h * k3)
        ks[k] = k1
        x = x + sixth * (k1 + 2.0 * (k2 + k3) + k4)
        _check_finite(x, times[k + 1])
    xs[n] = x
    ks[n] = f(t1, x)
    return Trajectory(ts, xs, ks, meta={"method": "rk4", "h": h, "n_steps": n})


# Dormand-Prince 5(4) tableau
_DP_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_DP_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_DP_E = (71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40)

STEP_FLOOR = 1e-14


def _initial_step(f, t0, x0, f0, rtol, atol, direction_span):
    scale = atol + rtol * np.abs(x0)
    d0 = np.max(np.abs(x0) / scale)
    d1 = np.max(np.abs(f0) / scale)
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, direction_span)
    f1 = f(t0 + h0, x0 + h0 * f0)
    d2 = np.max(np.abs(f1 - f0) / scale) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1 / 5)
    return min(100 * h0, h1, direction_span)


def integrate_adaptive(field, x0, t0: float, t1: float, rtol: float = 1e-8,
                       atol: float = 1e-10, h_max: float = math.inf,
                       max_steps: int = 10_000_000) -> Trajectory:
    """Dormand-Prince 5(4) with local error control in the max norm.

    A step is accepted when every component of the embedded error estimate
    satisfies ``|err_i| <= atol + rtol * max(|x_i|, |x_new_i|)``. Accepted
    steps and their field values are stored for Hermite dense output.
    Step statistics are kept in ``traj.meta``.

    Raises
    ------
    StepUnderflow
        If the controller needs a step below ``1e-14``.
    NonFiniteState
        If an accepted state is not finite.
    """
    if not (rtol > 0 and atol > 0):
        raise ValueError("rtol and atol must be positive")
    if not t1 > t0:
        raise ValueError("need t1 > t0")
    f = _rhs_of(field)
    x = as_state(x0)
    t = float(t0)
    fx = np.asarray(f(t, x), dtype=float)
    span = t1 - t0
    h = min(_initial_step(f, t, x, fx, rtol, atol, span), h_max)
    ts, xs, ks = [t], [x], [fx]
    rejected = 0
    evals = 2
    a, c, e = _DP_A, _DP_C, _DP_E
    k = [None] * 7
    for _ in range(max_steps):
        if t >= t1:
            break
        last = t + h >= t1 - 1e-13 * max(1.0, abs(t1))
        if last:
            h = t1 - t
        while True:
            if h < STEP_FLOOR:
                raise StepUnderflow(f"step {h:.3g} below floor at t={t:.6g}")
            k[0] = fx
            for s in range(1, 7):
                acc = x.copy()
                for j, coef in enumerate(a[s]):
                    if coef:
                        acc += (h * coef) * k[j]
                k[s] = np.asarray(f(t + c[s] * h, acc), dtype=float)
            evals += 6
            x_new = acc  # stage 7 input is the 5th-order solution (FSAL)
            err = h * sum(ei * ki for ei, ki in zip(e, k) if ei)
            scale = atol + rtol * np.maximum(np.abs(x), np.abs(x_new))
            err_norm = float(np.max(np.abs(err) / scale))
            if not math.isfinite(err_norm):
                err_norm = math.inf
            if err_norm <= 1.0:
                break
            rejected += 1
            last = False
            h *= max(0.2, 0.9 * err_norm ** -0.2) if math.isfinite(err_norm) else 0.2
        t_new = t1 if last else t + h
        _check_finite(x_new, t_new)
        t, x, fx = t_new, x_new, k[6]
        ts.append(t)
        xs.append(x)
        ks.append(fx)
        grow = 5.0 if err_norm == 0 else min(5.0, max(0.2, 0.9 * err_norm ** -0.2))
        h = min(h * grow, h_max)
    else:
        raise StepUnderflow(f"exceeded {max_steps} steps before t1")
    return Trajectory(ts, xs, ks, meta={"method": "dopri5", "n_steps": len(ts) - 1,
                                        "n_rejected": rejected, "n_evals": evals,
                                        "rtol": rtol, "atol": atol})


def detect_crossing(traj: Trajectory, scalar_fn, direction: str = "both",
                    tol: float = 1e-10, vectorized: bool = False):
    """Locate zeros of ``scalar_fn(t, x)`` along ``traj``.

    Roots are bracketed by sign changes between grid samples and refined by
    bisection on the interpolated trajectory until the bracket is narrower
    than ``tol``. A stretch of exact zeros on the grid counts as one root at
    its first sample, and only if the sign differs on either side.
    ``direction`` is ``"up"`` (negative to positive), ``"down"`` or
    ``"both"``. Returns a list of ``(time, state)`` pairs.
    """
    if direction not in ("up", "down", "both"):
        raise ValueError("direction must be 'up', 'down' or 'both'")
    if vectorized:
        g = np.asarray(scalar_fn(traj.t, traj.x), dtype=float)
    else:
        g = np.array([scalar_fn(ti, xi) for ti, xi in zip(traj.t, traj.x)], dtype=float)
    sgn = np.sign(g)
    nz = np.flatnonzero(sgn)
    if nz.size < 2:
        return []
    a_idx, b_idx = nz[:-1], nz[1:]
    flips = sgn[a_idx] != sgn[b_idx]
    out = []

    def h(s):
        return float(scalar_fn(s, traj(s)))

    for a, b in zip(a_idx[flips], b_idx[flips]):
        up = sgn[a] < 0
        if (direction == "up" and not up) or (direction == "down" and up):
            continue
        if b > a + 1:
            root = float(traj.t[a + 1])
            out.append((root, traj.x[a + 1].copy()))
            continue
        lo, hi = float(traj.t[a]), float(traj.t[b])
        glo = g[a]
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            gm = h(mid)
            if gm == 0.0:
                lo = hi = mid
                break
            if (gm < 0) == (glo < 0):
                lo, glo = mid, gm
            else:
                hi = mid
            if hi - lo <= tol and abs(gm) <= 1e-8:
                break
            if hi - lo <= 4 * np.spacing(max(abs(lo), abs(hi), 1e-300)):
                break
        root = lo if abs(h(lo)) <= abs(h(hi)) else hi
        out.append((root, np.asarray(traj(root), dtype=float)))
    return out


def check_symmetric(C, tol: float = 1e-12) -> np.ndarray:
    """Return ``C`` as a float array, or raise :class:`NotSymmetric`."""
    C = np.array(C, dtype=float)
    if C.ndim != 2 or C.shape[0] != C.shape[1]:
        raise NotSymmetric("matrix must be square")
    if np.max(np.abs(C - C.T), initial=0.0) > tol:
        raise NotSymmetric("matrix is not symmetric within 1e-12")
    return C


class SymExp:
    """Cached ``t -> exp(C t)`` for a symmetric matrix ``C``.

    The eigendecomposition ``C = Q diag(lam) Q^T`` is computed once; diagonal
    input takes an exact elementwise path.
    """

    def __init__(self, C):
        C = check_symmetric(C)
        self.C = C
        self.diagonal = bool(np.count_nonzero(C - np.diag(np.diag(C))) == 0)
        if self.diagonal:
            self.eigvals = np.diag(C).copy()
            self.Q = np.eye(C.shape[0])
        else:
            C = 0.5 * (C + C.T)
            self.eigvals, self.Q = np.linalg.eigh(C)

    def __call__(self, t: float) -> np.ndarray:
        w = np.exp(self.eigvals * t)
        if self.diagonal:
            return np.diag(w)
        return (self.Q * w) @ self.Q.T

    def apply(self, t: float, v: np.ndarray) -> np.ndarray:
        """``exp(C t) @ v`` without forming the matrix."""
        w = np.exp(self.eigvals * t)
        if self.diagonal:
            return w * v
        return self.Q @ (w * (self.Q.T @ v))


def sym_expm(C, t: float) -> np.ndarray:
    """Matrix exponential ``exp(C t)`` of a symmetric matrix via eigh."""
    return SymExp(C)(t)
