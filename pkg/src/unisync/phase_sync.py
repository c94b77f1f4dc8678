"""Phase locking of a slave oscillator to a master cycle of equal period.

The slave is driven by ``x' = (1 + eps*(|x - y0(t)|^2 - Dmin/T - delta)) f(x)``,
which only rescales its own vector field. Averaging this over one period
gives the phase-distance functional below, whose minimiser is the phase
the controller steers toward.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NonUniqueMin, PeriodMismatch
from .limit_cycle import LimitCycle, golden_min
from .numeric import Trajectory, as_state, integrate_adaptive
from .report import SyncReport

PERIOD_RTOL = 1e-6
N_QUAD = 4096


def _check_periods(slave: LimitCycle, master: LimitCycle) -> float:
    T = master.period
    if abs(slave.period - T) > PERIOD_RTOL * T:
        raise PeriodMismatch(f"periods differ: slave {slave.period!r}, master {T!r}")
    return T


class _DistanceKernel:
    """Precomputed master samples for repeated D(s) evaluations."""

    def __init__(self, slave: LimitCycle, master: LimitCycle, n: int = N_QUAD):
        self.T = _check_periods(slave, master)
        self.slave = slave
        self.tau, self.y = master.samples(n)

    def __call__(self, s: float) -> float:
        x = self.slave.state(self.tau + s)
        # periodic integrand: the trapezoid rule is the plain mean times T
        return float(np.mean(np.sum((x - self.y) ** 2, axis=1)) * self.T)


def distance_integral(slave: LimitCycle, master: LimitCycle, s: float, n: int = N_QUAD) -> float:
    """``D(s) = int_0^T |x0(tau + s) - y0(tau)|^2 dtau`` by the periodic trapezoid rule."""
    return _DistanceKernel(slave, master, n)(s)


def theta_star(slave: LimitCycle, master: LimitCycle, n_grid: int = 512,
               tol: float = 1e-8):
    """Phase shift minimising ``D`` and the minimum value.

    Returns ``(theta0, Dmin)`` with ``theta0`` in ``[0, T)``. A 512-point scan
    brackets every local minimum, each of which is refined by golden
    section.

    Raises
    ------
    NonUniqueMin
        If two distinct local minima have values within ``1e-6 * max(1, max D)``.
    """
    D = _DistanceKernel(slave, master)
    T = D.T
    grid = T * np.arange(n_grid) / n_grid
    vals = np.array([D(s) for s in grid])
    step = T / n_grid
    local = np.flatnonzero((vals <= np.roll(vals, 1)) & (vals <= np.roll(vals, -1)))
    minima = []
    for k in local:
        s = golden_min(D, grid[k] - step, grid[k] + step, tol)
        v = D(s)
        if v > vals[k]:
            s, v = grid[k], vals[k]
        minima.append((v, float(np.mod(s, T))))
    minima.sort()
    # merge duplicates produced by flat neighbouring grid points
    distinct = [minima[0]]
    for v, s in minima[1:]:
        if all(_circ_dist(s, s2, T) > 2 * step for _, s2 in distinct):
            distinct.append((v, s))
    scale = max(1.0, float(vals.max()))
    if len(distinct) > 1 and distinct[1][0] - distinct[0][0] <= 1e-6 * scale:
        raise NonUniqueMin(
            f"minima at {distinct[0][1]:.6g} and {distinct[1][1]:.6g} agree to within 1e-6")
    v, s = distinct[0]
    return s, v


def _circ_dist(a: float, b: float, T: float) -> float:
    d = np.mod(a - b, T)
    return float(min(d, T - d))


@dataclass(frozen=True)
class MalkinProfile:
    """``F_delta`` tabulated over one period, with its zeros.

    ``roots`` lists ``(theta, slope_sign)``. ``selected`` is the zero with
    positive slope closest to ``theta0`` (``None`` when there is none).
    """

    theta: np.ndarray
    values: np.ndarray
    roots: list
    theta0: float
    Dmin: float
    delta: float
    period: float

    @property
    def selected(self):
        up = [r for r, sgn in self.roots if sgn > 0]
        if not up:
            return None
        return min(up, key=lambda r: _circ_dist(r, self.theta0, self.period))

    @property
    def stable_candidate(self):
        """Zero with negative slope closest to ``theta0``."""
        down = [r for r, sgn in self.roots if sgn < 0]
        if not down:
            return None
        return min(down, key=lambda r: _circ_dist(r, self.theta0, self.period))

    @property
    def periodicity_error(self) -> float:
        return float(abs(self.values[-1] - self.values[0]))


def malkin_F(slave: LimitCycle, master: LimitCycle, delta: float,
             n_grid: int = 512, theta_star_result=None) -> MalkinProfile:
    """Tabulate ``F_delta(theta) = D(theta) - Dmin - T*delta`` and find its zeros.

    Zeros are bracketed on the grid and bisected to 1e-12; the slope sign at
    each zero comes from a centred difference. For ``delta == 0`` the only
    zero is the tangency at ``theta0``, reported with slope sign 0.
    """
    if delta < 0:
        raise ValueError("delta must be non-negative")
    D = _DistanceKernel(slave, master)
    T = D.T
    theta0, Dmin = theta_star_result or theta_star(slave, master)
    F = lambda th: D(th) - Dmin - T * delta
    theta = T * np.arange(n_grid + 1) / n_grid
    vals = np.array([F(th) for th in theta])
    roots = []
    if delta == 0:
        roots.append((theta0, 0))
    else:
        for k in range(n_grid):
            a, b = theta[k], theta[k + 1]
            fa, fb = vals[k], vals[k + 1]
            if fa == 0.0:
                r = a
            elif fa * fb < 0:
                while b - a > 1e-12:
                    m = 0.5 * (a + b)
                    fm = F(m)
                    if (fm < 0) == (fa < 0):
                        a, fa = m, fm
                    else:
                        b = m
                r = 0.5 * (a + b)
            else:
                continue
            hstep = 1e-5 * T
            slope = (F(r + hstep) - F(r - hstep)) / (2 * hstep)
            roots.append((float(np.mod(r, T)), int(np.sign(slope))))
    return MalkinProfile(theta, vals, roots, theta0, Dmin, delta, T)


@dataclass(frozen=True)
class PhaseCoupling:
    """Controller parameters plus the precomputed distance minimum."""

    eps: float
    delta: float
    master: LimitCycle
    slave: LimitCycle
    Dmin: float

    def __post_init__(self):
        if not self.eps >= 0 or not self.delta >= 0:
            raise ValueError("eps and delta must be non-negative")
        _check_periods(self.slave, self.master)

    @classmethod
    def from_cycles(cls, slave: LimitCycle, master: LimitCycle, eps: float, delta: float):
        _, Dmin = theta_star(slave, master)
        return cls(eps, delta, master, slave, Dmin)

    @property
    def period(self) -> float:
        return self.master.period

    @property
    def offset(self) -> float:
        # the feedback subtracts the period-averaged minimum, Dmin / T
        return self.Dmin / self.period + self.delta

    def rhs(self, t: float, x: np.ndarray) -> np.ndarray:
        return coupled_phase_rhs(self, t, x)


def coupled_phase_rhs(pc: PhaseCoupling, t: float, x: np.ndarray) -> np.ndarray:
    fx = pc.slave.field.func(t, x)
    e = x - pc.master.state(t)
    return (1.0 + pc.eps * (e @ e - pc.offset)) * fx


def phase_lag(traj: Trajectory, master: LimitCycle, t_start: float, n: int = 512) -> float:
    """Shift ``s`` in ``(-T/2, T/2]`` best aligning ``x(tau)`` with ``y0(tau + s)``.

    The one-period L2 misfit is scanned over ``n`` cyclic shifts and the
    minimum refined by a parabola through the three best neighbours.
    """
    T = master.period
    tau = T * np.arange(n) / n
    x = traj(t_start + tau)
    y = master.state(t_start + tau)
    # cost[m] = sum_j |x_j - y_{j+m}|^2 via circular cross-correlation
    corr = np.zeros(n)
    for i in range(x.shape[1]):
        corr += np.real(np.fft.ifft(np.conj(np.fft.fft(x[:, i])) * np.fft.fft(y[:, i])))
    cost = np.sum(x ** 2) + np.sum(y ** 2) - 2.0 * corr
    m = int(np.argmin(cost))
    c0, cm, cp = cost[m], cost[m - 1], cost[(m + 1) % n]
    denom = cm - 2 * c0 + cp
    frac = 0.5 * (cm - cp) / denom if denom > 0 else 0.0
    s = (m + frac) * T / n
    s = np.mod(s + 0.5 * T, T) - 0.5 * T
    return float(s if s != -0.5 * T else 0.5 * T)


def simulate_phase_sync(pc: PhaseCoupling, x_init, n_periods: int, *,
                        rtol: float = 1e-9, atol: float = 1e-11):
    """Integrate the coupled slave for ``n_periods`` master periods.

    Returns the trajectory and a report with the phase lag of every period
    window ``[kT, (k+1)T]`` and the residual
    ``|int |x - y0|^2 - Dmin|`` over the final window.
    """
    T = pc.period
    x_init = as_state(x_init, pc.slave.field.dim)
    traj = integrate_adaptive(pc.rhs, x_init, 0.0, n_periods * T, rtol=rtol, atol=atol,
                              h_max=T / 50)
    lags = [phase_lag(traj, pc.master, k * T) for k in range(n_periods)]
    tau = T * np.arange(N_QUAD) / N_QUAD + (n_periods - 1) * T
    err = traj(tau) - pc.master.state(tau)
    final_dist = float(np.mean(np.sum(err ** 2, axis=1)) * T)
    report = SyncReport("phase")
    report.scalars.update(
        period=T, eps=pc.eps, delta=pc.delta, Dmin=pc.Dmin,
        lag_first=abs(lags[1]) if n_periods > 1 else abs(lags[0]),
        lag_final=abs(lags[-1]),
        prop_residual=abs(final_dist - pc.Dmin),
    )
    report.series["phase_lag"] = lags
    return traj, report
