"""Builtin vector fields.

``fhn``, ``chaotic_cnn`` and ``forced_master_nn`` are the three systems of
the reproduction scenarios; the remaining constructors are small reference
problems used to exercise the cycle and integrator machinery.
"""
from __future__ import annotations

import math

import numpy as np

from .numeric import Trajectory, VectorField


def fhn() -> VectorField:
    """FitzHugh-Nagumo type oscillator with an attracting cycle (T ~ 9.83).

    x1' = 2 (x1 - x1^3/3 + x2 - 9/20)
    x2' = -1/2 (x1 + 4/5 x2 - 7/10)
    """
    def func(t, x):
        x1, x2 = x
        return np.array([2.0 * (x1 - x1 ** 3 / 3.0 + x2 - 9.0 / 20.0),
                         -0.5 * (x1 + 0.8 * x2 - 0.7)])

    def jac(t, x):
        return np.array([[2.0 * (1.0 - x[0] ** 2), 2.0],
                         [-0.5, -0.4]])

    return VectorField(2, func, jac, name="fhn")


CNN_WEIGHTS = np.array([[1.25, -3.2, -3.2],
                        [-3.2, 1.1, -4.4],
                        [-3.2, 4.4, 1.0]])


def saturation(s):
    """Piecewise-linear activation (|s+1| - |s-1|)/2."""
    # np.clip carries noticeable per-call overhead on 3-vectors
    return np.minimum(np.maximum(s, -1.0), 1.0)


def chaotic_cnn() -> VectorField:
    """Three-cell neural network x' = -x + W f(x) with a chaotic attractor.

    The activation has kinks at |x_i| = 1; the Jacobian uses the interior
    slope 1 there.
    """
    W = CNN_WEIGHTS

    def func(t, x):
        return W @ saturation(x) - x

    def jac(t, x):
        slope = (np.abs(np.asarray(x)) <= 1.0).astype(float)
        return W * slope - np.eye(3)

    return VectorField(3, func, jac, name="chaotic_cnn")


MASTER_DECAY = np.array([10.0 / 7.0, 1.0, 0.1])
MASTER_WEIGHTS = np.array([[-20.0 / 7.0, 10.0, 0.0],
                           [1.0, -30.0, 1.0],
                           [0.0, 100.0 / 7.0, -1.9]])


def master_input(t: float) -> np.ndarray:
    """Periodic forcing I(t) that makes (cos t, sin t, -cos t) a solution."""
    c, s = math.cos(t), math.sin(t)
    return np.array([10.0 / 7.0 * c + 20.0 / 7.0 * c ** 3 - 11.0 * s,
                     31.0 * s + 2.0 * c - c ** 3,
                     -93.0 / 7.0 * s - 2.0 * c])


def forced_master_nn() -> VectorField:
    """Forced master network y' = -D y + W sigma(y) + I(t), sigma = (y1^3, y2, y3)."""
    D = MASTER_DECAY
    W = MASTER_WEIGHTS

    def func(t, y):
        sig = np.array([y[0] ** 3, y[1], y[2]])
        return W @ sig - D * y + master_input(t)

    def jac(t, y):
        return W * np.array([3.0 * y[0] ** 2, 1.0, 1.0]) - np.diag(D)

    return VectorField(3, func, jac, autonomous=False, name="forced_master_nn")


def master_orbit(t: float) -> np.ndarray:
    """The 2*pi-periodic reference y0(t) = (cos t, sin t, -cos t)."""
    c, s = math.cos(t), math.sin(t)
    return np.array([c, s, -c])


def master_reference(t_end: float, dt: float = 1e-3, t0: float = 0.0) -> Trajectory:
    """Sampled reference y0 on ``[t0, t_end]``.

    Derivatives stored for the Hermite interpolant are the master field
    evaluated on the reference, so the slope data come from the model rather
    than from differencing.
    """
    field = forced_master_nn()
    n = max(2, int(math.ceil((t_end - t0) / dt)))
    ts = np.linspace(t0, t_end, n + 1)
    c, s = np.cos(ts), np.sin(ts)
    ys = np.column_stack([c, s, -c])
    dys = np.array([field.func(ti, yi) for ti, yi in zip(ts, ys)])
    return Trajectory(ts, ys, dys)


def van_der_pol(mu: float = 1.0) -> VectorField:
    def func(t, x):
        return np.array([x[1], mu * (1.0 - x[0] ** 2) * x[1] - x[0]])

    def jac(t, x):
        return np.array([[0.0, 1.0],
                         [-2.0 * mu * x[0] * x[1] - 1.0, mu * (1.0 - x[0] ** 2)]])

    return VectorField(2, func, jac, name=f"van_der_pol(mu={mu:g})")


def hopf_normal_form() -> VectorField:
    """r' = r (1 - r^2), phase' = 1: the unit circle is a 2*pi cycle."""
    def func(t, x):
        g = 1.0 - (x[0] * x[0] + x[1] * x[1])
        return np.array([g * x[0] - x[1], g * x[1] + x[0]])

    def jac(t, x):
        x1, x2 = x
        g = 1.0 - (x1 * x1 + x2 * x2)
        return np.array([[g - 2 * x1 * x1, -1.0 - 2 * x1 * x2],
                         [1.0 - 2 * x1 * x2, g - 2 * x2 * x2]])

    return VectorField(2, func, jac, name="hopf_normal_form")


def harmonic_oscillator() -> VectorField:
    def func(t, x):
        return np.array([x[1], -x[0]])

    def jac(t, x):
        return np.array([[0.0, 1.0], [-1.0, 0.0]])

    return VectorField(2, func, jac, name="harmonic_oscillator")


CATALOG = {
    "fhn": fhn,
    "chaotic_cnn": chaotic_cnn,
    "forced_master_nn": forced_master_nn,
    "van_der_pol": van_der_pol,
    "hopf_normal_form": hopf_normal_form,
    "harmonic_oscillator": harmonic_oscillator,
}


def get_model(name: str) -> VectorField:
    try:
        return CATALOG[name]()
    except KeyError:
        raise KeyError(f"unknown model {name!r}; known: {sorted(CATALOG)}") from None
