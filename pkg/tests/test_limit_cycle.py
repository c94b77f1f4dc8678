import math

import numpy as np
import pytest
from scipy.integrate import quad

from unisync.errors import DegenerateMultiplier, NoConvergence, TransientEscape
from unisync.limit_cycle import adjoint_cycle, find_limit_cycle, golden_min, monodromy
from unisync.models import fhn, harmonic_oscillator, hopf_normal_form, van_der_pol
from unisync.numeric import VectorField

REFERENCE_POINT = np.array([-0.7481, 1.5164])


def test_fhn_period(fhn_cycle):
    assert abs(fhn_cycle.period - 9.83) <= 0.05


def test_fhn_cycle_passes_near_reference_point(fhn_cycle):
    s = fhn_cycle.nearest_phase(REFERENCE_POINT)
    assert np.linalg.norm(fhn_cycle.state(s) - REFERENCE_POINT) < 5e-3


def test_fhn_closure(fhn_cycle):
    assert fhn_cycle.closure <= 1e-10


def test_van_der_pol_period():
    cyc = find_limit_cycle(van_der_pol(1.0), (2.0, 0.0), 6.6)
    assert abs(cyc.period - 6.663) <= 0.01


def test_van_der_pol_period_from_section_hits():
    # independent oracle: spacing of upward x2 = 0 crossings on a long run
    from scipy.integrate import solve_ivp
    f = van_der_pol(1.0)
    sol = solve_ivp(f.func, (0, 200), [2.0, 0.0], rtol=1e-11, atol=1e-12, dense_output=True,
                    events=lambda t, x: x[1])
    hits = [t for t, x in zip(sol.t_events[0], sol.y_events[0]) if x[0] < 0 and t > 100]
    period = np.mean(np.diff(hits))
    cyc = find_limit_cycle(f, (2.0, 0.0), 6.6)
    assert abs(cyc.period - period) < 1e-6


def test_harmonic_oscillator_rejected():
    with pytest.raises(NoConvergence):
        find_limit_cycle(harmonic_oscillator(), (1.0, 0.0), 6.3)


def test_equilibrium_seed_rejected():
    with pytest.raises(NoConvergence):
        find_limit_cycle(VectorField(2, lambda t, x: -x), (1.0, 1.0), 1.0)


def test_escaping_burn_in():
    with pytest.raises(TransientEscape):
        find_limit_cycle(VectorField(2, lambda t, x: x), (1.0, 1.0), 1.0, box=1e3)


def test_restart_from_orbit_point_gives_same_period(fhn_cycle):
    again = find_limit_cycle(fhn(), fhn_cycle.state(0.37 * fhn_cycle.period), fhn_cycle.period)
    assert abs(again.period - fhn_cycle.period) <= 1e-6 * fhn_cycle.period


def test_periodic_extension(fhn_cycle):
    T = fhn_cycle.period
    assert np.allclose(fhn_cycle.state(1.3), fhn_cycle.state(1.3 + 3 * T), atol=1e-12)


def test_shifted_cycle(fhn_cycle):
    sh = fhn_cycle.shifted(2.0)
    assert np.allclose(sh.state(0.5), fhn_cycle.state(2.5), atol=1e-9)


def test_golden_min():
    assert golden_min(lambda x: (x - 0.3) ** 2, -1, 2, 1e-10) == pytest.approx(0.3, abs=1e-8)


# --- Floquet data --------------------------------------------------------------

def test_fhn_multipliers(fhn_floquet):
    assert abs(fhn_floquet.trivial - 1.0) <= 1e-3
    other = fhn_floquet.nontrivial
    assert other.size == 1 and abs(other[0].imag) < 1e-12 and abs(other[0]) < 1


def test_hopf_multipliers(hopf_cycle):
    fl = monodromy(hopf_cycle)
    assert abs(hopf_cycle.period - 2 * math.pi) < 1e-9
    assert abs(fl.trivial - 1) < 1e-9
    assert abs(fl.nontrivial[0] - math.exp(-2 * hopf_cycle.period)) < 1e-8


def test_liouville(fhn_cycle, fhn_floquet):
    f = fhn_cycle.field
    trace = lambda t: float(np.trace(f.jacobian(0.0, fhn_cycle.state(t))))
    integral, _ = quad(trace, 0.0, fhn_cycle.period, limit=400, epsabs=1e-12)
    assert abs(np.linalg.det(fhn_floquet.monodromy) - math.exp(integral)) <= 1e-6


def test_multipliers_independent_of_anchor(fhn_cycle, fhn_floquet):
    other = monodromy(fhn_cycle.shifted(0.41 * fhn_cycle.period))
    a = np.sort(np.abs(fhn_floquet.multipliers))
    b = np.sort(np.abs(other.multipliers))
    assert np.allclose(a, b, rtol=0, atol=1e-4)


# --- adjoint ---------------------------------------------------------------------

def test_adjoint_normalization(fhn_cycle, fhn_adjoint):
    ts = np.linspace(0.0, fhn_cycle.period, 100, endpoint=False)
    assert np.max(np.abs(fhn_adjoint.normalization(ts) - 1.0)) <= 1e-5


def test_adjoint_normalization_everywhere(fhn_cycle, fhn_adjoint):
    ts = np.random.default_rng(3).uniform(0.0, fhn_cycle.period, 500)
    assert np.max(np.abs(fhn_adjoint.normalization(ts) - 1.0)) <= 1e-5


def test_adjoint_periodic(fhn_adjoint):
    assert fhn_adjoint.periodicity_error <= 1e-6


def test_adjoint_of_circle(hopf_cycle):
    adj = adjoint_cycle(hopf_cycle)
    ts = np.linspace(0.0, hopf_cycle.period, 50)
    v = hopf_cycle.velocity(ts)
    expected = v / np.sum(v * v, axis=1)[:, None]
    assert np.allclose(adj(ts), expected, atol=1e-8)


def test_adjoint_solves_adjoint_equation(fhn_cycle, fhn_adjoint):
    # z' = -J^T z checked against the stored derivative data by central differences
    t, h = 3.1, 1e-4
    dz = (fhn_adjoint(t + h) - fhn_adjoint(t - h)) / (2 * h)
    J = fhn_cycle.field.jacobian(0.0, fhn_cycle.state(t))
    assert np.allclose(dz, -J.T @ fhn_adjoint(t), atol=1e-5)


def test_degenerate_multiplier_detected(fhn_cycle, fhn_floquet):
    from unisync.limit_cycle import FloquetData
    fake = FloquetData(np.eye(2), np.ones(2))
    with pytest.raises(DegenerateMultiplier):
        adjoint_cycle(fhn_cycle, fake)
