import math

import numpy as np
import pytest

from unisync.errors import DomainExceeded, GainTooSmall
from unisync.models import chaotic_cnn, forced_master_nn, master_reference
from unisync.numeric import Trajectory, VectorField
from unisync.sliding_sync import (Box, StaticFeedback, SwitchLog, certify_gains, chattering_rate,
                                  contact_rates, coupled_static_rhs, simulate_static)

X0 = np.array([-1.0, 1.0, 1.0])
CUBE = Box.of([-2.0] * 3, [2.0] * 3)


@pytest.fixture(scope="module")
def ref():
    return master_reference(4 * math.pi)


@pytest.fixture(scope="module")
def slave():
    return chaotic_cnn()


@pytest.fixture(scope="module")
def master():
    return forced_master_nn()


def flat_reference(dim, t_end=5.0):
    return Trajectory([0.0, t_end], np.zeros((2, dim)), np.zeros((2, dim)))


# --- feedback law -----------------------------------------------------------------

def test_gains_must_be_negative():
    with pytest.raises(ValueError):
        StaticFeedback((-1.0, 0.0, -1.0))
    with pytest.raises(ValueError):
        StaticFeedback((-1.0,), mode="smooth")


def test_on_reference_returns_drift(ref, slave):
    fb = StaticFeedback((-3.5,) * 3)
    y = ref(0.7)
    assert np.array_equal(coupled_static_rhs(fb, slave, ref, 0.7, y), slave.func(0.7, y))


def test_initial_coupling_term(ref, slave):
    fb = StaticFeedback((-3.5,) * 3)
    e = X0 - ref(0.0)
    assert np.array_equal(e, [-2.0, 1.0, 2.0])
    coupling = coupled_static_rhs(fb, slave, ref, 0.0, X0) - slave.func(0.0, X0)
    assert np.allclose(coupling, [3.5, -3.5, -3.5], atol=0)


def test_vanishing_gain_recovers_slave(ref, slave):
    fb = StaticFeedback((-1e-300,) * 3)
    assert np.allclose(coupled_static_rhs(fb, slave, ref, 0.3, X0), slave.func(0.3, X0), atol=1e-290)


# --- box ------------------------------------------------------------------------

def test_box_helpers():
    b = Box.of([0, 0], [1, 2])
    assert b.contains([0.5, 2.0]) and not b.contains([1.5, 0])
    assert len(b.corners()) == 4
    big = b.inflate(2.0)
    assert np.allclose(big.lo, [-0.5, -1.0]) and np.allclose(big.hi, [1.5, 3.0])
    with pytest.raises(ValueError):
        Box.of([1.0], [0.0])


# --- certificate -------------------------------------------------------------------

def test_drift_free_certificate():
    zero = VectorField(2, lambda t, x: np.zeros(2))
    fb = StaticFeedback((-2.0, -3.0))
    box = Box.of([-1, -1], [1, 1])
    ref0 = flat_reference(2)
    cert = certify_gains(fb, zero, zero, ref0, box, 100)
    assert cert.M_I == 0 and cert.mu_I == -2.0
    assert cert.bound_for([1.0, -1.0], np.zeros(2)) == pytest.approx(2.0 / 2.0)
    assert cert.t_hit_bound == pytest.approx(2.0 / 2.0)


def test_scalar_certificate_and_hit():
    # |sin x - cos t| <= 2 everywhere, so 1.25 * M <= 2.5 and mu <= -1
    slave = VectorField(1, lambda t, x: np.sin(x))
    master = VectorField(1, lambda t, y: np.array([math.cos(t)]), autonomous=False)
    ref1 = Trajectory.from_function(lambda t: np.array([math.sin(t)]),
                                    lambda t: np.array([math.cos(t)]), 0.0, 10.0, 10000)
    fb = StaticFeedback((-3.5,), mode="filippov")
    box = Box.of([-2.0], [2.0])
    cert = certify_gains(fb, slave, master, ref1, box, 5000)
    assert cert.valid and cert.mu_I <= -1.0
    x0 = np.array([1.7])
    bound = cert.bound_for(x0, ref1(0.0))
    assert bound <= 1.7 / 1.0
    _, _, rep = simulate_static(fb, slave, ref1, x0, 10.0, 1e-3)
    assert rep.scalars["hitting_time"] <= bound
    assert rep.scalars["post_hit_max_error"] <= 1e-6


def test_small_gains_fail_certification(ref, slave, master):
    fb = StaticFeedback((-3.5,) * 3)
    with pytest.raises(GainTooSmall):
        certify_gains(fb, slave, master, ref, CUBE, 2000)
    cert = certify_gains(fb, slave, master, ref, CUBE, 2000, strict=False)
    assert not cert.valid and math.isinf(cert.bound_for(X0, ref(0.0)))


def test_certificate_is_seeded(ref, slave, master):
    fb = StaticFeedback((-25.0,) * 3)
    a = certify_gains(fb, slave, master, ref, CUBE, 500, seed=7)
    b = certify_gains(fb, slave, master, ref, CUBE, 500, seed=7)
    assert a.M_I == b.M_I


def test_drift_margin_inflates_bound(ref, slave, master):
    fb = StaticFeedback((-25.0,) * 3)
    a = certify_gains(fb, slave, master, ref, CUBE, 500)
    b = certify_gains(fb, slave, master, ref, CUBE, 500, drift_margin=0.2)
    assert b.M_I == pytest.approx(a.M_I + 0.2)


# --- simulations ------------------------------------------------------------------

@pytest.fixture(scope="module")
def certified_run(ref, slave, master):
    fb = StaticFeedback((-25.0,) * 3, mode="filippov")
    cert = certify_gains(fb, slave, master, ref, CUBE, 10_000)
    traj, log, rep = simulate_static(fb, slave, ref, X0, 4 * math.pi, 1e-3, box=CUBE)
    return fb, cert, traj, log, rep


def test_start_on_reference_stays(ref, slave):
    fb = StaticFeedback((-25.0,) * 3, mode="filippov")
    _, _, rep = simulate_static(fb, slave, ref, ref(0.0), 2.0, 1e-3)
    assert rep.scalars["hitting_time"] == 0.0
    assert rep.scalars["post_hit_max_error"] == 0.0


def test_certified_hit_within_bound(certified_run, ref):
    _, cert, _, _, rep = certified_run
    assert cert.valid
    assert rep.scalars["hitting_time"] <= cert.bound_for(X0, ref(0.0))


def test_certified_stays_on_reference(certified_run):
    *_, rep = certified_run
    assert rep.scalars["post_hit_max_error"] <= 1e-6


def test_lyapunov_non_increasing(certified_run):
    *_, rep = certified_run
    assert rep.scalars["max_V_increase"] <= 1e-6


def test_no_switches_after_contact_in_filippov_mode(certified_run):
    *_, log, rep = certified_run
    pre, post = contact_rates(log, 4 * math.pi)
    assert np.all(post == 0)


def test_raw_and_filippov_agree_before_contact(ref, slave):
    raw = StaticFeedback((-25.0,) * 3, mode="raw")
    fil = StaticFeedback((-25.0,) * 3, mode="filippov")
    h = 1e-3
    tr, log, _ = simulate_static(raw, slave, ref, X0, 0.5, h)
    tf, _, _ = simulate_static(fil, slave, ref, X0, 0.5, h)
    first = min(log.first(i) for i in range(3))
    mask = tr.t < first - 2 * h
    assert mask.sum() > 5
    assert np.max(np.abs(tr.x[mask] - tf.x[mask])) <= 10 * h


@pytest.mark.parametrize("seed", [1, 2, 3])
def test_random_starts_respect_bound(ref, slave, master, seed):
    fb = StaticFeedback((-25.0,) * 3, mode="filippov")
    cert = certify_gains(fb, slave, master, ref, CUBE, 5000)
    x0 = CUBE.sample(np.random.default_rng(seed), 1)[0]
    _, _, rep = simulate_static(fb, slave, ref, x0, 1.5, 1e-3)
    assert rep.scalars["hitting_time"] <= cert.bound_for(x0, ref(0.0))


def test_disturbed_system_still_converges(ref, slave, master):
    fb = StaticFeedback((-25.0,) * 3, mode="filippov")
    cert = certify_gains(fb, slave, master, ref, CUBE, 5000, drift_margin=0.2)
    assert cert.valid
    d = lambda t: 0.2 * np.array([math.sin(3 * t), math.cos(7 * t), -1.0])
    _, _, rep = simulate_static(fb, slave, ref, X0, 4.0, 1e-3, disturbance=d)
    assert rep.scalars["hitting_time"] <= cert.bound_for(X0, ref(0.0))
    assert rep.scalars["post_hit_max_error"] <= 1e-6


def test_raw_mode_chatters_after_contact(ref, slave):
    fb = StaticFeedback((-3.5,) * 3, mode="raw")
    h = 1e-3
    _, log, _ = simulate_static(fb, slave, ref, X0, 4 * math.pi, h)
    pre, post = contact_rates(log, 4 * math.pi)
    # the fastest component switches every few steps once on the surface
    assert np.max(post) > 0.1 / h
    assert np.all(post > 10 * pre)


def test_domain_exceeded(ref):
    unstable = VectorField(3, lambda t, x: 50.0 * x)
    fb = StaticFeedback((-0.1,) * 3, mode="raw")
    box = Box.of([-2.0] * 3, [2.0] * 3)
    with pytest.raises(DomainExceeded):
        simulate_static(fb, unstable, ref, X0, 1.0, 1e-3, box=box)


# --- switch bookkeeping ------------------------------------------------------------

def test_switch_log_linear_interpolation():
    t = np.array([0.0, 1.0, 2.0, 3.0])
    e = np.array([[1.0], [-1.0], [-1.0], [3.0]])
    log = SwitchLog.from_errors(t, e)
    assert np.allclose(log.times[0], [0.5, 2.25])
    assert log.count(0, (0.0, 1.0)) == 1
    assert log.first(0) == 0.5
    assert np.allclose(chattering_rate(log, (0.0, 3.0)), [2.0 / 3.0])


def test_contact_rates_definition():
    log = SwitchLog([np.array([1.0, 1.5, 2.0, 2.5])])
    pre, post = contact_rates(log, 4.0)
    assert pre[0] == pytest.approx(1.0)
    assert post[0] == pytest.approx(3 / 3.0)
