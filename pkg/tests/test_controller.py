import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import PAPER_GOAL, make_field, sample_free, star_world_map
from navsim.barrier import BarrierSpec
from navsim.controller import (
    ControllerGains,
    EstimatorState,
    SingularJacobian,
    adaptive_law,
    check_conditioning,
    check_gains,
    control,
    estimator_derivative,
    lyapunov_V,
    star_control,
    star_reference,
    ultimate_bound,
    xi_norm,
)
from navsim.navfield import NavField
from navsim.starmap import Circle, StarMap, StarObstacle
from navsim.world import World

GAINS = ControllerGains()
SIGMA = ControllerGains(sigma_m=0.1, sigma_alpha=0.1)


def test_equilibrium_hold(field60):
    g = np.array([0.0, 0.0])
    assert np.array_equal(control(GAINS, field60, field60.x_d, np.zeros(2), EstimatorState(0.7), g), np.zeros(2))
    f3 = make_field(World.empty(11.0, n=3), [1.0, 2.0, 3.0])
    g3 = np.array([0.0, 0.0, -9.81])
    u = control(GAINS, f3, f3.x_d, np.zeros(3), EstimatorState(0.7, 0.3), g3)
    assert np.array_equal(u, 0.7 * g3)


def test_pure_quadratic_example():
    f = NavField(World.empty(11.0), BarrierSpec(1.0), np.zeros(2), 1.0, 5.0)
    x = np.array([1.0, 0.0])
    v = f.v_d(x)
    u = control(ControllerGains(k_phi=1.0), f, x, v, EstimatorState(0.0), np.zeros(2))
    assert np.array_equal(u, [-2.0, 0.0])


def _u_straight_line(k_phi, k_v, field, x, v, m_hat, alpha_hat, g):
    """Independent transcription of the control law from its definition."""
    grad = field.grad_phi(x)
    hess = field.hess_phi(x)
    v_d = -grad
    v_d_dot = -(hess @ v)
    e_v = v - v_d
    return -k_phi * grad + m_hat * (v_d_dot + g) - (k_v + 1.5 * alpha_hat) * e_v


def test_dual_implementation_bitwise(field60, world60):
    rng = np.random.default_rng(11)
    g = np.array([0.3, -0.2])
    for x in sample_free(world60, rng, 200, near_obstacles=True, tau=field60.spec.tau):
        v = rng.normal(size=2)
        est = EstimatorState(rng.uniform(0.1, 2.0), rng.uniform(0, 3))
        u = control(GAINS, field60, x, v, est, g)
        ref = _u_straight_line(GAINS.k_phi, GAINS.k_v, field60, x, v, est.m_hat, est.alpha_hat, g)
        assert np.array_equal(u, ref)


def test_estimator_examples():
    gains = ControllerGains(k_m=0.01)
    _, m_dot, a_dot = adaptive_law(gains, np.zeros(2), np.zeros(2), np.zeros(2), np.zeros(2), 1.0, 1.0,
                                   np.zeros(2))
    assert (m_dot, a_dot) == (0.0, 0.0)
    # e_v = (1, 0), v_d_dot + g = (2, 0)
    _, m_dot, _ = adaptive_law(gains, np.zeros(2), np.zeros(2), np.array([2.0, 0.0]), np.array([1.0, 0.0]), 1.0,
                               0.0, np.zeros(2))
    assert m_dot == pytest.approx(-0.02, rel=1e-15)
    _, _, a_dot = adaptive_law(SIGMA, np.zeros(2), np.zeros(2), np.zeros(2), np.zeros(2), 0.0, 1.0, np.zeros(2))
    assert a_dot == pytest.approx(-0.1, rel=1e-15)


@settings(max_examples=100)
@given(st.floats(-5, 5), st.floats(-5, 5), st.floats(0, 10))
def test_nominal_alpha_rate_nonnegative(a, b, alpha_hat):
    f = make_field(World.empty(11.0), [1.0, 1.0])
    m_dot, a_dot = estimator_derivative(GAINS, f, np.array([a, b]) * 0.5, np.array([b, a]), EstimatorState(1.0, alpha_hat),
                                        np.zeros(2))
    assert a_dot >= 0


def test_gains_validation():
    with pytest.raises(ValueError):
        ControllerGains(k_phi=0.0)
    with pytest.raises(ValueError):
        ControllerGains(k_v=0.5, sigma_m=0.1)
    ControllerGains(k_v=0.5)  # nominal law has no k_v floor beyond positivity
    with pytest.raises(ValueError):
        EstimatorState(1.0, -0.1)


def test_check_gains_warns_only():
    with pytest.warns(RuntimeWarning):
        msgs = check_gains(ControllerGains(k_phi=1.0), alpha_true=10.0)
    assert len(msgs) == 1
    assert check_gains(ControllerGains(k_phi=1.0), alpha_true=1.25) == []


def _identity_star_map(world):
    obs = [StarObstacle(c, Circle(R), R, 0.3) for c, R in zip(world.centers, world.inflated_radii)]
    return StarMap(world.r_W, obs, r=world.r)


def test_star_control_reduces_to_control(field60, world60):
    smap = _identity_star_map(world60)
    rng = np.random.default_rng(12)
    g = np.zeros(2)
    pts = np.vstack([sample_free(world60, rng, 100, near_obstacles=True, tau=field60.spec.tau),
                     sample_free(world60, rng, 100)])
    for x in pts:
        v = rng.normal(size=2)
        est = EstimatorState(rng.uniform(0.1, 2), rng.uniform(0, 2))
        a = control(GAINS, field60, x, v, est, g)
        b = star_control(GAINS, field60, smap, x, v, est, g)
        assert np.linalg.norm(a - b) <= 1e-9 * max(1.0, np.linalg.norm(a))


def test_star_control_hold_at_goal():
    smap = star_world_map()
    field = make_field(smap.world, [3.0, 4.0])
    g = np.array([0.1, -0.2])
    u = star_control(GAINS, field, smap, np.array([3.0, 4.0]), np.zeros(2), EstimatorState(0.9, 0.4), g)
    assert np.allclose(u, 0.9 * g, rtol=0, atol=1e-15)


def test_star_v_d_dot_richardson():
    smap = star_world_map()
    field = make_field(smap.world, [3.0, 4.0])
    rng = np.random.default_rng(13)
    ratios = []
    for _ in range(30):
        ob = smap.obstacles[rng.integers(2)]
        a = rng.uniform(0, 2 * np.pi)
        u = np.array([math.cos(a), math.sin(a)])
        x = ob.center + (ob.shape.radius(u) + rng.uniform(0.2, 0.8) * ob.margin) * u
        v = rng.normal(size=2)
        d = [star_reference(field, smap, x, v, fd_step=h)[2] for h in (2e-2, 1e-2, 5e-3)]
        ratios.append(np.linalg.norm(d[0] - d[1]) / np.linalg.norm(d[1] - d[2]))
    assert np.median(ratios) == pytest.approx(4.0, abs=0.2)
    assert all(3.0 < r < 5.0 for r in ratios)


def test_conditioning_guard():
    check_conditioning(np.eye(2))
    with pytest.raises(SingularJacobian):
        check_conditioning(np.array([[1.0, 0.0], [0.0, 1e-13]]))
    with pytest.raises(SingularJacobian):
        check_conditioning(np.zeros((2, 2)))


def test_lyapunov_examples(field60):
    est = EstimatorState(1.0, 1.25)
    assert lyapunov_V(field60, field60.x_d, np.zeros(2), est, 1.0, 1.25, GAINS) == pytest.approx(0.0, abs=1e-12)
    delta = 0.3
    V = lyapunov_V(field60, field60.x_d, np.zeros(2), EstimatorState(1.0 + delta, 1.25), 1.0, 1.25, GAINS)
    assert V == pytest.approx(delta**2 / (2 * GAINS.k_m), rel=1e-12)
    V = lyapunov_V(field60, field60.x_d, np.zeros(2), EstimatorState(1.0, 1.25 + delta), 1.0, 1.25, GAINS)
    assert V == pytest.approx(3 * delta**2 / (4 * GAINS.k_alpha), rel=1e-12)


def test_ultimate_bound():
    k_xi, d_xi, radius = ultimate_bound(SIGMA, 1.25, 1.0, 2 * math.sqrt(2))
    assert k_xi == pytest.approx(min(1 - 0.625, 19.5, 0.05, 0.075))
    assert d_xi == pytest.approx(4.0 + 0.75 * 0.1 * 1.25**2 + 0.05)
    assert radius == pytest.approx(math.sqrt(d_xi / k_xi))
    assert ultimate_bound(ControllerGains(sigma_m=0.1, sigma_alpha=0.1, k_phi=0.5), 1.25, 1.0, 1.0)[2] == math.inf


def test_xi_norm_at_equilibrium(field60):
    assert xi_norm(field60, field60.x_d, np.zeros(2), EstimatorState(1.0, 1.25), 1.0, 1.25) == 0.0
    assert PAPER_GOAL == tuple(field60.x_d)
