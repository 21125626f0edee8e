import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import central_diff, star_world_map
from navsim.starmap import (
    AxisymmetricStar,
    Circle,
    InvalidMap,
    SplineStar,
    StarMap,
    StarObstacle,
    StarPolygon,
    make_shape,
    validate_map,
)


def _shell_points(smap, rng, count, lo=0.0, hi=1.0):
    out = []
    while len(out) < count:
        ob = smap.obstacles[rng.integers(len(smap.obstacles))]
        u = rng.normal(size=smap.n)
        u /= np.linalg.norm(u)
        x = ob.center + (ob.shape.radius(u) + rng.uniform(lo, hi) * ob.margin) * u
        out.append(x)
    return out


def test_far_field_is_bit_exact_identity():
    smap = star_world_map()
    rng = np.random.default_rng(0)
    count = 0
    while count < 200:
        x = rng.uniform(-7.5, 7.5, 2)
        if np.linalg.norm(x) >= 8 or any(np.linalg.norm(x - o.center) < o.outer_radius for o in smap.obstacles):
            continue
        assert np.array_equal(smap.H(x), x)
        assert np.array_equal(smap.J_H(x), np.eye(2))
        count += 1


def test_sphere_as_star_is_identity():
    smap = StarMap(8.0, [StarObstacle(np.array([1.0, -2.0]), Circle(0.8), 0.8, 1.0)])
    rng = np.random.default_rng(1)
    for x in _shell_points(smap, rng, 200):
        assert np.allclose(smap.H(x), x, rtol=0, atol=1e-14)
        assert np.allclose(smap.J_H(x), np.eye(2), rtol=0, atol=1e-14)
    rep = validate_map(smap, resolution=61)
    assert rep.ok and rep.min_abs_det == pytest.approx(1.0, abs=1e-12)


def test_star_boundary_lands_on_target_sphere():
    smap = star_world_map()
    for ob in smap.obstacles:
        for b in ob.boundary_points(1000):
            assert abs(np.linalg.norm(smap.H(b) - ob.center) - ob.target_radius) <= 1e-6


def test_jacobian_matches_finite_differences():
    smap = star_world_map()
    rng = np.random.default_rng(2)
    for x in _shell_points(smap, rng, 250, lo=0.01, hi=0.99):
        J = smap.J_H(x)
        J_fd = np.column_stack([central_diff(smap.H, x, e, 1e-5) for e in np.eye(2)])
        assert np.linalg.norm(J - J_fd) <= 1e-5 * np.linalg.norm(J)


def test_map_is_orientation_preserving():
    smap = star_world_map()
    rng = np.random.default_rng(3)
    for x in _shell_points(smap, rng, 300):
        assert np.linalg.det(smap.J_H(x)) > 0


def test_validate_star_world():
    rep = validate_map(star_world_map())
    assert rep.ok, rep.problems
    assert rep.min_abs_det > 1e-6
    assert rep.boundary_residual <= 1e-6


def test_overlapping_shells_rejected():
    smap = StarMap(8.0, [
        StarObstacle(np.array([-1.0, 0.0]), StarPolygon(0.9, 0.15, 5), 0.5, 1.2),
        StarObstacle(np.array([1.5, 0.0]), StarPolygon(0.9, 0.15, 5), 0.5, 1.2),
    ])
    rep = validate_map(smap, resolution=41)
    assert not rep.ok and not rep.shells_ok
    assert any("overlap" in p for p in rep.problems)


def test_oversized_target_rejected():
    smap = StarMap(8.0, [StarObstacle(np.array([0.0, 0.0]), StarPolygon(0.9, 0.15, 5), 2.5, 1.0)])
    assert not validate_map(smap, resolution=41).ok


def test_inside_obstacle_raises():
    smap = star_world_map()
    with pytest.raises(InvalidMap):
        smap.H(np.array([-3.0, -3.0]) + 0.1)
    assert not smap.in_free_space(np.array([-3.0, -3.0]))
    assert not smap.in_free_space(np.array([9.0, 0.0]))


@settings(max_examples=50, deadline=None)
@given(st.floats(0, 2 * math.pi))
def test_star_polygon_radius_gradient(a):
    shape = StarPolygon(0.9, 0.15, 5, 0.3)
    u = 1.7 * np.array([math.cos(a), math.sin(a)])
    fd = np.array([central_diff(shape.radius, u, e, 1e-5) for e in np.eye(2)])
    assert np.allclose(shape.radius_grad(u), fd, atol=1e-8)


def test_spline_shape_periodic_and_differentiable():
    shape = SplineStar([1.0, 1.2, 0.9, 1.1, 1.0, 1.3])
    for a in np.linspace(0, 2 * np.pi, 7):
        u = np.array([math.cos(a), math.sin(a)])
        fd = np.array([central_diff(shape.radius, u, e, 1e-5) for e in np.eye(2)])
        assert np.allclose(shape.radius_grad(u), fd, atol=1e-7)
    assert shape.radius(np.array([1.0, 0.0])) == pytest.approx(1.0)
    smap = StarMap(8.0, [StarObstacle(np.array([0.0, 0.0]), shape, 0.5, 1.0)])
    rep = validate_map(smap, resolution=81)
    assert rep.ok, rep.problems


def test_axisymmetric_3d():
    shape = AxisymmetricStar(0.9, 0.15, 3)
    smap = StarMap(8.0, [StarObstacle(np.array([1.0, 1.0, 0.0]), shape, 0.5, 1.0)])
    rng = np.random.default_rng(4)
    for x in _shell_points(smap, rng, 200, lo=0.01, hi=0.99):
        J = smap.J_H(x)
        J_fd = np.column_stack([central_diff(smap.H, x, e, 1e-5) for e in np.eye(3)])
        assert np.linalg.norm(J - J_fd) <= 1e-5 * np.linalg.norm(J)
    for b in smap.obstacles[0].boundary_points(500):
        assert abs(np.linalg.norm(smap.H(b) - smap.obstacles[0].center) - 0.5) <= 1e-6
    rep = validate_map(smap, resolution=25, boundary_samples=500)
    assert rep.ok, rep.problems


def test_make_shape_dispatch():
    assert isinstance(make_shape({"shape": "circle", "radius": 1.0}), Circle)
    s = make_shape({"shape": "star_polygon", "rho0": 0.9, "amplitude": 0.15, "frequency": 5})
    assert make_shape(s.to_dict()).to_dict() == s.to_dict()
    with pytest.raises(ValueError):
        make_shape({"shape": "torus"})
    with pytest.raises(ValueError):
        StarPolygon(1.0, 1.0, 3)
