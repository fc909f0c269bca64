import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from trajgen.pathgen import (
    GoalPath, PathError, ShapeSpec, angular_velocities, goal_points_anchored, goal_points_line,
    goal_points_polyline, load_shape, plane_basis, resample_arclength, spline_curve,
)
from trajgen.robot_model import shipped_path

vec = st.tuples(*[st.floats(-20, 20, allow_nan=False)] * 3).map(np.array)


@given(vec, vec, st.integers(1, 80))
@settings(max_examples=50, deadline=None)
def test_line_points(a, b, n):
    if np.linalg.norm(a - b) < 1e-3:
        return
    g = goal_points_line(a, b, n)
    assert g.points.shape == (n + 1, 3) and g.vectors.shape == (n, 3)
    np.testing.assert_array_equal(g.points[0], a)
    np.testing.assert_array_equal(g.points[-1], b)
    np.testing.assert_allclose(g.vectors.sum(axis=0), b - a, atol=1e-9)
    np.testing.assert_allclose(np.diff(g.points, axis=0), g.vectors, atol=1e-9)


def test_line_errors():
    with pytest.raises(PathError, match="coincide"):
        goal_points_line([1, 2, 3], [1, 2, 3], 5)
    with pytest.raises(PathError):
        goal_points_line([0, 0, 0], [1, 0, 0], 0)


def test_plane_basis_orthonormal():
    for normal in ([-1, 0, 0], [0.3, -0.9, 0.2], [0, 0, 1]):
        u, v = plane_basis(normal)
        nrm = np.asarray(normal, float) / np.linalg.norm(normal)
        M = np.array([u, v, nrm])
        np.testing.assert_allclose(M @ M.T, np.eye(3), atol=1e-12)
        assert np.linalg.det(M) == pytest.approx(1.0)


def _dense_arclength(curve):
    # independent oracle: fine linear subdivision of every segment
    fine = np.concatenate([np.linspace(a, b, 200, endpoint=False) for a, b in zip(curve[:-1], curve[1:])] + [curve[-1:]])
    return np.concatenate([[0], np.cumsum(np.linalg.norm(np.diff(fine, axis=0), axis=1))]), fine


def test_resample_even_spacing():
    curve = np.array([[0, 4], [0, 0], [2.5, 0]], float)
    pts = resample_arclength(curve, 26)
    s, fine = _dense_arclength(curve)
    for k, p in enumerate(pts):
        idx = np.argmin(np.abs(s - k * 6.5 / 26))
        np.testing.assert_allclose(p, fine[idx], atol=0.01)
    np.testing.assert_allclose(np.linalg.norm(np.diff(pts, axis=0), axis=1), 0.25, atol=1e-12)


def test_resample_skips_repeated_vertices():
    pts = resample_arclength(np.array([[0, 0], [1, 0], [1, 0], [2, 0]]), 4)
    np.testing.assert_allclose(pts[:, 0], [0, 0.5, 1, 1.5, 2])


def test_spline_interpolates_controls():
    ctrl = np.array([[0, 0], [1, 1], [2, 0], [3, 1]], float)
    dense = spline_curve(ctrl)
    for c in ctrl:
        assert np.min(np.linalg.norm(dense - c, axis=1)) < 1e-2
    with pytest.raises(PathError, match="differ"):
        spline_curve(np.array([[0, 0], [0, 0], [1, 1]]))


def test_polyline_in_plane():
    shape = load_shape(shipped_path("shapes/L.json"))
    anchor = np.array([30.0, -5.0, 40.0])
    g = goal_points_polyline(shape, anchor, 50)
    np.testing.assert_array_equal(g.points[0], anchor)
    nrm = np.array(shape.normal)
    np.testing.assert_allclose((g.points - anchor) @ nrm, 0, atol=1e-12)
    np.testing.assert_allclose(g.vectors, np.tile(nrm, (50, 1)))
    # the L goes down 4 cm, then sideways 2.5 cm
    np.testing.assert_allclose(g.points[-1] - anchor, 2.5 * plane_basis(nrm)[0] - 4 * plane_basis(nrm)[1], atol=1e-12)


def test_anchored_shape_hits_both_ends():
    shape = ShapeSpec("spline", [[0, 0], [1, 1], [2, 0]])
    a, b = np.array([1.0, 2, 3]), np.array([1.0, 6, 3])
    g = goal_points_anchored(shape, a, b, 20)
    np.testing.assert_array_equal(g.points[0], a)
    np.testing.assert_array_equal(g.points[-1], b)
    assert np.max(np.abs(g.points[:, 2] - 3)) > 0.5  # bulges off the chord


def test_anchored_errors():
    with pytest.raises(PathError, match="closed"):
        goal_points_anchored(ShapeSpec("polyline", [[0, 0], [1, 0], [0, 0]]), [0, 0, 0], [0, 1, 0], 5)
    with pytest.raises(PathError, match="parallel"):
        goal_points_anchored(ShapeSpec("polyline", [[0, 0], [1, 0]]), [0, 0, 0], [1, 0, 0], 5)


def test_shape_validation(tmp_path):
    with pytest.raises(PathError, match="unknown shape"):
        ShapeSpec("circle")
    with pytest.raises(PathError, match="at least 2"):
        ShapeSpec("polyline", [[0, 0]])
    with pytest.raises(PathError, match="nonzero"):
        ShapeSpec("polyline", [[0, 0], [1, 1]], normal=(0, 0, 0))
    bad = tmp_path / "s.json"
    bad.write_text("{oops")
    with pytest.raises(PathError, match="s.json:1"):
        load_shape(bad)
    good = tmp_path / "z.json"
    good.write_text(json.dumps({"points": [[0, 0], [1, 0]]}))
    assert load_shape(good).name == "z" and load_shape(good).kind == "polyline"


def test_goal_path_validation():
    with pytest.raises(PathError, match="need 2 goal vectors"):
        GoalPath(np.zeros((3, 3)), np.ones((1, 3)))
    with pytest.raises(PathError, match="nonzero"):
        GoalPath(np.zeros((2, 3)), np.zeros((1, 3)))


@given(st.integers(1, 60), st.floats(10, 10000))
@settings(max_examples=30, deadline=None)
def test_velocities_integrate_back(n, duration):
    rng = np.random.default_rng(n)
    traj = np.cumsum(rng.normal(size=(n + 1, 3)), axis=0)
    vel = angular_velocities(traj, duration)
    dt = duration / n / 1000.0
    rebuilt = traj[0] + np.concatenate([np.zeros((1, 3)), np.cumsum(vel * dt, axis=0)])
    np.testing.assert_allclose(rebuilt, traj, atol=1e-9)


def test_velocity_errors():
    with pytest.raises(PathError):
        angular_velocities(np.zeros((1, 3)), 100)
    with pytest.raises(PathError, match="positive"):
        angular_velocities(np.zeros((2, 3)), 0)
