import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.spatial.transform import Rotation

from trajgen.evaluation import (
    MetricError, Stat, SurfaceSpec, angle_between, distance_from_line, fluency, pointing_deviation,
    pointing_error_fit, start_point_offset, start_point_variation, third_means, trajectory_metrics,
)
from trajgen.pathgen import GoalPath, goal_points_line


def test_distance_from_line_simple():
    pts = np.array([[0, 0, 0], [1, 1, 0], [2, 0, 3]], float)
    s = distance_from_line(pts, [0, 0, 0], [1, 0, 0])
    np.testing.assert_allclose(s.values, [0, 10, 30])
    assert s.mean == pytest.approx(40 / 3)


@given(st.integers(0, 10_000))
@settings(max_examples=30, deadline=None)
def test_distance_invariant_under_rigid_motion(seed):
    rng = np.random.default_rng(seed)
    pts = rng.normal(size=(8, 3))
    a, b = rng.normal(size=3), rng.normal(size=3) + 3
    R = Rotation.random(random_state=seed).as_matrix()
    t = rng.normal(size=3)
    d1 = distance_from_line(pts, a, b).values
    d2 = distance_from_line(pts @ R.T + t, R @ a + t, R @ b + t).values
    np.testing.assert_allclose(d1, d2, atol=1e-9)


def test_angle_between():
    np.testing.assert_allclose(angle_between([[1, 0, 0], [1, 1, 0]], [[0, 2, 0], [1, 1, 0]]), [90, 0], atol=1e-12)
    with pytest.raises(MetricError, match="zero vector"):
        angle_between([0, 0, 0], [1, 0, 0])


def test_pointing_deviation_skip():
    goal = goal_points_line([0, 0, 0], [4, 0, 0], 4)
    dirs = np.array([[0, 1, 0]] * 2 + [[1, 0, 0]] * 3, float)
    assert pointing_deviation(dirs, goal).mean == pytest.approx(45)
    assert pointing_deviation(dirs, goal, skip=2).mean == pytest.approx(0)


def test_fit_error_on_straight_approach():
    # points approach the surface x = 10 along a line through the target
    surface = SurfaceSpec.through([10, 0, 0], [1, 0, 0])
    pts = np.column_stack([np.linspace(0, 9, 30), np.zeros(30), np.zeros(30)])
    err, unreliable = pointing_error_fit(pts, surface)
    assert np.isnan(err[:9]).all()
    np.testing.assert_allclose(err[9:], 0, atol=1e-12)
    assert not unreliable.any()


def test_fit_error_offset_line():
    surface = SurfaceSpec.through([10, 0, 0], [1, 0, 0])
    pts = np.column_stack([np.linspace(0, 9, 20), np.full(20, 0.5), np.zeros(20)])
    err, _ = pointing_error_fit(pts, surface)
    np.testing.assert_allclose(err[9:], 0.5, atol=1e-12)


def test_fit_error_parallel_is_flagged():
    surface = SurfaceSpec.through([10, 0, 0], [1, 0, 0])
    pts = np.column_stack([np.zeros(12), np.linspace(0, 1, 12), np.zeros(12)])
    with pytest.raises(MetricError, match="parallel"):
        pointing_error_fit(pts, surface)
    with pytest.raises(MetricError, match="at least 10"):
        pointing_error_fit(pts[:5], surface)


def test_surface_validation():
    with pytest.raises(MetricError, match="unit"):
        SurfaceSpec([0, 0, 0], [2, 0, 0], [0, 0, 0])
    with pytest.raises(MetricError, match="does not lie"):
        SurfaceSpec([0, 0, 0], [1, 0, 0], [1, 0, 0])


def test_third_means_ignores_nan():
    assert third_means([np.nan, 1, 3, 2, 2, 2, 0, 0, 3]) == pytest.approx((2, 2, 1))


def test_start_points():
    a = np.array([[0, 0, 0], [1, 1, 1]], float)
    b = np.array([[0.3, 0.4, 0], [1, 1, 1]], float)
    assert start_point_variation([a, b]) == pytest.approx(5.0)
    assert start_point_offset(b, [0, 0, 0]) == pytest.approx(5.0)
    with pytest.raises(MetricError):
        start_point_variation([a])
    with pytest.raises(MetricError, match="coincide"):
        distance_from_line(a, [1, 1, 1], [1, 1, 1])


def test_fluency():
    assert fluency([[0, 0], [1, 3]]) == pytest.approx(5.0)
    assert fluency([[0, 0]]) == 0.0


def test_stat_ignores_nan():
    s = Stat.of([1.0, np.nan, 3.0])
    assert (s.mean, s.std) == (2.0, 1.0)
    assert np.isnan(Stat.of([np.nan]).mean)


class _Sol:
    def __init__(self, poses, P, D, goal):
        self.poses, self.positions, self.directions, self.goal = poses, P, D, goal
        self.method = "x"


def test_trajectory_metrics_row():
    goal = goal_points_line([0, 0, 0], [9, 0, 0], 12)
    P = goal.points.copy()
    D = np.tile([1.0, 0, 0], (13, 1))
    surface = SurfaceSpec.through([12, 0, 0], [1, 0, 0])
    row = trajectory_metrics(_Sol(np.zeros((13, 2)), P, D, goal), P[0], P[-1], surface)
    assert row["distance_mm_mean"] == 0 and row["pointing_deg_mean"] == 0
    assert row["fit_error_cm_final"] == pytest.approx(0, abs=1e-12)
    assert row["method"] == "x"
