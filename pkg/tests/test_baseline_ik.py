import numpy as np
import pytest

from conftest import two_link, two_link_fk
from trajgen.baseline_ik import IkConfig, IkError, IkTarget, ik_step_chain, solve_point, targets_from_goal
from trajgen.kinematics import fk
from trajgen.pathgen import GoalPath, goal_points_line


def analytic_two_link(x, y, l1=3.0, l2=2.0, elbow=1):
    c2 = (x * x + y * y - l1 * l1 - l2 * l2) / (2 * l1 * l2)
    q2 = elbow * np.arccos(c2)
    q1 = np.arctan2(y, x) - np.arctan2(l2 * np.sin(q2), l1 + l2 * np.cos(q2))
    return np.degrees([q1, q2])


def test_position_only_matches_closed_form(toy):
    q, ok, _ = solve_point(toy, [20.0, 40.0], [2.0, 3.0, 0.0], cfg=IkConfig(position_tol=1e-8, max_iterations=2000))
    assert ok
    np.testing.assert_allclose(q, analytic_two_link(2.0, 3.0), atol=1e-5)


def test_point_and_direction(toy):
    q_true = np.array([25.0, 35.0])
    p, d = two_link_fk(q_true)
    q, ok, _ = solve_point(toy, [0.0, 10.0], p, d, IkConfig(position_tol=1e-6, direction_tol=1e-6, max_iterations=2000))
    assert ok
    np.testing.assert_allclose(q, q_true, atol=1e-3)


def test_seed_at_solution_is_unchanged(toy):
    q0 = np.array([10.0, 80.0])
    q, ok, it = solve_point(toy, q0, fk(toy, q0).position)
    assert ok and it == 0
    np.testing.assert_array_equal(q, q0)


def test_unreachable_point(toy):
    q, ok, it = solve_point(toy, [10.0, 10.0], [9.0, 0, 0], cfg=IkConfig(max_iterations=50))
    assert not ok
    assert np.all(q >= toy.lower) and np.all(q <= toy.upper)


def test_chain_reaches_line_and_respects_tolerance(toy):
    goal = goal_points_line(two_link_fk([20.0, 60.0])[0], two_link_fk([60.0, 30.0])[0], 12)
    sol = ik_step_chain(toy, [60.0, 30.0], goal, "backward", IkConfig(orientation_weight=0.0))
    assert sol.method == "baseline-dls"
    err = np.linalg.norm(sol.positions - goal.points, axis=1)
    assert np.all(err[np.array(sol.info["reached"])] <= 0.01)
    assert sol.converged


def test_pose_change_is_bounded(toy):
    goal = GoalPath([[3.0, 4.0, 0.0], [-5.0, 0.0, 0.0]], [[-1.0, 0, 0]])
    cfg = IkConfig(max_pose_change_deg=5.0)
    sol = ik_step_chain(toy, [0.0, 0.0], goal, "forward", cfg)
    assert np.max(np.abs(np.diff(sol.poses, axis=0))) <= 5.0 + 1e-9


def test_forward_and_backward_end_at_seed_side(toy):
    seed = np.array([60.0, 30.0])
    goal = goal_points_line(two_link_fk([20.0, 60.0])[0], two_link_fk(seed)[0], 6)
    back = ik_step_chain(toy, seed, goal, "backward", IkConfig(orientation_weight=0.0))
    assert np.linalg.norm(back.positions[-1] - goal.points[-1]) <= 0.01


def test_targets_reuse_last_vector():
    goal = goal_points_line([0, 0, 0], [3, 0, 0], 3)
    t = targets_from_goal(goal)
    assert len(t) == 4
    np.testing.assert_array_equal(t[3].direction, [1, 0, 0])


def test_errors(toy):
    goal = goal_points_line([1, 0, 0], [2, 0, 0], 2)
    with pytest.raises(ValueError, match="order"):
        ik_step_chain(toy, [0, 0], goal, "sideways")
    with pytest.raises(IkError, match="angles"):
        ik_step_chain(toy, [0], goal)
    with pytest.raises(IkError, match="limits"):
        ik_step_chain(toy, [0, 500], goal)
    with pytest.raises(ValueError, match="unit"):
        IkTarget([0, 0, 0], [0, 0, 2])
