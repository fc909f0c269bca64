"""Conventional comparison method: per-point damped least squares IK.

Goal points are visited one after another, each solve warm-started from the
previous solution, targeting both the point and the goal direction.
"""
from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .kinematics import KinematicChain, fk, fk_batch, jacobian
from .optimizer import TrajectorySolution
from .pathgen import GoalPath


class IkError(RuntimeError):
    pass


@dataclass(frozen=True)
class IkTarget:
    position: np.ndarray
    direction: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.direction, float)
        if abs(np.linalg.norm(d) - 1.0) > 1e-9:
            raise ValueError("IK target direction must be a unit vector")
        object.__setattr__(self, "position", np.asarray(self.position, float))
        object.__setattr__(self, "direction", d)


@dataclass(frozen=True)
class IkConfig:
    damping: float = 0.1
    max_iterations: int = 200          # per goal point
    position_tol: float = 0.01         # cm (0.1 mm)
    direction_tol: float = 1e-3        # |d - d_goal|
    orientation_weight: float = 1.0
    max_step_deg: float = 10.0         # per DLS iteration
    max_pose_change_deg: float = 45.0  # between consecutive solved poses


def targets_from_goal(goal: GoalPath) -> list[IkTarget]:
    """One target per goal point; the last point reuses the last goal vector."""
    if len(goal.vectors) == 0:
        return [None] * (goal.n + 1)
    out = []
    for i, p in enumerate(goal.points):
        v = goal.vectors[min(i, goal.n - 1)]
        out.append(IkTarget(p, v / np.linalg.norm(v)))
    return out


def solve_point(chain: KinematicChain, seed, position, direction=None, cfg: IkConfig = IkConfig()):
    """Damped least squares from ``seed``.

    Returns ``(pose, reached, iterations)``.  ``direction=None`` solves for
    position only.  Joint limits are enforced by clamping after every step.
    """
    q = np.array(seed, float)
    lo, hi = chain.lower, chain.upper
    position = np.asarray(position, float)
    wo = cfg.orientation_weight
    lam2 = cfg.damping ** 2
    it = 0
    for it in range(cfg.max_iterations + 1):
        state, J = jacobian(chain, q)
        ep = position - state.position
        pos_ok = np.linalg.norm(ep) <= cfg.position_tol
        if direction is None:
            e, Jw, dir_ok = ep, J[:3], True
        else:
            ed = direction - state.direction
            dir_ok = np.linalg.norm(ed) <= cfg.direction_tol
            e = np.concatenate([ep, wo * ed])
            Jw = np.vstack([J[:3], wo * J[3:]])
        if pos_ok and dir_ok:
            return q, True, it
        if it == cfg.max_iterations:
            break
        A = Jw @ Jw.T + lam2 * np.eye(len(e))
        try:
            dq = Jw.T @ np.linalg.solve(A, e)
        except np.linalg.LinAlgError as exc:
            raise IkError(f"damped system is singular: {exc}") from exc
        big = np.max(np.abs(dq))
        if big > cfg.max_step_deg:
            dq *= cfg.max_step_deg / big
        q_new = np.clip(q + dq, lo, hi)
        if np.max(np.abs(q_new - q)) < 1e-12:
            break
        q = q_new
    final = fk(chain, q)
    reached = np.linalg.norm(position - final.position) <= cfg.position_tol
    return q, bool(reached), it


def ik_step_chain(
    chain: KinematicChain,
    seed_pose,
    goal: GoalPath,
    order: str = "backward",
    cfg: IkConfig = IkConfig(),
) -> TrajectorySolution:
    """Solve every goal point in turn, warm-starting from the previous pose.

    ``order="backward"`` starts at the last goal point with ``seed_pose`` and
    walks towards the first, as when the touch pose is the trusted one.
    """
    if order not in ("forward", "backward"):
        raise ValueError("order must be 'forward' or 'backward'")
    seed = np.asarray(seed_pose, float)
    if seed.shape != (chain.m,):
        raise IkError(f"seed pose has {seed.size} angles, expected {chain.m}")
    if np.any(seed < chain.lower) or np.any(seed > chain.upper):
        raise IkError("seed pose is outside the joint limits")
    t0 = time.perf_counter()
    targets = targets_from_goal(goal)
    idx = range(goal.n, -1, -1) if order == "backward" else range(goal.n + 1)
    poses = np.zeros((goal.n + 1, chain.m))
    reached = np.zeros(goal.n + 1, bool)
    iters = np.zeros(goal.n + 1, int)
    q = seed
    for i in idx:
        tgt = targets[i]
        direction = None if tgt is None else tgt.direction
        q_new, ok, it = solve_point(chain, q, goal.points[i], direction, cfg)
        step = q_new - q
        big = np.max(np.abs(step))
        if big > cfg.max_pose_change_deg:
            q_new = q + step * (cfg.max_pose_change_deg / big)
            ok = np.linalg.norm(fk(chain, q_new).position - goal.points[i]) <= cfg.position_tol
        q = q_new
        poses[i], reached[i], iters[i] = q, ok, it
    states = fk_batch(chain, poses)
    return TrajectorySolution(
        poses=poses,
        states=states,
        loss_trace=np.zeros((0, 8)),
        iterations=int(iters.sum()),
        converged=bool(reached.all()),
        goal=goal,
        wall_time=time.perf_counter() - t0,
        method="baseline-dls",
        info={"reached": reached.tolist(), "point_iterations": iters.tolist(), "order": order},
    )
