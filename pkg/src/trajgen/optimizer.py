"""Whole-trajectory optimisation through differentiable forward kinematics.

Every pose of the discretised trajectory is parametrised by a row of joint
logits.  A sigmoid maps each logit into its joint range, forward kinematics
turns the poses into effector points and directions, and Adam minimises a
weighted sum of seven terms:

====  ==============================================================
L0    mean squared distance of effector points from goal points
L1    one minus the mean cosine between effector and goal directions
L2    squared distance of the first pose from the start pose
L3    squared distance of the last pose from the end pose
L4    squared distance of the first point from the start point
L5    squared distance of the last point from the end point
L6    mean squared change between consecutive poses (fluency)
====  ==============================================================

Units are mixed on purpose: points in cm, angles in degrees.  The default
weights are tuned for exactly these units; change units and they must be
re-tuned.
"""
from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field, fields
from typing import Callable, Sequence

import numpy as np
from scipy.special import expit, logit

from . import autodiff as ad
from . import kernel
from .kinematics import EffectorState, KinematicChain, fk, fk_batch, fk_diff
from .pathgen import GoalPath, PathError, ShapeSpec, goal_points_anchored

log = logging.getLogger(__name__)

INIT_CLAMP = 1e-4
PLATEAU_RTOL = 1e-4


class OptimizationError(RuntimeError):
    pass


class DivergenceError(OptimizationError):
    def __init__(self, iteration: int, terms):
        self.iteration = iteration
        self.terms = terms
        super().__init__(f"loss became NaN at iteration {iteration} (terms {list(terms)})")


@dataclass(frozen=True)
class LossWeights:
    c0: float = 1.0
    c1: float = 50.0
    c2: float = 5.0
    c3: float = 100.0
    c4: float = 10.0
    c5: float = 200.0
    c6: float = 1.0

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not (math.isfinite(v) and v >= 0):
                raise ValueError(f"weight {f.name} must be a non-negative number, got {v}")

    @classmethod
    def parse(cls, text: str) -> "LossWeights":
        parts = [p for p in text.replace(" ", "").split(",") if p]
        if len(parts) != 7:
            raise ValueError(f"expected 7 comma-separated weights, got {len(parts)}")
        return cls(*(float(p) for p in parts))

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, f.name) for f in fields(self)])

    def zeroed(self, *indices: int) -> "LossWeights":
        vals = self.as_array()
        vals[list(indices)] = 0.0
        return LossWeights(*vals)

    def __str__(self):
        return ",".join(f"{v:g}" for v in self.as_array())


@dataclass(frozen=True)
class OptimizerConfig:
    lr: float = 0.1
    max_iterations: int = 20000
    stop_angle_delta: float = 1e-3   # degrees per iteration
    stop_patience: int = 10
    stop_loss: float | None = None
    lr_decay: float = 0.5            # plateau factor; 1 keeps the rate fixed
    lr_patience: int = 200           # iterations without a new best loss before decaying
    min_lr: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0
    backend: str | None = None       # "native", "python", "tape" or None (import-time default)

    def __post_init__(self):
        if not self.lr > 0:
            raise ValueError("learning rate must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        if not 0 < self.lr_decay <= 1:
            raise ValueError("lr_decay must lie in (0, 1]")
        if self.lr_patience < 1:
            raise ValueError("lr_patience must be at least 1")


@dataclass
class TrajectorySolution:
    poses: np.ndarray                      # (n+1, m) degrees
    states: list[EffectorState]
    loss_trace: np.ndarray                 # (evaluations, 8): L, L0..L6
    iterations: int
    converged: bool
    goal: GoalPath
    wall_time: float = 0.0
    method: str = "neural"
    info: dict = field(default_factory=dict)

    @property
    def positions(self) -> np.ndarray:
        return np.array([s.position for s in self.states])

    @property
    def directions(self) -> np.ndarray:
        return np.array([s.direction for s in self.states])

    @property
    def final_loss(self) -> float:
        return float(self.loss_trace[-1, 0]) if len(self.loss_trace) else float("nan")


def angles_from_logits(z, lower, upper) -> np.ndarray:
    """Joint angles ``lower + sigmoid(z) * (upper - lower)``, kept strictly inside."""
    z = np.asarray(z, float)
    lower = np.asarray(lower, float)
    upper = np.asarray(upper, float)
    theta = lower + expit(z) * (upper - lower)
    return np.clip(theta, np.nextafter(lower, upper), np.nextafter(upper, lower))


def logits_from_angles(theta, lower, upper, clamp: float = INIT_CLAMP) -> np.ndarray:
    ratio = (np.asarray(theta, float) - lower) / (upper - lower)
    return logit(np.clip(ratio, clamp, 1.0 - clamp))


def _check_in_limits(pose, lower, upper, label, tol=1e-9):
    pose = np.asarray(pose, float)
    if pose.shape != lower.shape:
        raise OptimizationError(f"{label} has {pose.size} angles, expected {lower.size}")
    if np.any(pose < lower - tol) or np.any(pose > upper + tol):
        raise OptimizationError(f"{label} is outside the joint limits")
    return pose


def init_logits(p_start, p_end, n: int, lower, upper) -> np.ndarray:
    """Logits of the joint-space interpolation from ``p_start`` to ``p_end``."""
    lower = np.asarray(lower, float)
    upper = np.asarray(upper, float)
    p_start = _check_in_limits(p_start, lower, upper, "start pose")
    p_end = _check_in_limits(p_end, lower, upper, "end pose")
    i = np.arange(n + 1)[:, None]
    theta = p_start + (i / n) * (p_end - p_start)
    return logits_from_angles(theta, lower, upper)


def _sqrt(x):
    return ad.sqrt(x) if isinstance(x, ad.Scalar) else math.sqrt(x)


def _sqnorm(a, b):
    total = 0.0
    for x, y in zip(a, b):
        d = x - y
        total = total + d * d
    return total


def composite_loss(poses, states, goal: GoalPath, p_start, p_end, weights: LossWeights):
    """Weighted loss and its seven terms.

    Works on plain floats and on autodiff scalars alike.  ``poses`` is a
    sequence of angle rows, ``states`` the matching effector states.
    """
    n = len(poses) - 1
    m = len(poses[0])
    pts = goal.points
    L0 = 0.0
    for st, g in zip(states, pts):
        L0 = L0 + _sqnorm(st.position, g)
    L0 = L0 / (3 * n + 3)
    L1 = 0.0
    if n > 0:
        acc = 0.0
        for st, v in zip(states[:n], goal.vectors):
            d = st.direction
            vn = float(np.linalg.norm(v))
            if vn <= 1e-9:
                raise OptimizationError("goal direction has zero length")
            dot = d[0] * float(v[0]) + d[1] * float(v[1]) + d[2] * float(v[2])
            dn = _sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2])
            acc = acc + dot / (dn * vn)
        L1 = 1.0 - acc / n
    L2 = _sqnorm(poses[0], p_start)
    L3 = _sqnorm(poses[n], p_end)
    L4 = _sqnorm(states[0].position, pts[0])
    L5 = _sqnorm(states[n].position, pts[n])
    L6 = 0.0
    for a, b in zip(poses[1:], poses[:-1]):
        L6 = L6 + _sqnorm(a, b)
    if n > 0:
        L6 = L6 / (n * m)
    terms = [L0, L1, L2, L3, L4, L5, L6]
    total = 0.0
    for c, t in zip(weights.as_array(), terms):
        if c != 0.0:
            total = total + float(c) * t
    return total, terms


def loss_and_grad_tape(chain: KinematicChain, z, goal: GoalPath, p_start, p_end, weights: LossWeights):
    """Reference route: composite loss and gradient via the scalar tape."""
    z = np.asarray(z, float)
    lower, upper = chain.lower, chain.upper
    lo_open = np.nextafter(lower, upper)
    hi_open = np.nextafter(upper, lower)
    tape = ad.Tape()
    zs = [[tape.variable(v) for v in row] for row in z]
    poses = []
    for row in zs:
        pose = []
        for j, zj in enumerate(row):
            th = float(lower[j]) + ad.sigmoid(zj) * float(upper[j] - lower[j])
            if th.value < lo_open[j]:
                th = ad.constant(lo_open[j])
            elif th.value > hi_open[j]:
                th = ad.constant(hi_open[j])
            pose.append(th)
        poses.append(pose)
    states = [fk_diff(chain, pose, joint_points=False) for pose in poses]
    total, terms = composite_loss(poses, states, goal, p_start, p_end, weights)
    grads = ad.backward(total)
    grad = np.array([[grads.wrt(v) for v in row] for row in zs])
    theta = np.array([[float(t) for t in row] for row in poses])
    P = np.array([[float(c) for c in st.position] for st in states])
    D = np.array([[float(c) for c in st.direction] for st in states])
    return float(total), np.array([float(t) for t in terms]), grad, theta, P, D


def evaluate(chain, z, goal, p_start, p_end, weights, backend=None):
    """Loss, terms, gradient, angles, points, directions for logits ``z``."""
    w = weights.as_array() if isinstance(weights, LossWeights) else np.asarray(weights, float)
    if backend == "tape":
        return loss_and_grad_tape(chain, z, goal, p_start, p_end, LossWeights(*w))
    return kernel.loss_and_grad(
        chain.packed(), chain.lower, chain.upper, z, goal.points, goal.vectors,
        np.asarray(p_start, float), np.asarray(p_end, float), w, backend=backend,
    )


class Adam:
    def __init__(self, shape, lr=0.1, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = np.zeros(shape)
        self.v = np.zeros(shape)
        self.t = 0

    def step(self, grad) -> np.ndarray:
        self.t += 1
        self.m = self.beta1 * self.m + (1 - self.beta1) * grad
        self.v = self.beta2 * self.v + (1 - self.beta2) * grad * grad
        mhat = self.m / (1 - self.beta1 ** self.t)
        vhat = self.v / (1 - self.beta2 ** self.t)
        return -self.lr * mhat / (np.sqrt(vhat) + self.eps)


def optimize(
    chain: KinematicChain,
    z0,
    goal: GoalPath,
    p_start,
    p_end,
    weights: LossWeights,
    cfg: OptimizerConfig = OptimizerConfig(),
    callback: Callable[[int, float, np.ndarray], None] | None = None,
) -> TrajectorySolution:
    """Run Adam on the logit matrix until the angles settle.

    Stops when the largest per-iteration angle change stays below
    ``cfg.stop_angle_delta`` for ``cfg.stop_patience`` iterations, when the
    loss reaches ``cfg.stop_loss``, when the gradient vanishes, or after
    ``cfg.max_iterations`` updates (then ``converged`` is False).

    At a fixed step of 0.1 Adam tends to settle into a limit cycle around the
    minimum instead of converging, so the step is multiplied by
    ``cfg.lr_decay`` whenever the best loss has not improved (relatively, by
    PLATEAU_RTOL) for ``cfg.lr_patience`` iterations, down to ``cfg.min_lr``.
    """
    t0 = time.perf_counter()
    z = np.array(z0, float)
    if z.shape != (goal.n + 1, chain.m):
        raise OptimizationError(f"logits have shape {z.shape}, expected {(goal.n + 1, chain.m)}")
    if not np.all(np.isfinite(z)):
        raise OptimizationError("initial logits must be finite")
    adam = Adam(z.shape, cfg.lr, cfg.beta1, cfg.beta2, cfg.eps)
    trace = []
    best = math.inf
    stale = 0
    quiet = 0
    converged = False
    iteration = 0
    while True:
        loss, terms, grad, theta, _, _ = evaluate(chain, z, goal, p_start, p_end, weights, cfg.backend)
        if not math.isfinite(loss) or not np.all(np.isfinite(grad)):
            raise DivergenceError(iteration, terms)
        trace.append([loss, *terms])
        if callback is not None:
            callback(iteration, loss, terms)
        if cfg.stop_loss is not None and loss <= cfg.stop_loss:
            converged = True
            break
        if not np.any(grad):
            converged = True
            break
        if quiet >= cfg.stop_patience:
            converged = True
            break
        if iteration >= cfg.max_iterations:
            break
        if loss < best * (1 - PLATEAU_RTOL):
            best, stale = loss, 0
        else:
            stale += 1
            if stale >= cfg.lr_patience and cfg.lr_decay < 1:
                adam.lr = max(cfg.min_lr, adam.lr * cfg.lr_decay)
                stale = 0
        z = z + adam.step(grad)
        iteration += 1
        new_theta = angles_from_logits(z, chain.lower, chain.upper)
        if np.max(np.abs(new_theta - theta)) < cfg.stop_angle_delta:
            quiet += 1
        else:
            quiet = 0
    poses = theta
    states = fk_batch(chain, poses)
    wall = time.perf_counter() - t0
    log.info("optimisation finished: %d iterations, loss %.6g, converged=%s, %.2fs",
             iteration, trace[-1][0], converged, wall)
    return TrajectorySolution(
        poses=poses,
        states=states,
        loss_trace=np.array(trace),
        iterations=iteration,
        converged=converged,
        goal=goal,
        wall_time=wall,
        info={"weights": str(weights), "lr": cfg.lr, "final_lr": adam.lr,
              "backend": cfg.backend or kernel.BACKEND},
    )


def generate_trajectory(
    chain: KinematicChain,
    p_start,
    p_end,
    shape: ShapeSpec | None = None,
    n: int = 50,
    weights: LossWeights = LossWeights(),
    cfg: OptimizerConfig = OptimizerConfig(),
    callback=None,
) -> TrajectorySolution:
    """Trajectory from ``p_start`` to ``p_end`` following ``shape`` (default: line)."""
    shape = shape or ShapeSpec("line")
    p_start = np.asarray(p_start, float)
    p_end = np.asarray(p_end, float)
    if not np.any(weights.as_array()):
        raise OptimizationError("at least one loss weight must be positive")
    P_s = fk(chain, p_start).position
    P_e = fk(chain, p_end).position
    try:
        goal = goal_points_anchored(shape, P_s, P_e, n)
    except PathError as exc:
        raise OptimizationError(f"cannot build goal path: {exc}") from exc
    z0 = init_logits(p_start, p_end, n, chain.lower, chain.upper)
    return optimize(chain, z0, goal, p_start, p_end, weights, cfg, callback)


def generate_trajectory_unanchored(
    chain: KinematicChain,
    goal: GoalPath,
    init_pose,
    weights: LossWeights = LossWeights(),
    cfg: OptimizerConfig = OptimizerConfig(),
    callback=None,
) -> TrajectorySolution:
    """Trajectory along an absolute goal path with free start and end poses.

    Start/end terms (L2..L5) are switched off and every pose starts from
    ``init_pose``.
    """
    init_pose = _check_in_limits(init_pose, chain.lower, chain.upper, "initial pose")
    w = weights.zeroed(2, 3, 4, 5)
    row = logits_from_angles(init_pose, chain.lower, chain.upper)
    z0 = np.tile(row, (goal.n + 1, 1))
    sol = optimize(chain, z0, goal, init_pose, init_pose, w, cfg, callback)
    sol.method = "neural-unanchored"
    return sol
