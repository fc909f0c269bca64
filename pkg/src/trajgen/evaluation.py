"""Trajectory quality metrics.

Distances come in as centimetres and are reported in millimetres where the
metric name says so.  Every function works on plain arrays so metrics can be
recomputed from exported CSV files.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .pathgen import GoalPath

STARTING_PHASE = 10


class MetricError(ValueError):
    pass


@dataclass(frozen=True)
class Stat:
    values: np.ndarray
    mean: float
    std: float

    @classmethod
    def of(cls, values):
        values = np.asarray(values, float)
        ok = values[np.isfinite(values)]
        if ok.size == 0:
            return cls(values, float("nan"), float("nan"))
        return cls(values, float(ok.mean()), float(ok.std()))

    def __str__(self):
        return f"{self.mean:.3g} ± {self.std:.3g}"


@dataclass(frozen=True)
class SurfaceSpec:
    point: np.ndarray
    normal: np.ndarray
    target: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.point, float)
        nrm = np.asarray(self.normal, float)
        t = np.asarray(self.target, float)
        if abs(np.linalg.norm(nrm) - 1.0) > 1e-9:
            raise MetricError("surface normal must be a unit vector")
        if abs((t - p) @ nrm) > 1e-9:
            raise MetricError("target point does not lie on the surface")
        object.__setattr__(self, "point", p)
        object.__setattr__(self, "normal", nrm)
        object.__setattr__(self, "target", t)

    @classmethod
    def through(cls, target, normal):
        nrm = np.asarray(normal, float)
        return cls(np.asarray(target, float), nrm / np.linalg.norm(nrm), np.asarray(target, float))


def _positions(x) -> np.ndarray:
    if hasattr(x, "positions"):
        return np.asarray(x.positions, float)
    if len(x) and hasattr(x[0], "position"):
        return np.array([s.position for s in x], float)
    return np.asarray(x, float)


def _directions(x) -> np.ndarray:
    if hasattr(x, "directions"):
        return np.asarray(x.directions, float)
    if len(x) and hasattr(x[0], "direction"):
        return np.array([s.direction for s in x], float)
    return np.asarray(x, float)


def distance_from_line(states, p_start, p_end) -> Stat:
    """Perpendicular distance (mm) of each point from the line through both ends."""
    P = _positions(states)
    a = np.asarray(p_start, float)
    b = np.asarray(p_end, float)
    d = b - a
    length = np.linalg.norm(d)
    if length == 0:
        raise MetricError("line endpoints coincide")
    d = d / length
    rel = P - a
    perp = rel - np.outer(rel @ d, d)
    return Stat.of(10.0 * np.linalg.norm(perp, axis=1))


def angle_between(a, b) -> np.ndarray:
    """Angle in degrees between matching rows of ``a`` and ``b``."""
    a = np.atleast_2d(np.asarray(a, float))
    b = np.atleast_2d(np.asarray(b, float))
    na = np.linalg.norm(a, axis=1)
    nb = np.linalg.norm(b, axis=1)
    if np.any(na == 0) or np.any(nb == 0):
        raise MetricError("cannot measure the angle of a zero vector")
    # atan2 keeps full precision near 0 and 180 degrees, unlike arccos
    cross = np.linalg.norm(np.cross(a, b), axis=1)
    return np.degrees(np.arctan2(cross, np.sum(a * b, axis=1)))


def pointing_deviation(states, goal: GoalPath, skip: int = 0) -> Stat:
    """Angle (degrees) between effector direction i and goal vector i, i < n.

    ``skip`` drops the first steps, e.g. ``skip=10`` ignores the starting phase.
    """
    D = _directions(states)[: goal.n]
    ang = angle_between(D, goal.vectors)
    return Stat.of(ang[skip:])


def pointing_error_fit(states, surface: SurfaceSpec, window: int = 10):
    """Miss distance (cm) of the line fitted through the last ``window`` points.

    For every step ``i >= window - 1`` a least-squares 3-D line through points
    ``i - window + 1 .. i`` is intersected with the surface.  Steps before the
    first full window, and steps whose fitted line is (nearly) parallel to the
    surface, are NaN; the second array flags the latter as unreliable.
    """
    P = _positions(states)
    if len(P) < window:
        raise MetricError(f"need at least {window} points, got {len(P)}")
    err = np.full(len(P), np.nan)
    unreliable = np.zeros(len(P), bool)
    nrm = surface.normal
    for i in range(window - 1, len(P)):
        chunk = P[i - window + 1: i + 1]
        centre = chunk.mean(axis=0)
        _, sv, vt = np.linalg.svd(chunk - centre)
        direction = vt[0]
        denom = direction @ nrm
        if sv[0] == 0 or abs(denom) < 1e-6:
            unreliable[i] = True
            continue
        t = ((surface.point - centre) @ nrm) / denom
        hit = centre + t * direction
        err[i] = np.linalg.norm(hit - surface.target)
    if unreliable[window - 1:].all():
        raise MetricError("every fitted line is parallel to the surface")
    return err, unreliable


def third_means(errors) -> tuple[float, float, float]:
    """Mean of the finite errors over the first, middle and final third of steps."""
    errors = np.asarray(errors, float)
    parts = np.array_split(np.arange(len(errors)), 3)
    out = []
    for idx in parts:
        vals = errors[idx]
        vals = vals[np.isfinite(vals)]
        out.append(float(vals.mean()) if vals.size else float("nan"))
    return tuple(out)


def start_point_variation(solutions) -> float:
    """Largest pairwise distance (mm) between the first points of the solutions."""
    starts = [_positions(s)[0] for s in solutions]
    if len(starts) < 2:
        raise MetricError("start point variation needs at least two solutions")
    return 10.0 * max(np.linalg.norm(a - b) for a, b in combinations(starts, 2))


def start_point_offset(solution, nominal_start) -> float:
    """Distance (mm) of a solution's first point from the nominal start point."""
    return 10.0 * float(np.linalg.norm(_positions(solution)[0] - np.asarray(nominal_start, float)))


def fluency(poses) -> float:
    """Mean squared change between consecutive poses (the L6 term)."""
    poses = np.asarray(poses, float)
    n, m = len(poses) - 1, poses.shape[1]
    if n < 1:
        return 0.0
    return float(np.sum(np.diff(poses, axis=0) ** 2) / (n * m))


def trajectory_metrics(solution, nominal_start, nominal_end, surface: SurfaceSpec | None = None,
                       skip: int = STARTING_PHASE) -> dict:
    """One row of the comparison tables."""
    dist = distance_from_line(solution, nominal_start, nominal_end)
    dev_all = pointing_deviation(solution, solution.goal)
    dev = pointing_deviation(solution, solution.goal, skip=skip)
    row = {
        "method": getattr(solution, "method", ""),
        "iterations": getattr(solution, "iterations", 0),
        "wall_time_s": getattr(solution, "wall_time", 0.0),
        "final_loss": getattr(solution, "final_loss", float("nan")),
        "distance_mm_mean": dist.mean,
        "distance_mm_std": dist.std,
        "pointing_deg_mean": dev.mean,
        "pointing_deg_std": dev.std,
        "pointing_all_deg_mean": dev_all.mean,
        "pointing_all_deg_std": dev_all.std,
        "start_offset_mm": start_point_offset(solution, nominal_start),
        "fluency_L6": fluency(solution.poses),
    }
    if surface is not None:
        err, _ = pointing_error_fit(solution, surface)
        first, middle, last = third_means(err)
        row.update({"fit_error_cm_middle": middle, "fit_error_cm_final": last})
    return row
