"""Goal paths: the n+1 goal points and n goal directions a trajectory follows."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.interpolate import CubicSpline

SHAPE_KINDS = ("line", "polyline", "spline")
DEFAULT_NORMAL = (-1.0, 0.0, 0.0)


class PathError(ValueError):
    pass


@dataclass(frozen=True)
class GoalPath:
    points: np.ndarray    # (n+1, 3) cm
    vectors: np.ndarray   # (n, 3)

    def __post_init__(self):
        pts = np.asarray(self.points, float)
        vecs = np.asarray(self.vectors, float).reshape(-1, 3)
        if pts.ndim != 2 or pts.shape[1] != 3 or len(pts) < 1:
            raise PathError("goal points must be an (n+1, 3) array")
        if len(vecs) not in (0, len(pts) - 1):
            raise PathError(f"{len(pts)} goal points need {len(pts) - 1} goal vectors, got {len(vecs)}")
        if len(vecs) and np.any(np.linalg.norm(vecs, axis=1) <= 0):
            raise PathError("goal vectors must be nonzero")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "vectors", vecs)

    @property
    def n(self) -> int:
        return len(self.points) - 1


@dataclass(frozen=True)
class ShapeSpec:
    """Requested path shape.

    ``points`` holds 2-D coordinates (cm) in the drawing plane for polyline and
    spline kinds; the plane passes through the anchor with unit ``normal``.
    """

    kind: str = "line"
    points: np.ndarray = field(default_factory=lambda: np.zeros((0, 2)))
    normal: tuple = DEFAULT_NORMAL
    name: str = ""

    def __post_init__(self):
        if self.kind not in SHAPE_KINDS:
            raise PathError(f"unknown shape kind {self.kind!r}")
        pts = np.asarray(self.points, float).reshape(-1, 2)
        object.__setattr__(self, "points", pts)
        nrm = np.asarray(self.normal, float)
        if nrm.shape != (3,) or np.linalg.norm(nrm) == 0:
            raise PathError("plane normal must be a nonzero 3-vector")
        object.__setattr__(self, "normal", tuple(nrm / np.linalg.norm(nrm)))
        if self.kind != "line" and len(pts) < 2:
            raise PathError(f"{self.kind} needs at least 2 points")


def load_shape(path) -> ShapeSpec:
    """Read a shape file: ``{"kind": "polyline", "points": [[u, v], ...], "normal": [x, y, z]}``."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise PathError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    return ShapeSpec(
        kind=doc.get("kind", "polyline"),
        points=np.array(doc.get("points", []), float),
        normal=tuple(doc.get("normal", DEFAULT_NORMAL)),
        name=doc.get("name", path.stem),
    )


def goal_points_line(p_start, p_end, n: int) -> GoalPath:
    p_start = np.asarray(p_start, float)
    p_end = np.asarray(p_end, float)
    if n < 1:
        raise PathError("n must be at least 1")
    if np.array_equal(p_start, p_end):
        raise PathError("start and end points coincide")
    i = np.arange(n + 1)[:, None]
    points = p_start + (i / n) * (p_end - p_start)
    points[n] = p_end
    vectors = np.tile((p_end - p_start) / n, (n, 1))
    return GoalPath(points, vectors)


def plane_basis(normal) -> tuple[np.ndarray, np.ndarray]:
    """In-plane (u, v) axes: v is world up projected on the plane, u = v x normal."""
    nrm = np.asarray(normal, float)
    nrm = nrm / np.linalg.norm(nrm)
    up = np.array([0.0, 0.0, 1.0])
    if abs(nrm @ up) > 0.999:
        up = np.array([1.0, 0.0, 0.0])
    v = up - (up @ nrm) * nrm
    v /= np.linalg.norm(v)
    u = np.cross(v, nrm)
    return u, v


def resample_arclength(curve: np.ndarray, n: int) -> np.ndarray:
    """``n + 1`` points evenly spaced by arc length along a polyline."""
    curve = np.asarray(curve, float)
    seg = np.linalg.norm(np.diff(curve, axis=0), axis=1)
    total = seg.sum()
    if total <= 0:
        raise PathError("polyline has zero length")
    if n < 1:
        raise PathError("n must be at least 1")
    s = np.concatenate([[0.0], np.cumsum(seg)])
    targets = np.linspace(0.0, total, n + 1)
    # drop zero-length segments so interpolation is well defined
    keep = np.concatenate([[True], seg > 0])
    s, curve = s[keep], curve[keep]
    out = np.column_stack([np.interp(targets, s, curve[:, k]) for k in range(curve.shape[1])])
    out[0], out[-1] = curve[0], curve[-1]
    return out


def spline_curve(control: np.ndarray, samples: int = 2000) -> np.ndarray:
    """Dense samples of a natural cubic spline through ``control`` points."""
    control = np.asarray(control, float)
    chord = np.linalg.norm(np.diff(control, axis=0), axis=1)
    if np.any(chord <= 0):
        raise PathError("consecutive spline control points must differ")
    t = np.concatenate([[0.0], np.cumsum(chord)])
    if len(control) == 2:
        return control
    spline = CubicSpline(t, control, bc_type="natural")
    return spline(np.linspace(0.0, t[-1], samples))


def _shape_curve(shape: ShapeSpec) -> np.ndarray:
    if shape.kind == "spline":
        return spline_curve(shape.points)
    return shape.points


def _in_plane(shape, anchor, n):
    anchor = np.asarray(anchor, float)
    flat = resample_arclength(_shape_curve(shape), n)
    flat = flat - flat[0]
    u, v = plane_basis(shape.normal)
    return anchor + flat[:, :1] * u + flat[:, 1:] * v


def goal_points_polyline(shape: ShapeSpec, anchor, n: int) -> GoalPath:
    """Draw ``shape`` in its plane, starting at ``anchor``.

    Goal vectors all equal the unit plane normal, i.e. the effector keeps
    pointing through the drawing plane.
    """
    if shape.kind == "line":
        raise PathError("line shapes need start and end points, use goal_points_line")
    points = _in_plane(shape, anchor, n)
    vectors = np.tile(np.asarray(shape.normal), (n, 1))
    return GoalPath(points, vectors)


goal_points_spline = goal_points_polyline


def goal_points_anchored(shape: ShapeSpec, p_start, p_end, n: int) -> GoalPath:
    """Goal path between two fixed points.

    Lines interpolate directly.  Other shapes are mapped by a similarity so
    their first point lands on ``p_start`` and their last on ``p_end``; the
    chord lies along the in-plane u axis before mapping and the curve bulges
    inside the plane spanned by the chord and ``normal x chord``.  Goal
    vectors are the differences of consecutive goal points.
    """
    if shape.kind == "line":
        return goal_points_line(p_start, p_end, n)
    p_start = np.asarray(p_start, float)
    p_end = np.asarray(p_end, float)
    chord = p_end - p_start
    length = np.linalg.norm(chord)
    if length == 0:
        raise PathError("start and end points coincide")
    flat = resample_arclength(_shape_curve(shape), n)
    a, b = flat[0], flat[-1]
    d = b - a
    if np.linalg.norm(d) == 0:
        raise PathError("closed shapes cannot be anchored between two points")
    # rotate/scale 2-D so that a -> (0, 0) and b -> (length, 0)
    cth, sth = d / np.linalg.norm(d)
    rot = np.array([[cth, sth], [-sth, cth]])
    local = (flat - a) @ rot.T * (length / np.linalg.norm(d))
    e1 = chord / length
    e2 = np.cross(np.asarray(shape.normal), e1)
    if np.linalg.norm(e2) < 1e-9:
        raise PathError("chord is parallel to the shape normal")
    e2 /= np.linalg.norm(e2)
    points = p_start + local[:, :1] * e1 + local[:, 1:] * e2
    points[0], points[-1] = p_start, p_end
    return GoalPath(points, np.diff(points, axis=0))


def angular_velocities(trajectory, duration_ms: float) -> np.ndarray:
    """Constant per-segment joint speeds in deg/s; each segment lasts T/n."""
    traj = np.asarray(trajectory, float)
    if traj.ndim != 2 or len(traj) < 2:
        raise PathError("trajectory needs at least two poses")
    if duration_ms <= 0:
        raise PathError("duration must be positive")
    n = len(traj) - 1
    dt = duration_ms / n / 1000.0
    return np.diff(traj, axis=0) / dt
