"""CSV and JSON artifacts written by the command-line tool.

Floats are written with ``repr`` so a CSV read back gives exactly the values
that were written, and two identical runs give byte-identical files.
"""
from __future__ import annotations

import csv
import hashlib
import json
import platform
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .pathgen import GoalPath, angular_velocities

LOSS_COLUMNS = ["L", "L0", "L1", "L2", "L3", "L4", "L5", "L6"]


class ExportError(ValueError):
    pass


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def write_table(path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    return path


def read_table(path) -> tuple[list[str], list[list[str]]]:
    path = Path(path)
    try:
        with path.open(newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise ExportError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise ExportError(f"{path}: empty file")
    return rows[0], rows[1:]


def _floats(path, rows, start=0, stop=None) -> np.ndarray:
    try:
        return np.array([[float(v) if v != "" else np.nan for v in r[start:stop]] for r in rows], float)
    except ValueError as exc:
        raise ExportError(f"{path}: non-numeric value ({exc})") from exc


def trajectory_header(m: int) -> list[str]:
    return ["step", *(f"theta_{j}" for j in range(m)), "x", "y", "z", "dx", "dy", "dz"]


def write_trajectory(path, poses, positions, directions) -> Path:
    poses = np.asarray(poses, float)
    P = np.asarray(positions, float)
    D = np.asarray(directions, float)
    rows = ([i, *poses[i], *P[i], *D[i]] for i in range(len(poses)))
    return write_table(path, trajectory_header(poses.shape[1]), rows)


def read_trajectory(path):
    """Return ``(poses, positions, directions)`` from a trajectory CSV."""
    header, rows = read_table(path)
    m = len(header) - 7
    if m < 1 or header != trajectory_header(m):
        raise ExportError(f"{path}: not a trajectory file (header {header})")
    data = _floats(path, rows, 1)
    return data[:, :m], data[:, m:m + 3], data[:, m + 3:]


def write_loss_trace(path, trace) -> Path:
    trace = np.asarray(trace, float).reshape(-1, 8)
    return write_table(path, ["iteration", *LOSS_COLUMNS], ([i, *row] for i, row in enumerate(trace)))


def read_loss_trace(path) -> np.ndarray:
    header, rows = read_table(path)
    if header != ["iteration", *LOSS_COLUMNS]:
        raise ExportError(f"{path}: not a loss trace (header {header})")
    return _floats(path, rows, 1)


def write_velocities(path, poses, duration_ms: float) -> Path:
    vel = angular_velocities(poses, duration_ms)
    n = len(vel)
    dt = duration_ms / n
    header = ["segment", "t_start_ms", "t_end_ms", *(f"omega_{j}" for j in range(vel.shape[1]))]
    return write_table(path, header, ([i, i * dt, (i + 1) * dt, *vel[i]] for i in range(n)))


def write_goal(path, goal: GoalPath) -> Path:
    """Goal points and vectors; the last point has no vector."""
    rows = []
    for i, p in enumerate(goal.points):
        v = goal.vectors[i] if i < len(goal.vectors) else ("", "", "")
        rows.append([i, *p, *v])
    return write_table(path, ["step", "gx", "gy", "gz", "vx", "vy", "vz"], rows)


def read_goal(path) -> GoalPath:
    header, rows = read_table(path)
    if header != ["step", "gx", "gy", "gz", "vx", "vy", "vz"]:
        raise ExportError(f"{path}: not a goal file (header {header})")
    data = _floats(path, rows, 1)
    vecs = data[:-1, 3:]
    if np.isnan(vecs).all():
        vecs = np.zeros((0, 3))
    return GoalPath(data[:, :3], vecs)


def write_records(path, records: Sequence[dict]) -> Path:
    """One CSV row per dict; columns in first-seen order."""
    cols: list[str] = []
    for r in records:
        cols.extend(k for k in r if k not in cols)
    return write_table(path, cols, ([r.get(k, "") for k in cols] for r in records))


def sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def environment() -> dict:
    import scipy

    from . import __version__, kernel

    return {
        "trajgen": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "kernel_backend": kernel.BACKEND,
        "platform": platform.platform(),
    }


def write_manifest(path, command: str, config: dict, artifacts: Sequence, extra: dict | None = None) -> Path:
    """JSON record of a run: configuration, versions and artifact digests."""
    path = Path(path)
    doc = {
        "command": command,
        "config": config,
        "environment": environment(),
        "artifacts": {Path(a).name: sha256(a) for a in artifacts},
    }
    if extra:
        doc.update(extra)
    path.write_text(json.dumps(doc, indent=2, sort_keys=True, default=_json_default) + "\n")
    return path


def _json_default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if isinstance(obj, Path):
        return str(obj)
    raise TypeError(f"cannot serialise {type(obj).__name__}")
