"""SVG figures: front-view trajectories, pointing-error curves, letter traces."""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .pathgen import plane_basis  # noqa: E402

# fixed ids and no timestamp so repeated runs write identical files
plt.rcParams["svg.hashsalt"] = "trajgen"
_META = {"Date": None, "Creator": "trajgen"}


def _save(fig, path) -> Path:
    path = Path(path)
    fig.savefig(path, format="svg", metadata=_META)
    plt.close(fig)
    return path


def front_view(path, trajectories, goals=None, title="Trajectories (front view)"):
    """Overlay of effector paths projected on the y-z plane.

    ``trajectories`` is a list of ``(label, positions)``; ``goals`` an optional
    list of goal-point arrays drawn dashed underneath.
    """
    fig, ax = plt.subplots(figsize=(6, 5))
    for pts in goals or []:
        pts = np.asarray(pts)
        ax.plot(pts[:, 1], pts[:, 2], "--", color="0.7", lw=1)
    for label, pos in trajectories:
        pos = np.asarray(pos)
        ax.plot(pos[:, 1], pos[:, 2], "-", lw=1.2, label=label)
        ax.plot(pos[-1, 1], pos[-1, 2], "o", ms=3, color=ax.lines[-1].get_color())
    if trajectories:
        start = np.asarray(trajectories[0][1])[0]
        ax.plot(start[1], start[2], "ks", ms=5, label="start")
    ax.set_xlabel("y [cm]")
    ax.set_ylabel("z [cm]")
    ax.set_aspect("equal", adjustable="datalim")
    ax.set_title(title)
    ax.legend(fontsize=7, loc="best")
    return _save(fig, path)


def pointing_error(path, curves, title="Pointing error of the fitted line"):
    """Per-step error curves; ``curves`` is a list of ``(label, errors_cm)``."""
    fig, ax = plt.subplots(figsize=(7, 4))
    for label, err in curves:
        err = np.asarray(err, float)
        ax.plot(np.arange(len(err)), err, lw=1.2, label=label)
    ax.set_xlabel("step")
    ax.set_ylabel("error [cm]")
    ax.set_title(title)
    ax.legend(fontsize=7, loc="best")
    return _save(fig, path)


def loss_curve(path, trace, title="Loss"):
    trace = np.asarray(trace, float)
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.semilogy(trace[:, 0], lw=1.2, label="L")
    for k in range(1, trace.shape[1]):
        ax.semilogy(np.maximum(trace[:, k], 1e-16), lw=0.8, label=f"L{k - 1}")
    ax.set_xlabel("iteration")
    ax.set_title(title)
    ax.legend(fontsize=7, ncol=4)
    return _save(fig, path)


def letter_trace(path, positions, goal_points, normal, title="Letter"):
    """Traced path and goal path in the drawing plane coordinates."""
    u, v = plane_basis(np.asarray(normal, float))
    origin = np.asarray(goal_points, float)[0]

    def flat(p):
        rel = np.asarray(p, float) - origin
        return rel @ u, rel @ v

    fig, ax = plt.subplots(figsize=(5, 5))
    gx, gy = flat(goal_points)
    px, py = flat(positions)
    ax.plot(gx, gy, "o", ms=3, color="0.6", label="goal")
    ax.plot(px, py, "-", lw=1.5, label="traced")
    ax.set_aspect("equal", adjustable="datalim")
    ax.set_xlabel("u [cm]")
    ax.set_ylabel("v [cm]")
    ax.set_title(title)
    ax.legend(fontsize=7)
    return _save(fig, path)
