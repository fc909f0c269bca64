"""Regenerate the synthetic start/touch poses shipped with the NICO model.

Scene: a vertical "touchscreen" in front of the robot.  The start pose holds
the fingertip in front of the body with the forefinger pointing roughly
forward.  The screen plane lies DISTANCE cm ahead of the fingertip (measured
along the pointing direction) and faces the horizontal part of that
direction; its normal is written to the pose file.  Touch targets are
offsets on the screen from the point the finger aims at.

Each touch pose is found by walking the fingertip along the straight line
from the start point to the target in small bounded least-squares steps,
each warm-started from the previous pose, while the pointing target blends
from the start direction to the line direction over the first BLEND of the
walk.  Touch poses thus lie on the same IK branch as the start pose and point
along their line.

START_POSE came out of ``--search``: random forward-pointing start poses,
scored by the worst mean distance from the line of the loss minimum over the
seven lines (scipy L-BFGS on the shipped loss).  The grid is shifted to the
side the arm follows best.

    python3 tools/design_poses.py > src/trajgen/data/nico_poses.json
    python3 tools/design_poses.py --search 60 --seed 7     # slow
"""
import argparse
import json
import sys

import numpy as np
from scipy.optimize import least_squares, minimize

from trajgen.evaluation import distance_from_line
from trajgen.kinematics import fk, jacobian
from trajgen.optimizer import LossWeights, evaluate, init_logits
from trajgen.pathgen import ShapeSpec, goal_points_anchored
from trajgen.robot_model import load_nico

START_POSE = [55.39, 96.56, -44.99, 57.11, -138.37, 110.51, 125.16]
DISTANCE = 8.0
# (horizontal, vertical) offsets in cm on the screen; horizontal is "side" below
TOUCH_OFFSETS = [(-2.8, -1.2), (-1.4, -1.2), (0.0, -1.2), (-2.8, 1.2), (-1.4, 1.2), (0.0, 1.2), (-1.4, 0.0)]
FORWARD = np.array([-1.0, 0.0, 0.0])
STEPS = 40
BLEND = 0.3
MARGIN = 5.0


def unit(v):
    v = np.asarray(v, float)
    return v / np.linalg.norm(v)


def solve(chain, q0, point, direction, reg):
    lo, hi = chain.lower + MARGIN, chain.upper - MARGIN
    eye = reg * np.eye(chain.m)

    def residual(q):
        s = fk(chain, q)
        return np.concatenate([s.position - point, 10.0 * (s.direction - direction), reg * (q - q0)])

    def jac(q):
        _, J = jacobian(chain, q)
        return np.vstack([J[:3], 10.0 * J[3:], eye])

    return least_squares(residual, np.clip(q0, lo, hi), jac=jac, bounds=(lo, hi), xtol=1e-12, ftol=1e-12).x


def walk(chain, start, target):
    """Touch pose for ``target``; None if the walk does not get there."""
    s0 = fk(chain, start)
    v = unit(target - s0.position)
    q = start.copy()
    for k in range(1, STEPS + 1):
        t = k / STEPS
        a = min(1.0, t / BLEND)
        q = solve(chain, q, s0.position + t * (target - s0.position), unit((1 - a) * s0.direction + a * v), 0.05)
    q = np.round(solve(chain, q, target, v, 1e-3), 2)
    s = fk(chain, q)
    if np.linalg.norm(s.position - target) > 1e-2 or s.direction @ v < np.cos(np.radians(1.0)):
        return None
    return q


def screen(chain, start, distance):
    s = fk(chain, start)
    normal = unit([s.direction[0], s.direction[1], 0.0])
    centre = s.position + distance * s.direction / (s.direction @ normal)
    side = np.cross([0.0, 0.0, 1.0], normal)
    return normal, [centre + h * side + v * np.array([0.0, 0.0, 1.0]) for h, v in TOUCH_OFFSETS]


def design(chain, start, distance):
    normal, targets = screen(chain, start, distance)
    poses = {"start": np.asarray(start, float)}
    for k, target in enumerate(targets, 1):
        q = walk(chain, poses["start"], target)
        if q is None:
            return None, normal
        poses[f"touch_{k}"] = q
    return poses, normal


def optimum_distance(chain, ps, pe):
    """Mean distance (mm) from the line of the loss minimum found by L-BFGS."""
    P_s, P_e = fk(chain, ps).position, fk(chain, pe).position
    goal = goal_points_anchored(ShapeSpec("line"), P_s, P_e, 50)
    z0 = init_logits(ps, pe, 50, chain.lower, chain.upper)
    w = LossWeights()

    def f(x):
        r = evaluate(chain, x.reshape(z0.shape), goal, ps, pe, w)
        return r[0], r[2].ravel()

    x = minimize(f, z0.ravel(), jac=True, method="L-BFGS-B", options={"maxiter": 5000}).x
    return distance_from_line(evaluate(chain, x.reshape(z0.shape), goal, ps, pe, w)[4], P_s, P_e).mean


def search(chain, count, seed, distance):
    rng = np.random.default_rng(seed)
    lo, hi = chain.lower + 2 * MARGIN, chain.upper - 2 * MARGIN
    best, tried = None, 0
    while tried < count:
        q = np.round(rng.uniform(lo, hi), 2)
        s = fk(chain, q)
        if s.direction @ FORWARD < 0.8 or s.position @ FORWARD < 5 or s.position[2] < 20:
            continue
        tried += 1
        poses, _ = design(chain, q, distance)
        if poses is None:
            continue
        worst = max(optimum_distance(chain, q, p) for k, p in poses.items() if k != "start")
        print(f"candidate {tried}: {q.tolist()} worst {worst:.3f} mm", file=sys.stderr)
        if best is None or worst < best[0]:
            best = (worst, q)
    return None if best is None else best[1]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--distance", type=float, default=DISTANCE)
    ap.add_argument("--search", type=int, default=0, metavar="N", help="try N random start poses first")
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args(argv)
    chain = load_nico()
    start = np.array(START_POSE)
    if args.search:
        start = search(chain, args.search, args.seed, args.distance)
        if start is None:
            sys.exit("no feasible start pose found")
    poses, normal = design(chain, start, args.distance)
    if poses is None:
        sys.exit("a touch target is out of reach")
    doc = {
        "model": chain.name,
        "surface_normal": [round(float(x), 6) for x in normal],
        "poses": {k: [float(a) for a in v] for k, v in poses.items()},
    }
    print(json.dumps(doc, indent=2))


if __name__ == "__main__":
    main()
