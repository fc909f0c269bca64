"""Time one loss-and-gradient evaluation per backend on the NICO arm.

    python3 benchmarks/bench_kernel.py --n 50 --repeat 20
"""
import argparse
import timeit

import numpy as np

from trajgen import kernel
from trajgen.kinematics import fk
from trajgen.optimizer import LossWeights, evaluate, init_logits
from trajgen.pathgen import goal_points_line
from trajgen.robot_model import load_nico, load_poses, shipped_path


def setup(n):
    chain = load_nico()
    poses = load_poses(shipped_path("nico_poses.json"), chain)
    ps, pe = poses["start"], poses["touch_1"]
    goal = goal_points_line(fk(chain, ps).position, fk(chain, pe).position, n)
    z = init_logits(ps, pe, n, chain.lower, chain.upper)
    return chain, z, goal, ps, pe


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=50, help="trajectory segments")
    ap.add_argument("--repeat", type=int, default=20)
    ap.add_argument("--skip-tape", action="store_true", help="leave out the slow scalar-tape route")
    args = ap.parse_args(argv)

    chain, z, goal, ps, pe = setup(args.n)
    w = LossWeights()
    backends = sorted(kernel.BACKENDS) + ([] if args.skip_tape else ["tape"])
    ref = evaluate(chain, z, goal, ps, pe, w, "python")
    print(f"n={args.n}, m={chain.m}, default backend: {kernel.BACKEND}")
    print(f"{'backend':<8}{'ms/eval':>12}{'vs python':>10}{'max |grad diff|':>18}")
    times, diffs = {}, {}
    for b in backends:
        reps = max(1, args.repeat // 10) if b == "tape" else args.repeat
        times[b] = min(timeit.repeat(lambda: evaluate(chain, z, goal, ps, pe, w, b), number=1, repeat=reps))
        diffs[b] = np.max(np.abs(evaluate(chain, z, goal, ps, pe, w, b)[2] - ref[2]))
    for b in backends:
        print(f"{b:<8}{1e3 * times[b]:>12.3f}{times['python'] / times[b]:>10.2f}{diffs[b]:>18.2e}")

if __name__ == "__main__":
    main()
