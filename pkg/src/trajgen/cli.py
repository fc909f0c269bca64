"""Command-line entry point: ``trajgen <subcommand> [options]``.

Subcommands
-----------
generate  optimise one trajectory between two named poses
baseline  the same goal path solved point by point with damped least squares
eval      metrics tables, per-step errors and figures for finished runs
ablate    rerun one problem with each loss term switched off in turn
letters   draw a letter shape in the air with free start and end poses

Options may also come from a JSON file given with ``--config``; its keys are
the long option names with dashes or underscores.  Flags on the command line
win over the file.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__, export, plots
from .baseline_ik import IkConfig, ik_step_chain
from .evaluation import (
    MetricError,
    SurfaceSpec,
    distance_from_line,
    fluency,
    pointing_deviation,
    pointing_error_fit,
    start_point_variation,
    trajectory_metrics,
)
from .kinematics import fk
from .optimizer import (
    LossWeights,
    OptimizationError,
    OptimizerConfig,
    TrajectorySolution,
    composite_loss,
    generate_trajectory,
    generate_trajectory_unanchored,
)
from .pathgen import PathError, ShapeSpec, goal_points_anchored, goal_points_polyline, load_shape
from .robot_model import ModelFileError, load_model, load_poses, shipped_path

log = logging.getLogger("trajgen")

INTERPOLATION_TOL = 0.1   # degrees; c0 = 0 solutions closer than this count as angle-space linear
SHAKE_RATIO = 2.0         # L6 growth that counts as shaking when c6 = 0


class CliError(Exception):
    """A failure with the name of the stage it happened in."""

    def __init__(self, stage: str, message: str):
        super().__init__(f"{stage}: {message}")
        self.stage = stage


# ---------------------------------------------------------------- arguments

def _common(p: argparse.ArgumentParser, end_default="touch_1"):
    p.add_argument("--config", help="JSON file with default option values")
    p.add_argument("--model", help="kinematic model JSON (default: shipped NICO right arm)")
    p.add_argument("--poses", help="named poses JSON (default: shipped synthetic poses)")
    p.add_argument("--start", default="start", help="start pose name")
    p.add_argument("--end", default=end_default, help="end pose name")
    p.add_argument("--shape", default="line", help="line | polyline:PATH | spline:PATH")
    p.add_argument("--n", type=int, default=50, help="number of trajectory segments")
    p.add_argument("--duration-ms", type=float, default=2000.0, help="movement duration T")
    p.add_argument("--weights", default=str(LossWeights()), help="loss weights c0,...,c6")
    p.add_argument("--lr", type=float, default=0.1, help="Adam learning rate")
    p.add_argument("--max-iters", type=int, default=20000, help="iteration cap")
    p.add_argument("--seed", type=int, default=0, help="seed (the core computation draws no random numbers)")
    p.add_argument("--backend", choices=["native", "python", "tape"], help="loss/gradient implementation")
    p.add_argument("--out", default="out", help="output directory")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="trajgen", description="Shape-constrained arm trajectories.")
    ap.add_argument("--version", action="version", version=f"trajgen {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="optimise one trajectory")
    _common(p)

    p = sub.add_parser("baseline", help="point-by-point damped least squares IK")
    _common(p)
    p.add_argument("--order", choices=["backward", "forward"], default="backward")
    p.add_argument("--damping", type=float, default=IkConfig.damping)
    p.add_argument("--ik-iters", type=int, default=IkConfig.max_iterations, help="DLS iterations per point")
    p.add_argument("--orientation-weight", type=float, default=IkConfig.orientation_weight)

    p = sub.add_parser("eval", help="metrics and figures for finished runs")
    p.add_argument("runs", nargs="+", help="run directories written by generate or baseline")
    p.add_argument("--config", help="JSON file with default option values")
    p.add_argument("--surface-normal", help="x,y,z of the touched surface (default: from the runs)")
    p.add_argument("--out", default="out/eval", help="output directory")
    p.add_argument("-v", "--verbose", action="store_true")

    p = sub.add_parser("ablate", help="switch off loss terms one at a time")
    _common(p)
    p.add_argument("--terms", default="0,1,2,3,4,5,6", help="indices of loss terms to zero, one run each")

    p = sub.add_parser("letters", help="draw a letter in the air")
    _common(p, end_default="")
    p.set_defaults(shape="polyline:" + str(shipped_path("shapes/L.json")), max_iters=5000)
    p.add_argument("--letter", help="letter name among the shipped shapes (overrides --shape)")
    return ap


def parse_args(argv=None) -> argparse.Namespace:
    ap = build_parser()
    args = ap.parse_args(argv)
    if getattr(args, "config", None):
        try:
            doc = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            ap.error(f"cannot read config {args.config}: {exc}")
        if not isinstance(doc, dict):
            ap.error(f"config {args.config} must hold a JSON object")
        defaults = {k.replace("-", "_"): v for k, v in doc.items()}
        sub = ap._subparsers._group_actions[0].choices[args.command]
        known = {a.dest for a in sub._actions}
        unknown = sorted(set(defaults) - known)
        if unknown:
            ap.error(f"unknown config keys: {', '.join(unknown)}")
        sub.set_defaults(**defaults)
        args = ap.parse_args(argv)
    return args


# ------------------------------------------------------------------ helpers

def _stage(name):
    def wrap(fn):
        def inner(*a, **kw):
            try:
                return fn(*a, **kw)
            except CliError:
                raise
            except (ModelFileError, PathError, OptimizationError, MetricError, export.ExportError,
                    KeyError, ValueError, OSError) as exc:
                msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else str(exc)
                raise CliError(name, str(msg)) from exc
        return inner
    return wrap


@_stage("load model")
def _load_chain(args):
    return load_model(args.model or shipped_path("nico_right_arm.json"))


@_stage("load poses")
def _load_poses(args, chain):
    return load_poses(args.poses or shipped_path("nico_poses.json"), chain)


@_stage("load shape")
def _parse_shape(text: str) -> ShapeSpec:
    if text == "line":
        return ShapeSpec("line")
    kind, sep, path = text.partition(":")
    if not sep or kind not in ("polyline", "spline") or not path:
        raise ValueError(f"bad --shape {text!r}: expected line, polyline:PATH or spline:PATH")
    shape = load_shape(path)
    return ShapeSpec(kind, shape.points, shape.normal, shape.name)


@_stage("parse options")
def _optimizer_config(args):
    weights = LossWeights.parse(args.weights)
    if args.n < 1:
        raise ValueError("--n must be at least 1")
    if args.duration_ms <= 0:
        raise ValueError("--duration-ms must be positive")
    cfg = OptimizerConfig(lr=args.lr, max_iterations=args.max_iters, seed=args.seed, backend=args.backend)
    return weights, cfg


def _config_dict(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k not in ("verbose",)}


def _out_dir(args) -> Path:
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise CliError("create output directory", str(exc)) from exc
    return out


def _pose(pose_file, name):
    try:
        return pose_file[name]
    except KeyError as exc:
        raise CliError("select poses", exc.args[0]) from None


@_stage("write artifacts")
def _write_solution(out: Path, chain, sol: TrajectorySolution, args, extra_info=None, extra_files=()) -> list[Path]:
    files = [*extra_files,
        export.write_trajectory(out / "trajectory.csv", sol.poses, sol.positions, sol.directions),
        export.write_loss_trace(out / "loss.csv", sol.loss_trace),
        export.write_velocities(out / "velocity.csv", sol.poses, args.duration_ms),
        export.write_goal(out / "goal.csv", sol.goal),
    ]
    info = {
        "method": sol.method,
        "joint_names": list(chain.joint_names),
        "iterations": sol.iterations,
        "converged": sol.converged,
        "final_loss": sol.final_loss,
        "start_pose": args.start,
        "end_pose": args.end,
    }
    info.update(extra_info or {})
    # wall time is measured, so it goes to the summary only, keeping the manifest reproducible
    export.write_manifest(out / "manifest.json", args.command, _config_dict(args), files, {"result": info})
    return files


def _summary(sol: TrajectorySolution) -> str:
    return (f"iterations={sol.iterations} wall_time={sol.wall_time:.2f}s "
            f"final_loss={sol.final_loss:.6g} converged={str(sol.converged).lower()}")


# -------------------------------------------------------------- subcommands

def cmd_generate(args) -> int:
    chain = _load_chain(args)
    pf = _load_poses(args, chain)
    shape = _parse_shape(args.shape)
    weights, cfg = _optimizer_config(args)
    ps, pe = _pose(pf, args.start), _pose(pf, args.end)
    try:
        sol = generate_trajectory(chain, ps, pe, shape, args.n, weights, cfg)
    except OptimizationError as exc:
        raise CliError("optimise", str(exc)) from exc
    out = _out_dir(args)
    _write_solution(out, chain, sol, args, {"surface_normal": pf.surface_normal})
    print(_summary(sol))
    return 0


def _float_loss(chain, sol, ps, pe, weights):
    total, terms = composite_loss(sol.poses, sol.states, sol.goal, ps, pe, weights)
    return float(total), [float(t) for t in terms]


def cmd_baseline(args) -> int:
    chain = _load_chain(args)
    pf = _load_poses(args, chain)
    shape = _parse_shape(args.shape)
    weights, _ = _optimizer_config(args)
    ps, pe = _pose(pf, args.start), _pose(pf, args.end)
    try:
        goal = goal_points_anchored(shape, fk(chain, ps).position, fk(chain, pe).position, args.n)
    except PathError as exc:
        raise CliError("build goal path", str(exc)) from exc
    ik = IkConfig(damping=args.damping, max_iterations=args.ik_iters,
                  orientation_weight=args.orientation_weight)
    seed = pe if args.order == "backward" else ps
    try:
        sol = ik_step_chain(chain, seed, goal, args.order, ik)
    except (ValueError, RuntimeError) as exc:
        raise CliError("solve IK", str(exc)) from exc
    total, terms = _float_loss(chain, sol, ps, pe, weights)
    sol.loss_trace = np.array([[total, *terms]])
    out = _out_dir(args)
    _write_solution(out, chain, sol, args, {"surface_normal": pf.surface_normal,
                                             "reached": sol.info["reached"]})
    unreached = sol.info["reached"].count(False)
    print(_summary(sol) + f" unreached_points={unreached}")
    return 0


@_stage("read run")
@_stage("read run")
def _read_run(run: Path) -> dict:
    manifest = json.loads((run / "manifest.json").read_text())
    poses, P, D = export.read_trajectory(run / "trajectory.csv")
    goal = export.read_goal(run / "goal.csv")
    res = manifest.get("result", {})
    loss = export.read_loss_trace(run / "loss.csv")
    return {
        "name": run.name, "poses": poses, "positions": P, "directions": D, "goal": goal,
        "method": res.get("method", "?"), "iterations": res.get("iterations", 0),
        "final_loss": float(loss[-1, 0]) if len(loss) else float("nan"),
        "surface_normal": res.get("surface_normal"),
    }


class _RunView:
    """Adapter giving a CSV-loaded run the attributes metrics expect."""

    def __init__(self, run):
        self.positions = run["positions"]
        self.directions = run["directions"]
        self.poses = run["poses"]
        self.goal = run["goal"]
        self.method = run["method"]
        self.iterations = run["iterations"]
        self.final_loss = run["final_loss"]
        self.wall_time = float("nan")


def cmd_eval(args) -> int:
    runs = [_read_run(Path(r)) for r in args.runs]
    out = _out_dir(args)
    if args.surface_normal:
        try:
            normal = np.array([float(v) for v in args.surface_normal.split(",")])
            if normal.shape != (3,):
                raise ValueError
        except ValueError:
            raise CliError("parse options", f"bad --surface-normal {args.surface_normal!r}") from None
    else:
        normal = next((np.array(r["surface_normal"]) for r in runs if r["surface_normal"]), None)
    rows, steps = [], []
    for run in runs:
        view = _RunView(run)
        P_s, P_e = run["goal"].points[0], run["goal"].points[-1]
        surface = SurfaceSpec.through(P_e, normal) if normal is not None else None
        try:
            row = trajectory_metrics(view, P_s, P_e, surface)
        except MetricError as exc:
            raise CliError(f"metrics for {run['name']}", str(exc)) from exc
        row = {"run": run["name"], **row}
        row.pop("wall_time_s", None)
        rows.append(row)
        dist = distance_from_line(view, P_s, P_e).values
        dev = np.append(pointing_deviation(view, run["goal"]).values, np.nan)
        fit, unreliable = pointing_error_fit(view, surface) if surface is not None else (
            np.full(len(dist), np.nan), np.zeros(len(dist), bool))
        for i in range(len(dist)):
            steps.append({"run": run["name"], "method": run["method"], "step": i,
                          "distance_mm": dist[i], "pointing_deg": dev[i],
                          "fit_error_cm": fit[i], "fit_unreliable": bool(unreliable[i])})
        run["fit"] = fit
    by_method: dict[str, list] = {}
    for run, row in zip(runs, rows):
        by_method.setdefault(run["method"], []).append((run, row))
    summary = []
    for method, members in by_method.items():
        if len(members) >= 2:
            spv = start_point_variation([_RunView(r) for r, _ in members])
            summary.append({"method": method, "runs": len(members), "start_point_variation_mm": spv})
    files = [export.write_records(out / "metrics.csv", rows), export.write_records(out / "per_step.csv", steps)]
    if summary:
        files.append(export.write_records(out / "summary.csv", summary))
    for method, members in by_method.items():
        tag = method.replace("/", "_")
        files.append(plots.front_view(out / f"front_view_{tag}.svg",
                                      [(r["name"], r["positions"]) for r, _ in members],
                                      [r["goal"].points for r, _ in members], f"{method} (front view)"))
        if normal is not None:
            files.append(plots.pointing_error(out / f"pointing_error_{tag}.svg",
                                              [(r["name"], r["fit"]) for r, _ in members],
                                              f"{method}: pointing error"))
    report = _report(rows, summary)
    (out / "report.txt").write_text(report)
    files.append(out / "report.txt")
    export.write_manifest(out / "manifest.json", "eval", _config_dict(args), files)
    print(report, end="")
    return 0


def _report(rows, summary) -> str:
    lines = []
    for method in dict.fromkeys(r["method"] for r in rows):
        lines.append(f"[{method}]")
        lines.append(f"{'run':<16}{'iter':>8}{'loss':>10}{'dist mm':>18}{'pointing deg':>18}{'start mm':>10}")
        for r in rows:
            if r["method"] != method:
                continue
            lines.append(
                f"{r['run']:<16}{r['iterations']:>8}{r['final_loss']:>10.3f}"
                f"{r['distance_mm_mean']:>9.3f} ± {r['distance_mm_std']:<6.3f}"
                f"{r['pointing_deg_mean']:>9.1f} ± {r['pointing_deg_std']:<6.1f}"
                f"{r['start_offset_mm']:>10.3f}")
    for s in summary:
        lines.append(f"start point variation ({s['method']}, {s['runs']} runs): {s['start_point_variation_mm']:.3f} mm")
    return "\n".join(lines) + "\n"


def cmd_ablate(args) -> int:
    chain = _load_chain(args)
    pf = _load_poses(args, chain)
    shape = _parse_shape(args.shape)
    weights, cfg = _optimizer_config(args)
    try:
        terms = [int(t) for t in args.terms.split(",") if t.strip()]
        if any(t < 0 or t > 6 for t in terms):
            raise ValueError
    except ValueError:
        raise CliError("parse options", f"bad --terms {args.terms!r}: expected indices 0..6") from None
    ps, pe = _pose(pf, args.start), _pose(pf, args.end)
    out = _out_dir(args)
    variants = [("full", weights)] + [(f"no_L{t}", weights.zeroed(t)) for t in terms]
    interp = ps + (np.arange(args.n + 1)[:, None] / args.n) * (pe - ps)
    rows, files, full_l6 = [], [], None
    P_s, P_e = fk(chain, ps).position, fk(chain, pe).position
    for name, w in variants:
        if not np.any(w.as_array()):
            log.warning("skipping %s: every weight is zero", name)
            continue
        try:
            sol = generate_trajectory(chain, ps, pe, shape, args.n, w, cfg)
        except OptimizationError as exc:
            raise CliError(f"optimise {name}", str(exc)) from exc
        sub = out / name
        sub.mkdir(exist_ok=True)
        files += _write_solution(sub, chain, sol, args, {"variant": name, "weights": str(w)})
        l6 = fluency(sol.poses)
        if name == "full":
            full_l6 = l6
        interp_dev = float(np.max(np.abs(sol.poses - interp)))
        row = {
            "variant": name,
            "weights": str(w),
            "iterations": sol.iterations,
            "converged": sol.converged,
            "final_loss": sol.final_loss,
            "distance_mm_mean": distance_from_line(sol, P_s, P_e).mean if shape.kind == "line" else float("nan"),
            "pointing_deg_mean": pointing_deviation(sol, sol.goal, skip=10).mean,
            "L6": l6,
            "L6_ratio_to_full": l6 / full_l6 if full_l6 else float("nan"),
            "max_dev_from_interpolation_deg": interp_dev,
        }
        flags = []
        if interp_dev < INTERPOLATION_TOL:
            flags.append("angle-space-linear")
        if full_l6 and l6 >= SHAKE_RATIO * full_l6:
            flags.append("shaking")
        row["flags"] = " ".join(flags)
        rows.append(row)
        print(f"{name:<8} loss={sol.final_loss:.4g} L6={l6:.4g} flags={row['flags'] or '-'}")
    files.append(export.write_records(out / "ablation.csv", rows))
    export.write_manifest(out / "manifest.json", "ablate", _config_dict(args), files)
    return 0


def cmd_letters(args) -> int:
    chain = _load_chain(args)
    pf = _load_poses(args, chain)
    if args.letter:
        try:
            path = shipped_path(f"shapes/{args.letter}.json")
        except FileNotFoundError as exc:
            raise CliError("load shape", f"no shipped letter {args.letter!r}") from exc
        shape = _parse_shape(f"{load_shape(path).kind}:{path}")
    else:
        shape = _parse_shape(args.shape)
    if shape.kind == "line":
        raise CliError("load shape", "letters need a polyline or spline shape")
    weights, cfg = _optimizer_config(args)
    init = _pose(pf, args.start)
    anchor = fk(chain, init).position
    try:
        goal = goal_points_polyline(shape, anchor, args.n)
        sol = generate_trajectory_unanchored(chain, goal, init, weights, cfg)
    except (PathError, OptimizationError) as exc:
        raise CliError("optimise", str(exc)) from exc
    out = _out_dir(args)
    err_mm = 10.0 * np.linalg.norm(sol.positions - goal.points, axis=1)
    svg = plots.letter_trace(out / "letter.svg", sol.positions, goal.points, shape.normal, f"Letter {shape.name}")
    _write_solution(out, chain, sol, args, {"letter": shape.name, "goal_distance_mm_mean": float(err_mm.mean())},
                    [svg])
    print(_summary(sol) + f" goal_distance_mm_mean={err_mm.mean():.4f}")
    return 0


COMMANDS = {
    "generate": cmd_generate,
    "baseline": cmd_baseline,
    "eval": cmd_eval,
    "ablate": cmd_ablate,
    "letters": cmd_letters,
}


def main(argv=None) -> int:
    args = parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except CliError as exc:
        print(f"trajgen {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
