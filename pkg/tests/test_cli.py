import json

import numpy as np
import pytest

from trajgen.cli import main, parse_args
from trajgen.export import read_table, read_trajectory


def run(*argv):
    return main([str(a) for a in argv])


@pytest.fixture(scope="module")
def generated(tmp_path_factory):
    out = tmp_path_factory.mktemp("gen")
    assert run("generate", "--end", "touch_2", "--out", out) == 0
    return out


def test_generate_writes_artifacts(generated):
    header, rows = read_table(generated / "trajectory.csv")
    assert len(rows) == 51
    assert header[:8] == ["step"] + [f"theta_{j}" for j in range(7)]
    for name in ("loss.csv", "velocity.csv", "goal.csv"):
        assert (generated / name).exists()
    doc = json.loads((generated / "manifest.json").read_text())
    assert set(doc["artifacts"]) == {"trajectory.csv", "loss.csv", "velocity.csv", "goal.csv"}
    assert doc["config"]["weights"] == "1,50,5,100,10,200,1"
    assert doc["config"]["lr"] == 0.1 and doc["config"]["n"] == 50
    assert doc["result"]["converged"] is True


def test_velocity_file_covers_duration(generated):
    _, rows = read_table(generated / "velocity.csv")
    assert len(rows) == 50 and float(rows[-1][2]) == pytest.approx(2000.0)


def test_missing_pose_fails(tmp_path, capsys):
    assert run("generate", "--end", "touch_99", "--out", tmp_path / "x") == 1
    err = capsys.readouterr().err
    assert "select poses" in err and "touch_99" in err
    assert not (tmp_path / "x" / "trajectory.csv").exists()


@pytest.mark.parametrize("argv,stage", [
    (["--weights", "1,2,3"], "parse options"),
    (["--shape", "circle"], "load shape"),
    (["--model", "/nonexistent.json"], "load model"),
    (["--n", "0"], "parse options"),
])
def test_bad_options(tmp_path, capsys, argv, stage):
    assert run("generate", *argv, "--out", tmp_path) == 1
    assert stage in capsys.readouterr().err


def test_config_file_and_override(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"n": 12, "max-iters": 7, "end": "touch_4"}))
    args = parse_args(["generate", "--config", str(cfg), "--n", "9"])
    assert (args.n, args.max_iters, args.end) == (9, 7, "touch_4")
    cfg.write_text(json.dumps({"bogus": 1}))
    with pytest.raises(SystemExit):
        parse_args(["generate", "--config", str(cfg)])


def test_runs_are_reproducible(tmp_path):
    for k in (1, 2):
        assert run("generate", "--end", "touch_5", "--n", 20, "--out", tmp_path / str(k)) == 0
    for name in ("trajectory.csv", "loss.csv", "manifest.json"):
        a = (tmp_path / "1" / name).read_bytes()
        b = (tmp_path / "2" / name).read_bytes()
        if name == "manifest.json":
            a, b = (json.loads(x) for x in (a, b))
            for d in (a, b):
                d["config"].pop("out")
        assert a == b, name


def test_baseline_and_eval(generated, tmp_path):
    base = tmp_path / "base"
    assert run("baseline", "--end", "touch_2", "--out", base) == 0
    poses, P, D = read_trajectory(base / "trajectory.csv")
    assert poses.shape == (51, 7)
    ev = tmp_path / "eval"
    gen2 = tmp_path / "gen2"
    assert run("generate", "--end", "touch_3", "--n", 30, "--out", gen2) == 0
    assert run("eval", generated, gen2, base, "--out", ev) == 0
    header, rows = read_table(ev / "metrics.csv")
    assert len(rows) == 3 and "pointing_deg_mean" in header
    _, steps = read_table(ev / "per_step.csv")
    assert len(steps) == 51 + 31 + 51
    _, summary = read_table(ev / "summary.csv")
    assert summary[0][0] == "neural"
    assert (ev / "front_view_neural.svg").exists() and (ev / "pointing_error_baseline-dls.svg").exists()
    assert "start point variation" in (ev / "report.txt").read_text()


def test_eval_missing_run(tmp_path, capsys):
    assert run("eval", tmp_path / "nothing", "--out", tmp_path / "ev") == 1
    assert "read run" in capsys.readouterr().err


def test_letters(tmp_path, capsys):
    out = tmp_path / "L"
    assert run("letters", "--out", out) == 0
    assert (out / "letter.svg").read_text().startswith("<?xml")
    doc = json.loads((out / "manifest.json").read_text())
    assert "letter.svg" in doc["artifacts"]
    assert doc["result"]["goal_distance_mm_mean"] < 2.0
    assert "goal_distance_mm_mean=" in capsys.readouterr().out


def test_letters_reject_line(tmp_path, capsys):
    assert run("letters", "--shape", "line", "--out", tmp_path) == 1
    assert "letters need" in capsys.readouterr().err


def test_ablate(tmp_path):
    out = tmp_path / "ab"
    assert run("ablate", "--end", "touch_3", "--n", 20, "--terms", "0,6", "--out", out) == 0
    header, rows = read_table(out / "ablation.csv")
    names = [r[0] for r in rows]
    assert names == ["full", "no_L0", "no_L6"]
    flags = dict(zip(names, (r[header.index("flags")] for r in rows)))
    assert "shaking" in flags["no_L6"]
    assert (out / "no_L6" / "trajectory.csv").exists()
    assert json.loads((out / "manifest.json").read_text())["command"] == "ablate"
