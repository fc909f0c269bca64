import numpy as np
import pytest

from trajgen import kernel
from trajgen.kinematics import fk
from trajgen.optimizer import LossWeights, evaluate, init_logits
from trajgen.pathgen import ShapeSpec, goal_points_anchored

BACKENDS = sorted(kernel.BACKENDS) + ["tape"]


def problem(chain, ps, pe, n, rng, shape=None):
    goal = goal_points_anchored(shape or ShapeSpec("line"), fk(chain, ps).position, fk(chain, pe).position, n)
    z = init_logits(ps, pe, n, chain.lower, chain.upper) + rng.normal(scale=0.3, size=(n + 1, chain.m))
    return z, goal


@pytest.fixture
def nico_problem(nico, nico_poses, rng):
    ps, pe = nico_poses["start"], nico_poses["touch_3"]
    z, goal = problem(nico, ps, pe, 6, rng)
    return nico, z, goal, ps, pe


def test_native_backend_is_built():
    assert "native" in kernel.BACKENDS


@pytest.mark.parametrize("backend", BACKENDS)
def test_backends_agree(nico_problem, backend):
    chain, z, goal, ps, pe = nico_problem
    w = LossWeights()
    ref = evaluate(chain, z, goal, ps, pe, w, backend="python")
    got = evaluate(chain, z, goal, ps, pe, w, backend=backend)
    assert got[0] == pytest.approx(ref[0], rel=1e-12)
    np.testing.assert_allclose(got[1], ref[1], rtol=1e-10, atol=1e-14)
    np.testing.assert_allclose(got[2], ref[2], rtol=1e-9, atol=1e-12)
    np.testing.assert_allclose(got[3], ref[3], rtol=0, atol=1e-12)
    np.testing.assert_allclose(got[4], ref[4], rtol=0, atol=1e-12)


@pytest.mark.parametrize("backend", BACKENDS)
def test_positions_match_fk(nico_problem, backend):
    chain, z, goal, ps, pe = nico_problem
    _, _, _, theta, P, D = evaluate(chain, z, goal, ps, pe, LossWeights(), backend=backend)
    for q, p, d in zip(theta, P, D):
        s = fk(chain, q)
        np.testing.assert_allclose(p, s.position, atol=1e-12)
        np.testing.assert_allclose(d, s.direction, atol=1e-12)


@pytest.mark.parametrize("backend", BACKENDS)
def test_gradient_matches_central_differences(toy, rng, backend):
    ps, pe = np.array([20.0, 40.0]), np.array([70.0, -30.0])
    z, goal = problem(toy, ps, pe, 4, rng, ShapeSpec("spline", [[0, 0], [1, 0.5], [2, 0]], normal=(0, 0, 1)))
    w = LossWeights(1, 3, 0.5, 0.5, 2, 2, 1)
    _, _, grad, *_ = evaluate(toy, z, goal, ps, pe, w, backend=backend)
    h = 1e-6
    for idx in np.ndindex(z.shape):
        zp, zm = z.copy(), z.copy()
        zp[idx] += h
        zm[idx] -= h
        fd = (evaluate(toy, zp, goal, ps, pe, w, backend)[0] - evaluate(toy, zm, goal, ps, pe, w, backend)[0]) / (2 * h)
        assert grad[idx] == pytest.approx(fd, rel=1e-5, abs=1e-7)


def test_zero_weights_give_zero_gradient(nico_problem):
    chain, z, goal, ps, pe = nico_problem
    loss, terms, grad, *_ = evaluate(chain, z, goal, ps, pe, np.zeros(7))
    assert loss == 0.0 and not grad.any()
    assert np.all(terms >= 0)


def test_weights_scale_linearly(nico_problem):
    chain, z, goal, ps, pe = nico_problem
    a = evaluate(chain, z, goal, ps, pe, LossWeights())
    b = evaluate(chain, z, goal, ps, pe, LossWeights().as_array() * 3)
    assert b[0] == pytest.approx(3 * a[0], rel=1e-12)
    np.testing.assert_allclose(b[2], 3 * a[2], rtol=1e-12)


def test_pure_python_switch():
    import os
    import subprocess
    import sys

    env = dict(os.environ, TRAJGEN_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "from trajgen import kernel; print(kernel.BACKEND, sorted(kernel.BACKENDS))"],
                         env=env, capture_output=True, text=True, check=True).stdout
    assert out.strip() == "python ['python']"
