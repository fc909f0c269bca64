import numpy as np
import pytest

from trajgen.kinematics import KinematicChain, RotConst, RotJoint, Translate
from trajgen.robot_model import load_nico, load_poses, shipped_path

L1, L2 = 3.0, 2.0


def two_link(l1=L1, l2=L2, limits=((-170.0, 170.0), (-170.0, 170.0))):
    """Planar arm in the x-y plane; the effector points along the second link."""
    prims = [
        RotJoint("z", 0),
        Translate((l1, 0, 0)),
        RotJoint("z", 1),
        Translate((l2, 0, 0)),
        RotConst("y", -90),
    ]
    return KinematicChain(prims, ("j0", "j1"), limits, marks=((0, "j0"), (2, "j1")), name="two_link")


def two_link_fk(q, l1=L1, l2=L2):
    a, b = np.radians(q[0]), np.radians(q[0] + q[1])
    pos = np.array([l1 * np.cos(a) + l2 * np.cos(b), l1 * np.sin(a) + l2 * np.sin(b), 0.0])
    return pos, np.array([np.cos(b), np.sin(b), 0.0])


@pytest.fixture
def toy():
    return two_link()


@pytest.fixture(scope="session")
def nico():
    return load_nico()


@pytest.fixture(scope="session")
def nico_poses(nico):
    return load_poses(shipped_path("nico_poses.json"), nico)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# one line per acceptance criterion, repeated after the test run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
