"""Reference computations written independently of the package code."""
import numpy as np
from scipy.spatial.transform import Rotation

from trajgen.kinematics import RotConst, RotJoint, Translate


def homogeneous(prim, pose):
    """4x4 matrix of one primitive.

    Rotations about y follow the chain convention, which is the transpose of
    the textbook matrix, i.e. a textbook rotation by the negated angle.
    """
    T = np.eye(4)
    if isinstance(prim, Translate):
        T[:3, 3] = prim.xyz
        return T
    if isinstance(prim, RotConst):
        deg = prim.deg
    else:
        deg = prim.scale * pose[prim.joint] + prim.offset_deg
    if prim.axis == "y":
        deg = -deg
    T[:3, :3] = Rotation.from_euler(prim.axis, deg, degrees=True).as_matrix()
    return T


def brute_force_fk(chain, pose):
    T = np.eye(4)
    for prim in chain.primitives:
        T = T @ homogeneous(prim, pose)
    return T[:3, 3], T[:3, :3] @ np.array([0.0, 0.0, 1.0])


def grid_ik(fk_fn, target, lower, upper, steps=721):
    """Coarse exhaustive search over a 2-joint grid, the nearest reachable pose."""
    a = np.linspace(lower[0], upper[0], steps)
    b = np.linspace(lower[1], upper[1], steps)
    best = None
    for x in a:
        for y in b[:: max(1, steps // 180)]:
            d = np.linalg.norm(fk_fn((x, y))[0] - target)
            if best is None or d < best[0]:
                best = (d, (x, y))
    return best
