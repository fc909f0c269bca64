"""Forward kinematics over chains of homogeneous transform primitives.

A chain is an ordered list of translations and rotations written torso
first.  Evaluation follows the "multiply the vector, never the matrices"
scheme: the origin ``(0, 0, 0, 1)`` is pushed through the primitives from
the last one (fingertip side) to the first one (torso side), and the
pointing direction ``(0, 0, 1)`` goes through the rotation parts only.

Angles in chains and poses are in degrees; lengths in centimetres.

The y rotation uses the matrix::

    [[cos, 0, -sin],
     [0,   1,    0],
     [sin, 0,  cos]]

which is the transpose of the textbook form.  A model that needs the other
handedness can flip it with ``scale=-1`` on a joint rotation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from . import autodiff as ad

DEG = math.pi / 180.0
AXES = ("x", "y", "z")

KIND_TRANSLATE = 0
KIND_ROT_CONST = 1
KIND_ROT_JOINT = 2


class ChainError(ValueError):
    """Invalid chain definition or pose."""


@dataclass(frozen=True)
class Translate:
    xyz: tuple[float, float, float]

    def __post_init__(self):
        object.__setattr__(self, "xyz", tuple(float(v) for v in self.xyz))
        if len(self.xyz) != 3:
            raise ChainError("translation needs three components")


@dataclass(frozen=True)
class RotConst:
    axis: str
    deg: float

    def __post_init__(self):
        if self.axis not in AXES:
            raise ChainError(f"unknown axis {self.axis!r}")
        object.__setattr__(self, "deg", float(self.deg))

    @property
    def cos_sin(self) -> tuple[float, float]:
        rad = self.deg * DEG
        return math.cos(rad), math.sin(rad)


@dataclass(frozen=True)
class RotJoint:
    """Rotation by ``scale * theta[joint] + offset_deg`` degrees."""

    axis: str
    joint: int
    scale: float = 1.0
    offset_deg: float = 0.0

    def __post_init__(self):
        if self.axis not in AXES:
            raise ChainError(f"unknown axis {self.axis!r}")
        if self.scale == 0:
            raise ChainError("joint rotation scale must be nonzero")
        object.__setattr__(self, "scale", float(self.scale))
        object.__setattr__(self, "offset_deg", float(self.offset_deg))


Primitive = Union[Translate, RotConst, RotJoint]


@dataclass(frozen=True)
class PackedChain:
    """Flat array form of a chain, consumed by the loss kernels."""

    kind: np.ndarray      # int32 (K,)
    axis: np.ndarray      # int32 (K,)
    joint: np.ndarray     # int32 (K,), -1 where not a joint rotation
    scale: np.ndarray     # (K,)
    offset: np.ndarray    # (K,) degrees
    trans: np.ndarray     # (K, 3)
    cs: np.ndarray        # (K, 2) cos/sin of constant rotations
    m: int


@dataclass(frozen=True)
class KinematicChain:
    primitives: tuple
    joint_names: tuple
    limits: tuple                # ((lo, hi), ...) degrees, one per joint
    marks: tuple = ()            # ((primitive index, name), ...)
    name: str = "chain"
    _packed: PackedChain | None = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "primitives", tuple(self.primitives))
        object.__setattr__(self, "joint_names", tuple(self.joint_names))
        object.__setattr__(
            self, "limits", tuple((float(lo), float(hi)) for lo, hi in self.limits)
        )
        object.__setattr__(self, "marks", tuple((int(i), str(n)) for i, n in self.marks))
        self.validate()

    @property
    def m(self) -> int:
        return len(self.joint_names)

    def validate(self):
        if not self.primitives:
            raise ChainError("chain has no primitives")
        if len(set(self.joint_names)) != self.m:
            raise ChainError("joint names must be unique")
        if len(self.limits) != self.m:
            raise ChainError(f"expected {self.m} joint limits, got {len(self.limits)}")
        for name, (lo, hi) in zip(self.joint_names, self.limits):
            if not (math.isfinite(lo) and math.isfinite(hi)) or not lo < hi:
                raise ChainError(f"joint {name!r}: limits require min < max, got [{lo}, {hi}]")
        used = set()
        for k, prim in enumerate(self.primitives):
            if not isinstance(prim, (Translate, RotConst, RotJoint)):
                raise ChainError(f"primitive {k} has unknown type {type(prim).__name__}")
            if isinstance(prim, RotJoint):
                if not 0 <= prim.joint < self.m:
                    raise ChainError(f"primitive {k} references joint {prim.joint} outside [0, {self.m})")
                used.add(prim.joint)
        missing = [self.joint_names[j] for j in range(self.m) if j not in used]
        if missing:
            raise ChainError(f"joints not driving any primitive: {missing}")
        for idx, _ in self.marks:
            if not 0 <= idx < len(self.primitives):
                raise ChainError(f"joint mark {idx} outside primitive list")

    @property
    def lower(self) -> np.ndarray:
        return np.array([lo for lo, _ in self.limits])

    @property
    def upper(self) -> np.ndarray:
        return np.array([hi for _, hi in self.limits])

    def packed(self) -> PackedChain:
        if self._packed is None:
            K = len(self.primitives)
            kind = np.zeros(K, np.int32)
            axis = np.zeros(K, np.int32)
            joint = np.full(K, -1, np.int32)
            scale = np.ones(K)
            offset = np.zeros(K)
            trans = np.zeros((K, 3))
            cs = np.tile([1.0, 0.0], (K, 1))
            for k, p in enumerate(self.primitives):
                if isinstance(p, Translate):
                    kind[k] = KIND_TRANSLATE
                    trans[k] = p.xyz
                elif isinstance(p, RotConst):
                    kind[k] = KIND_ROT_CONST
                    axis[k] = AXES.index(p.axis)
                    cs[k] = p.cos_sin
                else:
                    kind[k] = KIND_ROT_JOINT
                    axis[k] = AXES.index(p.axis)
                    joint[k] = p.joint
                    scale[k] = p.scale
                    offset[k] = p.offset_deg
            packed = PackedChain(kind, axis, joint, scale, offset, trans, cs, self.m)
            for arr in (kind, axis, joint, scale, offset, trans, cs):
                arr.setflags(write=False)
            object.__setattr__(self, "_packed", packed)
        return self._packed


@dataclass
class EffectorState:
    position: Sequence          # (x, y, z) cm
    direction: Sequence         # rotated (0, 0, 1)
    joint_points: list = field(default_factory=list)


def _rotate(axis: str, c, s, v):
    x, y, z = v
    if axis == "x":
        return (x, c * y - s * z, s * y + c * z)
    if axis == "y":
        return (c * x - s * z, y, s * x + c * z)
    return (c * x - s * y, s * x + c * y, z)


def _translate(xyz, v):
    # zero components are skipped so -0.0 never turns into 0.0
    return tuple(a + t if t != 0.0 else a for a, t in zip(v, xyz))


def _joint_cos_sin(prim: RotJoint, theta, cos, sin):
    angle = theta
    if prim.scale != 1.0:
        angle = prim.scale * angle
    if prim.offset_deg != 0.0:
        angle = angle + prim.offset_deg
    rad = angle * DEG
    return cos(rad), sin(rad)


def _push(prims, pose, cos, sin, vector):
    v = vector
    for prim in reversed(prims):
        if isinstance(prim, Translate):
            v = _translate(prim.xyz, v)
            continue
        if isinstance(prim, RotConst):
            c, s = prim.cos_sin
        else:
            c, s = _joint_cos_sin(prim, pose[prim.joint], cos, sin)
        v = _rotate(prim.axis, c, s, v)
    return v


def _evaluate(chain, pose, cos, sin, joint_points):
    if len(pose) != chain.m:
        raise ChainError(f"pose has {len(pose)} angles, chain has {chain.m} joints")
    prims = chain.primitives
    # position and direction share the trig of each joint rotation
    pos = (0.0, 0.0, 0.0)
    dirn = (0.0, 0.0, 1.0)
    for prim in reversed(prims):
        if isinstance(prim, Translate):
            pos = _translate(prim.xyz, pos)
            continue
        if isinstance(prim, RotConst):
            c, s = prim.cos_sin
        else:
            c, s = _joint_cos_sin(prim, pose[prim.joint], cos, sin)
        pos = _rotate(prim.axis, c, s, pos)
        dirn = _rotate(prim.axis, c, s, dirn)
    points = []
    if joint_points:
        for idx, _ in chain.marks:
            points.append(_push(prims[: idx + 1], pose, cos, sin, (0.0, 0.0, 0.0)))
    return pos, dirn, points


def fk(chain: KinematicChain, pose) -> EffectorState:
    """End-effector position, pointing direction and marked joint points."""
    pose = [float(a) for a in pose]
    pos, dirn, points = _evaluate(chain, pose, math.cos, math.sin, True)
    return EffectorState(np.array(pos), np.array(dirn), [np.array(p) for p in points])


def fk_batch(chain: KinematicChain, poses) -> list[EffectorState]:
    rows = [list(r) for r in poses]
    for i, r in enumerate(rows):
        if len(r) != chain.m:
            raise ChainError(f"row {i} has {len(r)} angles, chain has {chain.m} joints")
    return [fk(chain, r) for r in rows]


def fk_diff(chain: KinematicChain, pose: Sequence[ad.Scalar], joint_points: bool = True) -> EffectorState:
    """Differentiable FK; coordinates are :class:`~trajgen.autodiff.Scalar`.

    Values are bitwise equal to :func:`fk` for the same angles.
    """
    pos, dirn, points = _evaluate(chain, list(pose), ad.cos, ad.sin, joint_points)
    return EffectorState(pos, dirn, points)


def _rot_mat(axis: str, c: float, s: float) -> np.ndarray:
    if axis == "x":
        return np.array([[1, 0, 0], [0, c, -s], [0, s, c]], float)
    if axis == "y":
        return np.array([[c, 0, -s], [0, 1, 0], [s, 0, c]], float)
    return np.array([[c, -s, 0], [s, c, 0], [0, 0, 1]], float)


def _rot_mat_deriv(axis: str, c: float, s: float) -> np.ndarray:
    if axis == "x":
        return np.array([[0, 0, 0], [0, -s, -c], [0, c, -s]], float)
    if axis == "y":
        return np.array([[-s, 0, -c], [0, 0, 0], [c, 0, -s]], float)
    return np.array([[-s, -c, 0], [c, -s, 0], [0, 0, 0]], float)


def jacobian(chain: KinematicChain, pose) -> tuple[EffectorState, np.ndarray]:
    """FK plus the 6 x m Jacobian of (position, direction) per degree."""
    pose = np.asarray(pose, float)
    if pose.shape != (chain.m,):
        raise ChainError(f"pose has shape {pose.shape}, chain has {chain.m} joints")
    prims = chain.primitives
    K = len(prims)
    # tail[k]: position/direction after pushing through primitives k+1..K-1
    tail_u = np.zeros((K + 1, 3))
    tail_w = np.zeros((K + 1, 3))
    mats = [None] * K
    u = np.zeros(3)
    w = np.array([0.0, 0.0, 1.0])
    tail_u[K], tail_w[K] = u, w
    for k in range(K - 1, -1, -1):
        prim = prims[k]
        if isinstance(prim, Translate):
            u = u + prim.xyz
        else:
            if isinstance(prim, RotConst):
                c, s = prim.cos_sin
            else:
                c, s = _joint_cos_sin(prim, pose[prim.joint], math.cos, math.sin)
            mats[k] = (c, s)
            R = _rot_mat(prim.axis, c, s)
            u = R @ u
            w = R @ w
        tail_u[k], tail_w[k] = u, w
    J = np.zeros((6, chain.m))
    head = np.eye(3)
    for k, prim in enumerate(prims):
        if isinstance(prim, Translate):
            continue
        c, s = mats[k]
        if isinstance(prim, RotJoint):
            dR = head @ _rot_mat_deriv(prim.axis, c, s)
            factor = prim.scale * DEG
            J[:3, prim.joint] += factor * (dR @ tail_u[k + 1])
            J[3:, prim.joint] += factor * (dR @ tail_w[k + 1])
        head = head @ _rot_mat(prim.axis, c, s)
    state = fk(chain, pose)
    return state, J
