"""Model and pose files.

Both are UTF-8 JSON documents.  A model file looks like::

    {
      "name": "nico_right_arm",
      "m": 7,
      "joints": [{"name": "shoulder_z", "min_deg": -100, "max_deg": 100}, ...],
      "primitives": [
        {"kind": "translate", "xyz": [0, 5, 19.5]},
        {"kind": "rot_const", "axis": "z", "deg": 90},
        {"kind": "rot_joint", "axis": "z", "joint": "shoulder_z",
         "scale": 1, "offset_deg": 0}
      ],
      "joint_marks": [{"primitive": 2, "joint": "shoulder_z"}]
    }

``scale`` and ``offset_deg`` of ``rot_joint`` are optional (1 and 0).  A pose
file names the model it belongs to and maps pose names to angle lists::

    {"model": "nico_right_arm", "poses": {"start": [0, 0, 0, 0, 0, 0, 0]}}
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .kinematics import ChainError, KinematicChain, RotConst, RotJoint, Translate

log = logging.getLogger(__name__)

_PRIMITIVE_FIELDS = {
    "translate": {"kind", "xyz"},
    "rot_const": {"kind", "axis", "deg"},
    "rot_joint": {"kind", "axis", "joint", "scale", "offset_deg"},
}


class ModelFileError(ValueError):
    """A model or pose file could not be parsed or failed validation."""


def shipped_path(name: str) -> Path:
    """Path of a file shipped in the package data directory."""
    return Path(str(resources.files("trajgen") / "data" / name))


def _read_json(path):
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ModelFileError(f"{path}: cannot read ({exc.strerror})") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelFileError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc


def _field(obj, key, where, types=None):
    if not isinstance(obj, dict) or key not in obj:
        raise ModelFileError(f"{where}: missing field {key!r}")
    value = obj[key]
    if types is not None and (not isinstance(value, types) or isinstance(value, bool)):
        raise ModelFileError(f"{where}.{key}: unexpected type {type(value).__name__}")
    return value


def _number(obj, key, where, default=None):
    if default is not None and key not in obj:
        return float(default)
    return float(_field(obj, key, where, (int, float)))


def _primitive_from_dict(rec, k, joint_index):
    where = f"primitives[{k}]"
    kind = _field(rec, "kind", where, str)
    if kind not in _PRIMITIVE_FIELDS:
        raise ModelFileError(f"{where}.kind: unknown primitive kind {kind!r}")
    extra = set(rec) - _PRIMITIVE_FIELDS[kind]
    if extra:
        raise ModelFileError(f"{where}: unexpected fields {sorted(extra)}")
    try:
        if kind == "translate":
            xyz = _field(rec, "xyz", where, list)
            if len(xyz) != 3 or not all(isinstance(v, (int, float)) for v in xyz):
                raise ModelFileError(f"{where}.xyz: expected three numbers")
            return Translate(tuple(xyz))
        axis = _field(rec, "axis", where, str)
        if kind == "rot_const":
            return RotConst(axis, _number(rec, "deg", where))
        name = _field(rec, "joint", where, str)
        if name not in joint_index:
            raise ModelFileError(f"{where}.joint: unknown joint {name!r}")
        return RotJoint(
            axis,
            joint_index[name],
            _number(rec, "scale", where, default=1.0),
            _number(rec, "offset_deg", where, default=0.0),
        )
    except ChainError as exc:
        raise ModelFileError(f"{where}: {exc}") from exc


def model_from_dict(doc) -> KinematicChain:
    if not isinstance(doc, dict):
        raise ModelFileError("model: top level must be an object")
    name = _field(doc, "name", "model", str)
    joints = _field(doc, "joints", "model", list)
    names, limits = [], []
    for j, rec in enumerate(joints):
        where = f"joints[{j}]"
        names.append(_field(rec, "name", where, str))
        limits.append((_number(rec, "min_deg", where), _number(rec, "max_deg", where)))
    if "m" in doc and _field(doc, "m", "model", int) != len(names):
        raise ModelFileError(f"model.m: declares {doc['m']} joints but {len(names)} are listed")
    joint_index = {n: j for j, n in enumerate(names)}
    prims = [
        _primitive_from_dict(rec, k, joint_index)
        for k, rec in enumerate(_field(doc, "primitives", "model", list))
    ]
    marks = []
    for i, rec in enumerate(doc.get("joint_marks", [])):
        where = f"joint_marks[{i}]"
        marks.append((_field(rec, "primitive", where, int), _field(rec, "joint", where, str)))
    try:
        return KinematicChain(tuple(prims), tuple(names), tuple(limits), tuple(marks), name)
    except ChainError as exc:
        raise ModelFileError(f"model {name!r}: {exc}") from exc


def model_to_dict(chain: KinematicChain) -> dict:
    prims = []
    for p in chain.primitives:
        if isinstance(p, Translate):
            prims.append({"kind": "translate", "xyz": list(p.xyz)})
        elif isinstance(p, RotConst):
            prims.append({"kind": "rot_const", "axis": p.axis, "deg": p.deg})
        else:
            prims.append({
                "kind": "rot_joint",
                "axis": p.axis,
                "joint": chain.joint_names[p.joint],
                "scale": p.scale,
                "offset_deg": p.offset_deg,
            })
    return {
        "name": chain.name,
        "m": chain.m,
        "joints": [
            {"name": n, "min_deg": lo, "max_deg": hi}
            for n, (lo, hi) in zip(chain.joint_names, chain.limits)
        ],
        "primitives": prims,
        "joint_marks": [{"primitive": i, "joint": n} for i, n in chain.marks],
    }


def dumps_model(chain: KinematicChain) -> str:
    return json.dumps(model_to_dict(chain), indent=2) + "\n"


def loads_model(text: str) -> KinematicChain:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelFileError(f"<string>:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    return model_from_dict(doc)


def load_model(path) -> KinematicChain:
    """Parse and validate a model file."""
    try:
        return model_from_dict(_read_json(path))
    except ModelFileError as exc:
        if str(exc).startswith(str(path)):
            raise
        raise ModelFileError(f"{path}: {exc}") from exc


def save_model(chain: KinematicChain, path):
    Path(path).write_text(dumps_model(chain), encoding="utf-8")


def load_nico() -> KinematicChain:
    return load_model(shipped_path("nico_right_arm.json"))


@dataclass(frozen=True)
class PoseFile:
    model: str
    poses: dict
    surface_normal: tuple | None = None   # unit normal of the touched surface, if any

    def __getitem__(self, name) -> np.ndarray:
        try:
            return self.poses[name]
        except KeyError:
            raise KeyError(f"pose not found: {name!r}") from None

    def names(self) -> list[str]:
        return list(self.poses)


def check_pose(chain: KinematicChain, pose, label="pose", strict=True) -> np.ndarray:
    pose = np.asarray(pose, float)
    if pose.shape != (chain.m,):
        raise ModelFileError(f"{label}: expected {chain.m} angles, got {pose.size}")
    for j, (a, (lo, hi)) in enumerate(zip(pose, chain.limits)):
        if not lo <= a <= hi:
            msg = f"{label}: {chain.joint_names[j]} = {a} outside [{lo}, {hi}]"
            if strict:
                raise ModelFileError(msg)
            log.warning(msg)
    return pose


def load_poses(path, chain: KinematicChain, strict: bool = True) -> PoseFile:
    """Load named poses for ``chain``.

    Limits are closed intervals.  Out-of-range angles raise in strict mode
    and are logged as warnings otherwise.
    """
    doc = _read_json(path)
    model = _field(doc, "model", str(path), str)
    if model != chain.name:
        raise ModelFileError(f"{path}: poses are for model {model!r}, not {chain.name!r}")
    raw = _field(doc, "poses", str(path), dict)
    poses = {}
    for name, angles in raw.items():
        if not isinstance(angles, list) or not all(
            isinstance(a, (int, float)) and not isinstance(a, bool) for a in angles
        ):
            raise ModelFileError(f"{path}: poses.{name}: expected a list of numbers")
        poses[name] = check_pose(chain, angles, f"{path}: poses.{name}", strict)
    normal = doc.get("surface_normal")
    if normal is not None:
        normal = np.asarray(normal, float)
        if normal.shape != (3,) or not np.isfinite(normal).all() or np.linalg.norm(normal) == 0:
            raise ModelFileError(f"{path}: surface_normal: expected a nonzero 3-vector")
        normal = tuple(normal / np.linalg.norm(normal))
    return PoseFile(model, poses, normal)


def save_poses(pose_file: PoseFile, path):
    doc = {"model": pose_file.model, "poses": {k: [float(a) for a in v] for k, v in pose_file.poses.items()}}
    if pose_file.surface_normal is not None:
        doc["surface_normal"] = [float(a) for a in pose_file.surface_normal]
    Path(path).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
