"""Robot description files and toy chain factories.

Descriptions are JSON: ``{name, joints: [{translation, rotation_rpy, axis,
limits}], tool: {translation, rotation_rpy}}``. Translations are meters,
rotations fixed-axis RPY radians, axes unit vectors in the joint's own
frame. ``limits`` and ``tool`` are optional; limits default to (-pi, pi].

The bundled descriptions approximate the geometry of well-known commercial
arms (link lengths and axis layouts are plausible, not calibrated vendor
data). Every bundled chain keeps its base joint at the origin and gives the
tool a lateral offset so that the last joint is observable from the
distance-geometry vertex pairs.
"""

from __future__ import annotations

import json
import math
from importlib import resources
from pathlib import Path

import numpy as np

from .kinematics import Joint, KinematicChain, KinematicsError, RigidTransform

_Z = (0.0, 0.0, 1.0)
_Y = (0.0, 1.0, 0.0)


def chain_to_dict(chain: KinematicChain) -> dict:
    joints = []
    for joint, limits in zip(chain.joints, chain.joint_limits):
        joints.append(
            {
                "translation": [float(v) for v in joint.transform.translation],
                "rotation_rpy": _matrix_to_rpy(joint.transform.rotation),
                "axis": [float(v) for v in joint.axis],
                "limits": [float(limits[0]), float(limits[1])],
            }
        )
    return {
        "name": chain.name,
        "joints": joints,
        "tool": {
            "translation": [float(v) for v in chain.tool.translation],
            "rotation_rpy": _matrix_to_rpy(chain.tool.rotation),
        },
    }


def chain_from_dict(data: dict) -> KinematicChain:
    try:
        name = data["name"]
        joint_specs = data["joints"]
    except KeyError as exc:
        raise KinematicsError(f"robot description missing field {exc}") from None
    if not joint_specs:
        raise KinematicsError("robot description has no joints")
    joints = []
    limits = []
    for i, spec in enumerate(joint_specs):
        try:
            translation = spec["translation"]
            rpy = spec.get("rotation_rpy", (0.0, 0.0, 0.0))
            axis = spec["axis"]
        except KeyError as exc:
            raise KinematicsError(f"joint {i} missing field {exc}") from None
        axis = np.asarray(axis, dtype=float)
        norm = np.linalg.norm(axis)
        if norm == 0.0:
            raise KinematicsError(f"joint {i} has zero axis")
        joints.append(Joint(RigidTransform.from_rpy(translation, rpy), axis / norm))
        limits.append(spec.get("limits", [-math.pi, math.pi]))
    tool_spec = data.get("tool")
    if tool_spec is None:
        tool = RigidTransform.identity()
    else:
        tool = RigidTransform.from_rpy(
            tool_spec.get("translation", (0.0, 0.0, 0.0)),
            tool_spec.get("rotation_rpy", (0.0, 0.0, 0.0)),
        )
    return KinematicChain(
        joints=tuple(joints), name=name, joint_limits=np.asarray(limits), tool=tool
    )


def _matrix_to_rpy(rot: np.ndarray) -> list[float]:
    """Fixed-axis RPY from a rotation matrix (ZYX Euler extraction)."""
    pitch = math.asin(float(np.clip(-rot[2, 0], -1.0, 1.0)))
    if abs(abs(rot[2, 0]) - 1.0) < 1e-12:
        # gimbal lock: fold yaw into roll
        roll = math.atan2(-rot[0, 1], rot[1, 1])
        yaw = 0.0
    else:
        roll = math.atan2(rot[2, 1], rot[2, 2])
        yaw = math.atan2(rot[1, 0], rot[0, 0])
    return [roll, pitch, yaw]


def load_chain(path: str | Path) -> KinematicChain:
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise KinematicsError(f"unparseable robot file {path}: {exc}") from None
    return chain_from_dict(data)


def save_chain(chain: KinematicChain, path: str | Path) -> None:
    with open(path, "w") as fh:
        json.dump(chain_to_dict(chain), fh, indent=2, sort_keys=True)
        fh.write("\n")


def bundled_names() -> list[str]:
    files = resources.files("dgik").joinpath("descriptions")
    return sorted(p.name[:-5] for p in files.iterdir() if p.name.endswith(".json"))


def bundled_chain(name: str) -> KinematicChain:
    ref = resources.files("dgik").joinpath("descriptions", f"{name}.json")
    if not ref.is_file():
        raise KinematicsError(f"no bundled robot '{name}' (available: {bundled_names()})")
    return chain_from_dict(json.loads(ref.read_text()))


def resolve_chain(spec: str | Path) -> KinematicChain:
    """A chain from a bundled name or a description file path."""
    path = Path(spec)
    if path.suffix == ".json" or path.exists():
        return load_chain(path)
    return bundled_chain(str(spec))


# ---------------------------------------------------------------------------
# Toy chains used throughout the tests and desk-scale experiments


def planar_chain(dof: int, link_length: float = 1.0, name: str | None = None) -> KinematicChain:
    """Planar arm in the xy plane: all axes z, links along x, tool one link."""
    joints = [Joint(RigidTransform.identity(), np.array(_Z))]
    for _ in range(dof - 1):
        joints.append(
            Joint(RigidTransform(np.eye(3), np.array([link_length, 0.0, 0.0])), np.array(_Z))
        )
    tool = RigidTransform(np.eye(3), np.array([link_length, 0.0, 0.0]))
    return KinematicChain(
        joints=tuple(joints), name=name or f"planar{dof}", tool=tool
    )


def _chain(name: str, rows: list[tuple[tuple[float, float, float], tuple[float, float, float]]],
           tool_translation: tuple[float, float, float]) -> KinematicChain:
    joints = tuple(
        Joint(RigidTransform(np.eye(3), np.array(t, dtype=float)), np.array(axis, dtype=float))
        for t, axis in rows
    )
    return KinematicChain(
        joints=joints, name=name,
        tool=RigidTransform(np.eye(3), np.array(tool_translation, dtype=float)),
    )


def spatial_6r() -> KinematicChain:
    """Well-conditioned 6-DOF spatial toy arm (reach about 1.5 m)."""
    return _chain(
        "spatial6r",
        [
            ((0.0, 0.0, 0.0), _Z),
            ((0.1, 0.0, 0.35), _Y),
            ((0.35, 0.0, 0.05), _Z),
            ((0.3, 0.0, 0.05), _Y),
            ((0.25, 0.0, 0.0), _Z),
            ((0.15, 0.0, 0.0), _Y),
        ],
        (0.1, 0.0, 0.05),
    )


def spatial_4r() -> KinematicChain:
    """4-DOF spatial toy arm (reach about 1.2 m)."""
    return _chain(
        "spatial4r",
        [
            ((0.0, 0.0, 0.0), _Z),
            ((0.1, 0.0, 0.3), _Y),
            ((0.4, 0.0, 0.05), _Z),
            ((0.35, 0.0, 0.05), _Y),
        ],
        (0.12, 0.0, 0.06),
    )


def spatial_chain(dof: int) -> KinematicChain:
    """Spatial toy arm with alternating z/y axes, any dof >= 2."""
    lengths = [0.35, 0.3, 0.25, 0.2, 0.18, 0.15, 0.12, 0.1]
    rows = [((0.0, 0.0, 0.0), _Z), ((0.1, 0.0, 0.35), _Y)]
    for i in range(2, dof):
        axis = _Y if i % 2 == 1 else _Z
        rows.append(((lengths[(i - 2) % len(lengths)], 0.0, 0.05 if i < 4 else 0.0), axis))
    return _chain(f"spatial{dof}r", rows[:dof], (0.1, 0.0, 0.05))
