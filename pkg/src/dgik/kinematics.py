"""Serial-manipulator kinematics: rigid transforms, chains, forward kinematics.

A robot is an ordered list of revolute joints. Joint ``i`` is described by a
fixed rigid transform from the previous joint frame to its own frame plus a
unit rotation axis expressed in its own frame; a fixed tool transform hangs
off the last joint. All computation is double precision and all positions
are in meters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

TWO_PI = 2.0 * math.pi

DEFAULT_LOWER = -math.pi
DEFAULT_UPPER = math.pi


class KinematicsError(ValueError):
    """Raised for invalid chains, configurations or transforms."""


def wrap_angle(theta):
    """Wrap angles into (-pi, pi]. Works elementwise on arrays."""
    return np.asarray(theta, dtype=float) - TWO_PI * np.ceil(
        (np.asarray(theta, dtype=float) - math.pi) / TWO_PI
    )


# ---------------------------------------------------------------------------
# SO(3) helpers


def skew(v: np.ndarray) -> np.ndarray:
    x, y, z = v
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def rotation_about_axis(axis: np.ndarray, angle: float) -> np.ndarray:
    """Rodrigues rotation matrix for a unit axis."""
    a = np.asarray(axis, dtype=float)
    k = skew(a)
    s, c = math.sin(angle), math.cos(angle)
    return np.eye(3) + s * k + (1.0 - c) * (k @ k)


def rotation_log(rotmat: np.ndarray) -> np.ndarray:
    """Axis-angle 3-vector (rotation-log map) of a rotation matrix."""
    r = np.asarray(rotmat, dtype=float)
    cos_theta = np.clip((np.trace(r) - 1.0) / 2.0, -1.0, 1.0)
    theta = math.acos(cos_theta)
    if theta < 1e-10:
        # first-order: vee of the skew part
        return np.array([r[2, 1] - r[1, 2], r[0, 2] - r[2, 0], r[1, 0] - r[0, 1]]) / 2.0
    if math.pi - theta < 1e-7:
        # near pi the skew part vanishes; recover the axis from the
        # symmetric part: (R + R^T)/2 - cos(theta) I = (1 - cos(theta)) a a^T
        outer = (r + r.T) / 2.0 - cos_theta * np.eye(3)
        i = int(np.argmax(np.diagonal(outer)))
        axis = outer[:, i] / math.sqrt((1.0 - cos_theta) * outer[i, i])
        axis = axis / np.linalg.norm(axis)
        vee = np.array([r[2, 1] - r[1, 2], r[0, 2] - r[2, 0], r[1, 0] - r[0, 1]])
        if np.dot(axis, vee) < 0.0:
            axis = -axis
        return theta * axis
    vee = np.array([r[2, 1] - r[1, 2], r[0, 2] - r[2, 0], r[1, 0] - r[0, 1]])
    return theta / (2.0 * math.sin(theta)) * vee


def rpy_to_matrix(roll: float, pitch: float, yaw: float) -> np.ndarray:
    """Fixed-axis roll/pitch/yaw (x, then y, then z) rotation matrix."""
    return (
        rotation_about_axis(np.array([0.0, 0.0, 1.0]), yaw)
        @ rotation_about_axis(np.array([0.0, 1.0, 0.0]), pitch)
        @ rotation_about_axis(np.array([1.0, 0.0, 0.0]), roll)
    )


def quaternion_to_matrix(q: np.ndarray) -> np.ndarray:
    """Rotation matrix from a unit quaternion (w, x, y, z)."""
    w, x, y, z = q
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


# ---------------------------------------------------------------------------
# Rigid transforms


@dataclass(frozen=True)
class RigidTransform:
    """A proper rigid motion: orthonormal rotation (det +1) plus translation."""

    rotation: np.ndarray
    translation: np.ndarray

    ORTHO_TOL = 1e-9

    def __post_init__(self):
        rot = np.asarray(self.rotation, dtype=float).reshape(3, 3)
        trans = np.asarray(self.translation, dtype=float).reshape(3)
        object.__setattr__(self, "rotation", rot)
        object.__setattr__(self, "translation", trans)
        err = np.max(np.abs(rot.T @ rot - np.eye(3)))
        if err > self.ORTHO_TOL:
            raise KinematicsError(f"rotation not orthonormal (max deviation {err:.3e})")
        if np.linalg.det(rot) < 0.0:
            raise KinematicsError("rotation is improper (det < 0)")

    @staticmethod
    def identity() -> "RigidTransform":
        return RigidTransform(np.eye(3), np.zeros(3))

    @staticmethod
    def from_rpy(translation, rpy=(0.0, 0.0, 0.0)) -> "RigidTransform":
        return RigidTransform(rpy_to_matrix(*rpy), np.asarray(translation, dtype=float))

    def compose(self, other: "RigidTransform") -> "RigidTransform":
        return RigidTransform(
            self.rotation @ other.rotation,
            self.rotation @ other.translation + self.translation,
        )

    def __matmul__(self, other: "RigidTransform") -> "RigidTransform":
        return self.compose(other)

    def inverse(self) -> "RigidTransform":
        rt = self.rotation.T
        return RigidTransform(rt, -rt @ self.translation)

    def apply(self, points: np.ndarray) -> np.ndarray:
        """Transform one point (3,) or a stack of points (..., 3)."""
        p = np.asarray(points, dtype=float)
        return p @ self.rotation.T + self.translation

    def almost_equal(self, other: "RigidTransform", tol: float = 1e-9) -> bool:
        return (
            np.max(np.abs(self.rotation - other.rotation)) <= tol
            and np.max(np.abs(self.translation - other.translation)) <= tol
        )


def pose_error(a: RigidTransform, b: RigidTransform) -> tuple[float, float]:
    """(position error in meters, rotation error in degrees) between two poses.

    Rotation error is the geodesic angle acos((trace(Ra^T Rb) - 1) / 2) with
    the argument clamped into [-1, 1] to absorb floating-point drift.
    """
    pos = float(np.linalg.norm(a.translation - b.translation))
    cos_theta = (np.trace(a.rotation.T @ b.rotation) - 1.0) / 2.0
    rot = math.degrees(math.acos(np.clip(cos_theta, -1.0, 1.0)))
    return pos, rot


# ---------------------------------------------------------------------------
# Chains and configurations


@dataclass(frozen=True)
class Joint:
    """A revolute joint: fixed transform from the parent frame, unit axis in
    the joint's own frame."""

    transform: RigidTransform
    axis: np.ndarray

    AXIS_TOL = 1e-12

    def __post_init__(self):
        ax = np.asarray(self.axis, dtype=float).reshape(3)
        object.__setattr__(self, "axis", ax)
        if abs(np.linalg.norm(ax) - 1.0) > self.AXIS_TOL:
            raise KinematicsError(f"joint axis must have unit norm, got {np.linalg.norm(ax)!r}")


@dataclass(frozen=True)
class KinematicChain:
    """An open chain of revolute joints with a fixed tool transform.

    ``joint_limits`` is an (n, 2) array of per-joint (lower, upper) angle
    bounds in radians; the default interval is (-pi, pi].
    """

    joints: tuple[Joint, ...]
    name: str = "chain"
    joint_limits: np.ndarray | None = None
    tool: RigidTransform = field(default_factory=RigidTransform.identity)

    def __post_init__(self):
        object.__setattr__(self, "joints", tuple(self.joints))
        if len(self.joints) < 1:
            raise KinematicsError("chain needs at least one joint")
        if self.joint_limits is None:
            limits = np.tile([DEFAULT_LOWER, DEFAULT_UPPER], (len(self.joints), 1))
        else:
            limits = np.asarray(self.joint_limits, dtype=float).reshape(len(self.joints), 2)
        if np.any(limits[:, 0] >= limits[:, 1]):
            raise KinematicsError("joint limits must satisfy lower < upper")
        limits.setflags(write=False)
        object.__setattr__(self, "joint_limits", limits)

    @property
    def dof(self) -> int:
        return len(self.joints)

    def reach(self) -> float:
        """Upper bound on end-effector distance from the base joint origin:
        the sum of all link and tool translation magnitudes."""
        total = sum(float(np.linalg.norm(j.transform.translation)) for j in self.joints)
        return total + float(np.linalg.norm(self.tool.translation))

    def has_full_span_limits(self) -> np.ndarray:
        return (self.joint_limits[:, 1] - self.joint_limits[:, 0]) >= TWO_PI - 1e-12


@dataclass(frozen=True)
class Configuration:
    """Joint angles in radians, wrapped into (-pi, pi] on construction."""

    angles: np.ndarray

    def __post_init__(self):
        ang = wrap_angle(np.asarray(self.angles, dtype=float).reshape(-1))
        ang.setflags(write=False)
        object.__setattr__(self, "angles", ang)

    def __len__(self) -> int:
        return len(self.angles)

    def within_limits(self, chain: KinematicChain, tol: float = 1e-12) -> bool:
        lo, hi = chain.joint_limits[:, 0], chain.joint_limits[:, 1]
        return bool(np.all(self.angles >= lo - tol) and np.all(self.angles <= hi + tol))


def _check_config(chain: KinematicChain, q: Configuration) -> np.ndarray:
    angles = np.asarray(q.angles if isinstance(q, Configuration) else q, dtype=float)
    if angles.shape != (chain.dof,):
        raise KinematicsError(
            f"configuration has {angles.shape} angles, chain '{chain.name}' has dof {chain.dof}"
        )
    return angles


def forward_kinematics(chain: KinematicChain, q: Configuration) -> list[RigidTransform]:
    """Cumulative joint-frame poses; the last element is the end-effector pose.

    Returns n + 1 transforms: one per joint frame (after applying that
    joint's rotation) plus the tool frame.
    """
    angles = _check_config(chain, q)
    frames: list[RigidTransform] = []
    current = RigidTransform.identity()
    for joint, angle in zip(chain.joints, angles):
        current = current @ joint.transform @ RigidTransform(
            rotation_about_axis(joint.axis, angle), np.zeros(3)
        )
        frames.append(current)
    frames.append(current @ chain.tool)
    return frames


def end_effector_pose(chain: KinematicChain, q: Configuration) -> RigidTransform:
    return forward_kinematics(chain, q)[-1]


def forward_kinematics_batch(chain: KinematicChain, angles: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """End-effector poses for a (B, n) batch of joint angles.

    Returns (rotations (B, 3, 3), translations (B, 3)).
    """
    q = np.asarray(angles, dtype=float)
    if q.ndim != 2 or q.shape[1] != chain.dof:
        raise KinematicsError(f"expected angle batch of shape (B, {chain.dof}), got {q.shape}")
    b = q.shape[0]
    rot = np.broadcast_to(np.eye(3), (b, 3, 3)).copy()
    trans = np.zeros((b, 3))
    for i, joint in enumerate(chain.joints):
        trans = trans + rot @ joint.transform.translation
        rot = rot @ joint.transform.rotation
        k = skew(joint.axis)
        s = np.sin(q[:, i])[:, None, None]
        c = np.cos(q[:, i])[:, None, None]
        rj = np.eye(3) + s * k + (1.0 - c) * (k @ k)
        rot = rot @ rj
    trans = trans + rot @ chain.tool.translation
    rot = rot @ chain.tool.rotation
    return rot, trans


def sample_configuration(chain: KinematicChain, rng_seed: int) -> Configuration:
    """One configuration drawn uniformly from the per-joint limit intervals."""
    rng = np.random.default_rng(rng_seed)
    return Configuration(sample_angles(chain, rng))


def sample_angles(chain: KinematicChain, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """Uniform joint angles from an existing generator; (n,) or (size, n)."""
    lo, hi = chain.joint_limits[:, 0], chain.joint_limits[:, 1]
    shape = (chain.dof,) if size is None else (size, chain.dof)
    return lo + (hi - lo) * rng.random(shape)


def random_chain(
    template: KinematicChain,
    scale_range: tuple[float, float],
    rng_seed: int,
    name: str | None = None,
) -> KinematicChain:
    """Randomized copy of ``template`` with each link translation magnitude
    scaled by an independent uniform factor from ``scale_range``.

    Axes, rotations, joint count and limits are preserved; the tool
    translation is scaled like any other link.
    """
    lo, hi = float(scale_range[0]), float(scale_range[1])
    if lo <= 0.0 or hi <= 0.0 or lo > hi:
        raise KinematicsError(f"scale_range must be positive with lo <= hi, got {scale_range}")
    rng = np.random.default_rng(rng_seed)
    factors = lo + (hi - lo) * rng.random(len(template.joints) + 1)
    joints = tuple(
        Joint(
            RigidTransform(j.transform.rotation, factors[i] * j.transform.translation),
            j.axis,
        )
        for i, j in enumerate(template.joints)
    )
    tool = RigidTransform(template.tool.rotation, factors[-1] * template.tool.translation)
    return KinematicChain(
        joints=joints,
        name=name if name is not None else f"{template.name}-rand{rng_seed}",
        joint_limits=template.joint_limits,
        tool=tool,
    )


def chain_from_dh(
    rows: list[tuple[float, float, float, float]],
    name: str = "dh-chain",
    tool: RigidTransform | None = None,
) -> KinematicChain:
    """Convert standard Denavit-Hartenberg rows (a, alpha, d, theta_offset)
    into the transform/axis representation.

    The DH row transform Rz(q + theta0) Tz(d) Tx(a) Rx(alpha) is split so the
    q-rotation acts about the z axis of each joint frame; the trailing
    Tz Tx Rx of row i is folded into the fixed transform of joint i + 1 (and
    the last one into the tool).
    """
    z = np.array([0.0, 0.0, 1.0])
    joints = []
    pending = RigidTransform.identity()
    for a, alpha, d, theta0 in rows:
        fixed = pending @ RigidTransform(rotation_about_axis(z, theta0), np.zeros(3))
        joints.append(Joint(fixed, z))
        pending = RigidTransform(
            rotation_about_axis(np.array([1.0, 0.0, 0.0]), alpha),
            np.array([a, 0.0, d]),
        )
    full_tool = pending if tool is None else pending @ tool
    return KinematicChain(joints=tuple(joints), name=name, tool=full_tool)
