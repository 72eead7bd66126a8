"""Distance-geometric graph representation of revolute chains.

Each joint axis contributes a pair of vertices: a point on the axis and a
point at unit distance along it; the end-effector frame contributes one
more pair. Edges among neighbouring-joint quadruples carry distances fixed
by link geometry alone, a four-vertex base frame anchors the coordinate
system, and goal edges tie the end-effector pair to the base. A complete
graph (all pairwise distances, all positions known) encodes one solution;
the partial graph encodes the problem.

Vertex ordering is fixed: base pair (on-axis, offset), joint pairs base to
tip, end-effector pair, then the two extra frame vertices x and y.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import IntEnum
from itertools import combinations

import numpy as np

from .kinematics import (
    Configuration,
    KinematicChain,
    RigidTransform,
    forward_kinematics,
    rotation_about_axis,
    wrap_angle,
)

UNIT_Z = np.array([0.0, 0.0, 1.0])

DIVERGENCE_TOL = 0.05  # meters of allowed structure-distance violation


class ReconstructionDiverged(RuntimeError):
    """Point set is too far from any realizable configuration."""


class GraphError(ValueError):
    """Raised for graph-construction misuse."""


class VertexRole(IntEnum):
    BASE = 0
    GENERAL = 1
    END_EFFECTOR = 2

    @staticmethod
    def one_hot(roles: np.ndarray) -> np.ndarray:
        out = np.zeros((len(roles), 3))
        out[np.arange(len(roles)), np.asarray(roles, dtype=int)] = 1.0
        return out


@dataclass(frozen=True)
class DgGraph:
    """A distance-weighted graph over manipulator points.

    ``positions`` rows of vertices with ``known_mask`` False hold the zero
    vector. ``edge_index`` rows are (i, j) with i < j, lexicographically
    sorted; ``edge_dist`` holds the matching nonnegative weights.
    ``base_frame`` stores the canonical (o, x, y, z) positions implied by
    the owning chain; ``goal`` is an optional end-effector pose annotation.
    """

    roles: np.ndarray
    positions: np.ndarray
    known_mask: np.ndarray
    edge_index: np.ndarray
    edge_dist: np.ndarray
    base_frame: np.ndarray | None = None
    goal: RigidTransform | None = None

    def __post_init__(self):
        for name in ("roles", "positions", "known_mask", "edge_index", "edge_dist"):
            arr = np.asarray(getattr(self, name))
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if np.any(self.edge_dist < 0.0):
            raise GraphError("edge distances must be nonnegative")
        if np.any(self.edge_index[:, 0] >= self.edge_index[:, 1]):
            raise GraphError("edges must be stored as (i, j) with i < j")

    @property
    def vertex_count(self) -> int:
        return len(self.roles)

    @property
    def frame_attached(self) -> bool:
        return int(np.sum(self.roles == VertexRole.BASE)) == 4

    @property
    def dof(self) -> int:
        n = self.vertex_count
        return (n - 4) // 2 - 1 if self.frame_attached else n // 2 - 1

    def role_one_hot(self) -> np.ndarray:
        return VertexRole.one_hot(self.roles)

    def edge_dict(self) -> dict[tuple[int, int], float]:
        return {
            (int(i), int(j)): float(d)
            for (i, j), d in zip(self.edge_index, self.edge_dist)
        }

    def is_complete(self) -> bool:
        n = self.vertex_count
        return len(self.edge_index) == n * (n - 1) // 2 and bool(np.all(self.known_mask))

    def realized_violation(self) -> float:
        """Largest |edge weight - distance between endpoint positions|."""
        diff = self.positions[self.edge_index[:, 0]] - self.positions[self.edge_index[:, 1]]
        return float(np.max(np.abs(np.linalg.norm(diff, axis=1) - self.edge_dist)))


def _edges_from_dict(edges: dict[tuple[int, int], float]) -> tuple[np.ndarray, np.ndarray]:
    keys = sorted(edges)
    index = np.array(keys, dtype=int).reshape(len(keys), 2)
    dist = np.array([edges[k] for k in keys])
    return index, dist


def _frame_points(chain: KinematicChain, q: Configuration) -> np.ndarray:
    """Axis-pair points for every joint frame plus the end effector, (2n+2, 3)."""
    frames = forward_kinematics(chain, q)
    rows = []
    for frame, joint in zip(frames[:-1], chain.joints):
        p = frame.translation
        rows.append(p)
        rows.append(p + frame.rotation @ joint.axis)
    ee = frames[-1]
    rows.append(ee.translation)
    rows.append(ee.translation + ee.rotation @ UNIT_Z)
    return np.array(rows)


def canonical_base_frame(chain: KinematicChain) -> np.ndarray:
    """Canonical (o, x, y, z) positions: o on the base joint, z one unit
    along its axis, x and y completing a right-handed orthonormal frame."""
    base = chain.joints[0].transform
    o = base.translation
    w = base.rotation @ chain.joints[0].axis
    ref = np.array([1.0, 0.0, 0.0])
    if abs(float(ref @ w)) > 0.9:
        ref = np.array([0.0, 1.0, 0.0])
    u = ref - (ref @ w) * w
    u = u / np.linalg.norm(u)
    v = np.cross(w, u)
    return np.array([o, o + u, o + v, o + w])


def build_structure_graph(chain: KinematicChain) -> DgGraph:
    """Vertices and configuration-invariant edges implied by link geometry.

    Two vertices per joint axis plus two for the end-effector frame; edges
    connect every vertex pair within each neighbouring-frame quadruple.
    Positions are unknown (zeros) at this stage.
    """
    n = chain.dof
    pts = _frame_points(chain, Configuration(np.zeros(n)))
    edges: dict[tuple[int, int], float] = {}
    for k in range(n):  # consecutive frame pairs incl. (last joint, ee)
        quad = [2 * k, 2 * k + 1, 2 * (k + 1), 2 * (k + 1) + 1]
        for i, j in combinations(quad, 2):
            if j == i + 1 and i % 2 == 0:
                edges[(i, j)] = 1.0  # paired axis vertices sit at unit distance
            else:
                edges[(i, j)] = float(np.linalg.norm(pts[i] - pts[j]))
    roles = np.full(2 * n + 2, VertexRole.GENERAL, dtype=np.int8)
    roles[:2] = VertexRole.BASE
    roles[-2:] = VertexRole.END_EFFECTOR
    index, dist = _edges_from_dict(edges)
    count = 2 * n + 2
    return DgGraph(
        roles=roles,
        positions=np.zeros((count, 3)),
        known_mask=np.zeros(count, dtype=bool),
        edge_index=index,
        edge_dist=dist,
        base_frame=canonical_base_frame(chain),
    )


def attach_base_frame(g: DgGraph) -> DgGraph:
    """Add the x and y frame vertices and the base-frame edges; pins the
    four base vertices to their canonical known positions."""
    if g.frame_attached:
        raise GraphError("base frame already attached")
    if g.base_frame is None:
        raise GraphError("graph carries no canonical base frame")
    n_old = g.vertex_count
    xi, yi = n_old, n_old + 1
    o_pos, x_pos, y_pos, z_pos = g.base_frame
    roles = np.concatenate([g.roles, np.full(2, VertexRole.BASE, dtype=np.int8)])
    positions = np.vstack([g.positions, x_pos, y_pos])
    positions[0] = o_pos
    positions[1] = z_pos
    known = np.concatenate([g.known_mask, [True, True]])
    known[:2] = True
    edges = g.edge_dict()
    root2 = float(np.sqrt(2.0))
    frame_edges = {
        (0, 1): 1.0, (0, xi): 1.0, (0, yi): 1.0,
        (1, xi): root2, (1, yi): root2, (xi, yi): root2,
    }
    for key, dist in frame_edges.items():
        if key in edges and abs(edges[key] - dist) > 1e-9:
            raise GraphError(f"edge {key} conflicts with base frame weight")
        edges[key] = dist
    index, dist = _edges_from_dict(edges)
    return DgGraph(
        roles=roles, positions=positions, known_mask=known,
        edge_index=index, edge_dist=dist, base_frame=g.base_frame, goal=g.goal,
    )


def attach_goal(g: DgGraph, goal: RigidTransform) -> DgGraph:
    """Place the end-effector pair at the goal pose and connect it to all
    four base vertices with realized distances."""
    if not g.frame_attached:
        raise GraphError("attach_base_frame must run before attach_goal")
    n = g.dof
    e0, e1 = 2 * n, 2 * n + 1
    xi, yi = g.vertex_count - 2, g.vertex_count - 1
    positions = g.positions.copy()
    positions[e0] = goal.translation
    positions[e1] = goal.translation + goal.rotation @ UNIT_Z
    known = g.known_mask.copy()
    known[[e0, e1]] = True
    edges = g.edge_dict()
    for e in (e0, e1):
        for b in (0, 1, xi, yi):
            key = (min(e, b), max(e, b))
            edges[key] = float(np.linalg.norm(positions[e] - positions[b]))
    index, dist = _edges_from_dict(edges)
    return DgGraph(
        roles=g.roles, positions=positions, known_mask=known,
        edge_index=index, edge_dist=dist, base_frame=g.base_frame, goal=goal,
    )


def assemble_partial_graph(chain: KinematicChain, goal: RigidTransform) -> DgGraph:
    """Structure graph + base frame + goal subgraph; the problem encoding."""
    return attach_goal(attach_base_frame(build_structure_graph(chain)), goal)


def complete_graph_from_config(
    chain: KinematicChain, q: Configuration, goal_from_fk: bool = True
) -> DgGraph:
    """All vertex positions at the configuration's points plus every
    pairwise distance; ``goal_from_fk`` stores FK(q) as the goal annotation."""
    base = canonical_base_frame(chain)
    pts = _frame_points(chain, q)
    positions = np.vstack([pts, base[1], base[2]])
    count = len(positions)
    iu = np.triu_indices(count, k=1)
    diff = positions[iu[0]] - positions[iu[1]]
    dist = np.linalg.norm(diff, axis=1)
    index = np.stack(iu, axis=1)
    roles = np.full(count, VertexRole.GENERAL, dtype=np.int8)
    roles[:2] = VertexRole.BASE
    roles[-2:] = VertexRole.BASE
    roles[2 * chain.dof: 2 * chain.dof + 2] = VertexRole.END_EFFECTOR
    goal = forward_kinematics(chain, q)[-1] if goal_from_fk else None
    return DgGraph(
        roles=roles,
        positions=positions,
        known_mask=np.ones(count, dtype=bool),
        edge_index=index,
        edge_dist=dist,
        base_frame=base,
        goal=goal,
    )


@dataclass(frozen=True)
class IkProblem:
    """A chain, a goal pose, and the cached partial graph encoding both."""

    chain: KinematicChain
    goal: RigidTransform
    partial_graph: DgGraph = None

    def __post_init__(self):
        if self.partial_graph is None:
            object.__setattr__(
                self, "partial_graph", assemble_partial_graph(self.chain, self.goal)
            )


# ---------------------------------------------------------------------------
# Point set -> configuration


def _structure_check_edges(chain: KinematicChain) -> tuple[np.ndarray, np.ndarray]:
    """Configuration-invariant edges (structure + base frame) for validation."""
    g = attach_base_frame(build_structure_graph(chain))
    return g.edge_index, g.edge_dist


def _kabsch(source: np.ndarray, target: np.ndarray) -> tuple[np.ndarray, np.ndarray, float]:
    """Best proper rotation R and translation t with R @ s + t ~= target."""
    s_mean = source.mean(axis=0)
    t_mean = target.mean(axis=0)
    h = (source - s_mean).T @ (target - t_mean)
    u, _, vt = np.linalg.svd(h)
    d = np.sign(np.linalg.det(vt.T @ u.T))
    rot = vt.T @ np.diag([1.0, 1.0, d]) @ u.T
    trans = t_mean - rot @ s_mean
    residual = float(np.linalg.norm((source @ rot.T + trans) - target))
    return rot, trans, residual


def align_to_base(chain: KinematicChain, points: np.ndarray) -> np.ndarray:
    """Rigidly align a full point set to the chain's canonical base frame.

    Fits the four base vertices with a proper-rotation Procrustes; when the
    unconstrained orthogonal fit is improper (a mirrored point set), the
    whole set is reflected first so a canonical handedness is restored.
    """
    pts = np.asarray(points, dtype=float)
    n_total = len(pts)
    base_idx = [0, n_total - 2, n_total - 1, 1]  # o, x, y, z
    canonical = canonical_base_frame(chain)
    measured = pts[base_idx]
    s_mean = measured.mean(axis=0)
    t_mean = canonical.mean(axis=0)
    h = (measured - s_mean).T @ (canonical - t_mean)
    if np.linalg.det(h) < 0.0:
        pts = pts * np.array([1.0, 1.0, -1.0])
        measured = pts[base_idx]
    rot, trans, _ = _kabsch(measured, canonical)
    return pts @ rot.T + trans


def points_to_config(
    chain: KinematicChain,
    points: np.ndarray,
    tol: float = DIVERGENCE_TOL,
) -> Configuration:
    """Recover joint angles from a full vertex point set.

    Validates the configuration-invariant distances, aligns the set to the
    canonical base frame (resolving reflections), then extracts each joint
    angle as the signed dihedral about the joint axis between the modelled
    and measured directions to the next frame's vertex pair. Falls back to
    the next axis direction when the next origin lies on the current axis.

    Raises ReconstructionDiverged when any invariant distance deviates by
    more than ``tol`` or a joint is geometrically unobservable.
    """
    pts = np.asarray(points, dtype=float)
    n = chain.dof
    expected = 2 * n + 4
    if pts.shape != (expected, 3):
        raise GraphError(f"expected point set of shape ({expected}, 3), got {pts.shape}")
    index, dist = _structure_check_edges(chain)
    realized = np.linalg.norm(pts[index[:, 0]] - pts[index[:, 1]], axis=1)
    worst = np.max(np.abs(realized - dist))
    if worst > tol:
        k = int(np.argmax(np.abs(realized - dist)))
        raise ReconstructionDiverged(
            f"distance violation {worst:.4f} m on edge {tuple(index[k])} exceeds {tol} m"
        )
    pts = align_to_base(chain, pts)

    angles = np.zeros(n)
    current = RigidTransform.identity()
    for i in range(n):
        pre = current @ chain.joints[i].transform
        origin = pre.translation
        axis_w = pre.rotation @ chain.joints[i].axis
        if i < n - 1:
            nxt = pre @ chain.joints[i + 1].transform
            next_axis_local = chain.joints[i + 1].axis
        else:
            nxt = pre @ chain.tool
            next_axis_local = UNIT_Z
        ref_pos = nxt.translation - origin
        ref_dir = nxt.rotation @ next_axis_local
        meas_on = pts[2 * (i + 1)]
        meas_off = pts[2 * (i + 1) + 1]

        def perp(vec):
            return vec - (vec @ axis_w) * axis_w

        ref = perp(ref_pos)
        meas = perp(meas_on - origin)
        if np.linalg.norm(ref) < 1e-6 * (1.0 + np.linalg.norm(ref_pos)):
            ref = perp(ref_dir)
            meas = perp(meas_off - meas_on)
            if np.linalg.norm(ref) < 1e-6:
                raise ReconstructionDiverged(
                    f"joint {i} unobservable: next origin and next axis both "
                    "parallel to the joint axis"
                )
        angle = float(
            np.arctan2(axis_w @ np.cross(ref, meas), ref @ meas)
        )
        angles[i] = angle
        current = pre @ RigidTransform(
            rotation_about_axis(chain.joints[i].axis, angle), np.zeros(3)
        )
    return Configuration(wrap_angle(angles))


# ---------------------------------------------------------------------------
# Serialization


def graph_to_record(g: DgGraph) -> dict:
    """JSON-serializable record of a graph."""
    record = {
        "roles": [int(r) for r in g.roles],
        "known_mask": [bool(m) for m in g.known_mask],
        "positions": [[float(v) for v in row] for row in g.positions],
        "edges": [
            [int(i), int(j), float(d)]
            for (i, j), d in zip(g.edge_index, g.edge_dist)
        ],
    }
    if g.base_frame is not None:
        record["base_frame"] = [[float(v) for v in row] for row in g.base_frame]
    if g.goal is not None:
        record["goal"] = {
            "rotation": [[float(v) for v in row] for row in g.goal.rotation],
            "translation": [float(v) for v in g.goal.translation],
        }
    return record


def graph_from_record(record: dict) -> DgGraph:
    edges = record["edges"]
    index = np.array([[e[0], e[1]] for e in edges], dtype=int)
    dist = np.array([e[2] for e in edges])
    goal = None
    if "goal" in record:
        goal = RigidTransform(
            np.array(record["goal"]["rotation"]), np.array(record["goal"]["translation"])
        )
    base = np.array(record["base_frame"]) if "base_frame" in record else None
    return DgGraph(
        roles=np.array(record["roles"], dtype=np.int8),
        positions=np.array(record["positions"]),
        known_mask=np.array(record["known_mask"], dtype=bool),
        edge_index=index,
        edge_dist=dist,
        base_frame=base,
        goal=goal,
    )
