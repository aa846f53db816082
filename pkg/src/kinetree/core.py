"""Core domain types: point clouds, joints, kinematic trees, forward articulation.

All lengths are meters and all angles radians. Types are immutable after
construction (numpy arrays are frozen via the writeable flag) and all
operations here are pure functions.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np

from .errors import LimitError, SchemaError

FIXED = "fixed"
REVOLUTE = "revolute"
PRISMATIC = "prismatic"
JOINT_KINDS = (FIXED, REVOLUTE, PRISMATIC)


class MotionType(IntEnum):
    """Articulation class of a part relative to its parent.

    The integer values index classifier outputs and must not be reordered.
    """

    STATIC = 0
    ROTATING = 1
    TRANSLATING = 2
    ROTATING_TRANSLATING = 3


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.flags.writeable = False
    return a


def _as_vec3(v, name: str) -> np.ndarray:
    a = np.asarray(v, dtype=np.float64)
    if a.shape != (3,):
        raise SchemaError(f"{name} must be a 3-vector, got shape {a.shape}")
    return _freeze(a)


@dataclass(frozen=True, eq=False)
class PointCloud:
    """3D points with optional per-point part labels.

    ``points`` is (N, 3) float64; ``labels`` is (N,) non-negative ints or
    None.  Coordinates must be finite.  Label density (every id 0..P-1
    present) is required only by consumers that build part graphs; use
    :meth:`label_violations` to check it.
    """

    points: np.ndarray
    labels: np.ndarray | None = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 3:
            raise SchemaError(f"points must be (N, 3), got {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise SchemaError("points contain non-finite coordinates")
        object.__setattr__(self, "points", _freeze(pts))
        if self.labels is not None:
            lab = np.asarray(self.labels)
            if lab.shape != (pts.shape[0],):
                raise SchemaError(
                    f"labels length {lab.shape} does not match {pts.shape[0]} points"
                )
            if lab.size and (not np.issubdtype(lab.dtype, np.integer) or lab.min() < 0):
                raise SchemaError("labels must be non-negative integers")
            object.__setattr__(self, "labels", _freeze(lab.astype(np.int64)))

    def __len__(self) -> int:
        return self.points.shape[0]

    @property
    def n_parts(self) -> int:
        if self.labels is None or len(self) == 0:
            return 0
        return int(self.labels.max()) + 1

    def label_violations(self) -> list[str]:
        """Check label density: ids 0..P-1 each present at least once."""
        if self.labels is None:
            return ["cloud is unlabeled"]
        if len(self) == 0:
            return ["cloud is empty"]
        present = np.unique(self.labels)
        missing = sorted(set(range(self.n_parts)) - set(present.tolist()))
        if missing:
            return [f"label ids missing from dense range 0..{self.n_parts - 1}: {missing}"]
        return []

    def bbox(self) -> tuple[np.ndarray, np.ndarray]:
        return self.points.min(axis=0), self.points.max(axis=0)

    def bbox_diagonal(self) -> float:
        lo, hi = self.bbox()
        return float(np.linalg.norm(hi - lo))


@dataclass(frozen=True, eq=False)
class Joint:
    """Joint between a parent and child part.

    ``axis`` must be unit length for non-fixed kinds; ``limits`` are radians
    for revolute and meters for prismatic.  Fixed joints ignore axis and
    limits (canonical defaults are stored so serialization stays uniform).
    """

    kind: str
    axis: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 1.0]))
    origin: np.ndarray = field(default_factory=lambda: np.zeros(3))
    limits: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if self.kind not in JOINT_KINDS:
            raise SchemaError(f"unknown joint kind {self.kind!r}")
        object.__setattr__(self, "axis", _as_vec3(self.axis, "axis"))
        object.__setattr__(self, "origin", _as_vec3(self.origin, "origin"))
        lo, hi = float(self.limits[0]), float(self.limits[1])
        if lo > hi:
            raise SchemaError(f"joint limits reversed: [{lo}, {hi}]")
        object.__setattr__(self, "limits", (lo, hi))
        if self.kind != FIXED:
            n = float(np.linalg.norm(self.axis))
            if abs(n - 1.0) > 1e-6:
                raise SchemaError(f"{self.kind} joint axis norm {n} is not 1")

    @property
    def is_fixed(self) -> bool:
        return self.kind == FIXED


@dataclass(frozen=True)
class TreeNode:
    part_id: int
    motion: MotionType


@dataclass(frozen=True, eq=False)
class TreeEdge:
    parent: int
    child: int
    joint: Joint


@dataclass(frozen=True, eq=False)
class KinematicTree:
    """Rooted directed tree over parts; edge parent->child means the child
    part moves with (is carried by) the parent part."""

    nodes: tuple[TreeNode, ...]
    root: int
    edges: tuple[TreeEdge, ...]

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "edges", tuple(self.edges))

    @property
    def part_ids(self) -> list[int]:
        return [n.part_id for n in self.nodes]

    def motion_of(self, part_id: int) -> MotionType:
        for n in self.nodes:
            if n.part_id == part_id:
                return n.motion
        raise SchemaError(f"part {part_id} not in tree")

    def parent_map(self) -> dict[int, int]:
        return {e.child: e.parent for e in self.edges}

    def children_map(self) -> dict[int, list[int]]:
        out: dict[int, list[int]] = {n.part_id: [] for n in self.nodes}
        for e in self.edges:
            out.setdefault(e.parent, []).append(e.child)
        return out

    def edge_joint(self, parent: int, child: int) -> Joint:
        for e in self.edges:
            if e.parent == parent and e.child == child:
                return e.joint
        raise SchemaError(f"edge {parent}->{child} not in tree")

    def topological_order(self) -> list[int]:
        """Part ids root-first; requires a valid tree."""
        children = self.children_map()
        order, stack = [], [self.root]
        while stack:
            pid = stack.pop()
            order.append(pid)
            stack.extend(sorted(children.get(pid, []), reverse=True))
        return order


@dataclass(frozen=True)
class JointPose:
    """Map part_id -> joint value for every non-fixed joint (child part keys)."""

    values: dict[int, float]

    def __post_init__(self):
        object.__setattr__(
            self, "values", {int(k): float(v) for k, v in self.values.items()}
        )


# ---------------------------------------------------------------------------
# geometry primitives used by ground-truth objects


@dataclass(frozen=True, eq=False)
class Box:
    """Axis-aligned box given by center and full side lengths."""

    center: np.ndarray
    size: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "center", _as_vec3(self.center, "center"))
        size = _as_vec3(self.size, "size")
        if np.any(np.asarray(size) <= 0):
            raise SchemaError("box size must be positive")
        object.__setattr__(self, "size", size)

    def surface_area(self) -> float:
        a, b, c = self.size
        return float(2.0 * (a * b + b * c + c * a))

    def aabb(self) -> tuple[np.ndarray, np.ndarray]:
        h = self.size / 2.0
        return self.center - h, self.center + h

    def sample_surface(self, rng: np.random.Generator, n: int) -> np.ndarray:
        a, b, c = self.size
        # face order: -x, +x, -y, +y, -z, +z
        areas = np.array([b * c, b * c, a * c, a * c, a * b, a * b])
        counts = rng.multinomial(n, areas / areas.sum())
        h = self.size / 2.0
        pts = np.empty((n, 3))
        k = 0
        for face, cnt in enumerate(counts):
            if cnt == 0:
                continue
            u = rng.uniform(-1.0, 1.0, size=(cnt, 2))
            block = np.empty((cnt, 3))
            ax = face // 2
            sign = -1.0 if face % 2 == 0 else 1.0
            others = [i for i in range(3) if i != ax]
            block[:, ax] = sign * h[ax]
            block[:, others[0]] = u[:, 0] * h[others[0]]
            block[:, others[1]] = u[:, 1] * h[others[1]]
            pts[k : k + cnt] = block
            k += cnt
        return pts + self.center


@dataclass(frozen=True, eq=False)
class Cylinder:
    """Cylinder with axis along +z, given by center, radius and full height."""

    center: np.ndarray
    radius: float
    height: float

    def __post_init__(self):
        object.__setattr__(self, "center", _as_vec3(self.center, "center"))
        if self.radius <= 0 or self.height <= 0:
            raise SchemaError("cylinder radius/height must be positive")
        object.__setattr__(self, "radius", float(self.radius))
        object.__setattr__(self, "height", float(self.height))

    def surface_area(self) -> float:
        lateral = 2.0 * np.pi * self.radius * self.height
        caps = 2.0 * np.pi * self.radius**2
        return float(lateral + caps)

    def aabb(self) -> tuple[np.ndarray, np.ndarray]:
        r, h = self.radius, self.height / 2.0
        d = np.array([r, r, h])
        return self.center - d, self.center + d

    def sample_surface(self, rng: np.random.Generator, n: int) -> np.ndarray:
        lateral = 2.0 * np.pi * self.radius * self.height
        cap = np.pi * self.radius**2
        counts = rng.multinomial(n, np.array([lateral, cap, cap]) / (lateral + 2 * cap))
        pts = np.empty((n, 3))
        k = 0
        n_lat, n_bot, n_top = counts
        if n_lat:
            th = rng.uniform(0.0, 2.0 * np.pi, n_lat)
            z = rng.uniform(-self.height / 2.0, self.height / 2.0, n_lat)
            pts[k : k + n_lat] = np.column_stack(
                [self.radius * np.cos(th), self.radius * np.sin(th), z]
            )
            k += n_lat
        for sign, cnt in ((-1.0, n_bot), (1.0, n_top)):
            if cnt == 0:
                continue
            th = rng.uniform(0.0, 2.0 * np.pi, cnt)
            r = self.radius * np.sqrt(rng.uniform(0.0, 1.0, cnt))
            pts[k : k + cnt] = np.column_stack(
                [r * np.cos(th), r * np.sin(th), np.full(cnt, sign * self.height / 2.0)]
            )
            k += cnt
        return pts + self.center


Primitive = Box | Cylinder


@dataclass(frozen=True, eq=False)
class Part:
    part_id: int
    shape: Primitive


@dataclass(frozen=True, eq=False)
class GroundTruthObject:
    """Procedural articulated object: one primitive per part plus its tree."""

    parts: tuple[Part, ...]
    tree: KinematicTree
    category: str

    def __post_init__(self):
        object.__setattr__(self, "parts", tuple(self.parts))
        ids = sorted(p.part_id for p in self.parts)
        if ids != list(range(len(ids))):
            raise SchemaError(f"part ids not dense: {ids}")
        if sorted(self.tree.part_ids) != ids:
            raise SchemaError("tree nodes do not match part ids")

    @property
    def n_parts(self) -> int:
        return len(self.parts)

    def part(self, part_id: int) -> Part:
        for p in self.parts:
            if p.part_id == part_id:
                return p
        raise SchemaError(f"no part {part_id}")

    def rest_aabb(self) -> tuple[np.ndarray, np.ndarray]:
        los, his = zip(*(p.shape.aabb() for p in self.parts))
        return np.min(los, axis=0), np.max(his, axis=0)

    def bbox_diagonal(self) -> float:
        lo, hi = self.rest_aabb()
        return float(np.linalg.norm(hi - lo))


# ---------------------------------------------------------------------------
# transforms


def rotation_about_axis(axis: np.ndarray, angle: float) -> np.ndarray:
    """Rodrigues rotation matrix for a unit axis."""
    k = np.asarray(axis, dtype=np.float64)
    kx = np.array([[0, -k[2], k[1]], [k[2], 0, -k[0]], [-k[1], k[0], 0]])
    return np.eye(3) * np.cos(angle) + np.sin(angle) * kx + (1 - np.cos(angle)) * np.outer(k, k)


def joint_transform(joint: Joint, value: float) -> np.ndarray:
    """Homogeneous 4x4 transform a joint applies to its child subtree."""
    t = np.eye(4)
    if joint.kind == FIXED:
        return t
    if joint.kind == PRISMATIC:
        t[:3, 3] = joint.axis * value
        return t
    r = rotation_about_axis(joint.axis, value)
    t[:3, :3] = r
    t[:3, 3] = joint.origin - r @ joint.origin
    return t


def part_transforms(obj: GroundTruthObject, pose: JointPose) -> dict[int, np.ndarray]:
    """4x4 rest-to-posed transform per part, composed along root->part paths.

    Raises LimitError when a pose value is outside its joint's limits and
    SchemaError for pose entries that do not correspond to a non-fixed joint.
    """
    tfs: dict[int, np.ndarray] = {obj.tree.root: np.eye(4)}
    seen: set[int] = set()
    for pid in obj.tree.topological_order():
        if pid == obj.tree.root:
            continue
        parent = obj.tree.parent_map()[pid]
        joint = obj.tree.edge_joint(parent, pid)
        value = 0.0
        if not joint.is_fixed:
            value = pose.values.get(pid, 0.0)
            lo, hi = joint.limits
            if not (lo - 1e-12 <= value <= hi + 1e-12):
                raise LimitError(
                    f"pose value {value} for part {pid} outside limits [{lo}, {hi}]"
                )
            if pid in pose.values:
                seen.add(pid)
        tfs[pid] = tfs[parent] @ joint_transform(joint, value)
    unknown = set(pose.values) - seen
    if unknown:
        raise SchemaError(f"pose entries for unknown/fixed joints: {sorted(unknown)}")
    return tfs


def apply_articulation(
    obj: GroundTruthObject, pose: JointPose, cloud: PointCloud
) -> PointCloud:
    """Transform a rest-pose labeled cloud into the articulated pose.

    Every point moves rigidly with its part; labels are preserved and the
    root part never moves.
    """
    if cloud.labels is None:
        raise SchemaError("apply_articulation requires a labeled cloud")
    ids = {p.part_id for p in obj.parts}
    bad = set(np.unique(cloud.labels).tolist()) - ids
    if bad:
        raise SchemaError(f"cloud labels reference unknown parts: {sorted(bad)}")
    tfs = part_transforms(obj, pose)
    out = np.array(cloud.points)
    for pid in np.unique(cloud.labels):
        m = tfs[int(pid)]
        if np.array_equal(m, np.eye(4)):
            continue
        mask = cloud.labels == pid
        out[mask] = cloud.points[mask] @ m[:3, :3].T + m[:3, 3]
    return PointCloud(out, cloud.labels)


# ---------------------------------------------------------------------------
# tree validation and DOT export


def validate_tree(tree: KinematicTree) -> list[str]:
    """Return a list of invariant violations; empty iff the tree is valid."""
    violations: list[str] = []
    ids = [n.part_id for n in tree.nodes]
    if len(set(ids)) != len(ids):
        dupes = sorted({i for i in ids if ids.count(i) > 1})
        violations.append(f"duplicate node ids: {dupes}")
    id_set = set(ids)
    if tree.root not in id_set:
        violations.append(f"root {tree.root} is not a node")
    for e in tree.edges:
        for end in (e.parent, e.child):
            if end not in id_set:
                violations.append(f"edge {e.parent}->{e.child} references unknown id {end}")

    parents: dict[int, list[int]] = {}
    for e in tree.edges:
        parents.setdefault(e.child, []).append(e.parent)
    for child, ps in sorted(parents.items()):
        if len(ps) > 1:
            violations.append(f"node {child} has multiple parents: {sorted(ps)}")
    if tree.root in parents:
        violations.append(f"root {tree.root} has a parent")
    orphans = sorted(id_set - set(parents) - {tree.root})
    if orphans:
        violations.append(f"multiple roots: nodes without parent besides root: {orphans}")

    # cycle detection over directed edges
    adj: dict[int, list[int]] = {i: [] for i in id_set}
    for e in tree.edges:
        if e.parent in adj and e.child in id_set:
            adj[e.parent].append(e.child)
    state: dict[int, int] = {}  # 0 visiting, 1 done

    def find_cycle(start: int) -> list[int] | None:
        stack: list[tuple[int, int]] = [(start, 0)]
        path: list[int] = []
        while stack:
            node, idx = stack.pop()
            if idx == 0:
                state[node] = 0
                path.append(node)
            if idx < len(adj[node]):
                stack.append((node, idx + 1))
                nxt = adj[node][idx]
                if state.get(nxt) == 0:
                    return path[path.index(nxt):] + [nxt]
                if nxt not in state:
                    stack.append((nxt, 0))
            else:
                state[node] = 1
                path.pop()
        return None

    for start in sorted(id_set):
        if start not in state:
            cycle = find_cycle(start)
            if cycle:
                violations.append(f"cycle detected: {cycle}")
                break

    # connectivity from root (undirected reachability not needed: a valid
    # tree is reachable root-down)
    if tree.root in id_set and not violations:
        reach = {tree.root}
        stack = [tree.root]
        while stack:
            for c in adj[stack.pop()]:
                if c not in reach:
                    reach.add(c)
                    stack.append(c)
        missing = sorted(id_set - reach)
        if missing:
            violations.append(f"nodes unreachable from root: {missing}")
    if len(tree.edges) != max(len(id_set) - 1, 0) and not violations:
        violations.append(
            f"edge count {len(tree.edges)} != node count - 1 ({len(id_set) - 1})"
        )
    return violations


def tree_to_dot(tree: KinematicTree) -> str:
    """Deterministic DOT digraph; nodes ascending by part_id, LF endings."""
    violations = validate_tree(tree)
    if violations:
        raise SchemaError("tree_to_dot requires a valid tree: " + "; ".join(violations))
    lines = ["digraph kinematic_tree {"]
    for n in sorted(tree.nodes, key=lambda n: n.part_id):
        shape = "doubleoctagon" if n.part_id == tree.root else "box"
        lines.append(
            f'  p{n.part_id} [label="part {n.part_id}\\n{n.motion.name}" shape={shape}];'
        )
    for e in sorted(tree.edges, key=lambda e: (e.parent, e.child)):
        lines.append(f'  p{e.parent} -> p{e.child} [label="{e.joint.kind}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
