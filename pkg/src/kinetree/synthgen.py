"""Procedural articulated objects, pose sampling and scan simulation.

Replaces an external CAD corpus with three desk-scale categories (cabinet,
lamp, chair) whose morphology exercises prismatic and revolute joints and
trees of depth >= 2.  All randomness flows through numpy SeedSequence
streams keyed on documented (tag, seed, ...) tuples so every artifact is
reproducible bit-for-bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (
    FIXED,
    PRISMATIC,
    REVOLUTE,
    Box,
    Cylinder,
    GroundTruthObject,
    Joint,
    JointPose,
    KinematicTree,
    MotionType,
    Part,
    PointCloud,
    TreeEdge,
    TreeNode,
    part_transforms,
)
from .errors import ConfigError

CATEGORIES = ("cabinet", "lamp", "chair")

# stream tags; changing any of these changes every generated artifact
_TAG_OBJECT = 101
_TAG_POSE = 102
_TAG_SCAN = 103
_TAG_VIEW = 104


def _rng(*key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(key))


def derive_seed(*key: int) -> int:
    """Stable 32-bit seed derived from an integer key tuple."""
    return int(np.random.SeedSequence(key).generate_state(1)[0])


@dataclass(frozen=True)
class ScanConfig:
    """Parameters of the simulated multi-view depth scan.

    The noise model is a stand-in for a real depth sensor: per-pixel
    visibility, range noise growing with depth squared, depth quantization
    and random dropout.  Defaults visibly degrade downstream metrics without
    destroying object structure; they are not calibrated to any real sensor.
    """

    n_points: int = 4096
    viewpoints: int = 4
    width: int = 160
    height: int = 120
    sigma0: float = 0.003  # range noise floor, meters
    sigma1: float = 0.002  # depth-squared noise coefficient, 1/m
    p_drop: float = 0.05
    quantization: float = 0.002  # depth step, meters
    fov_y: float = math.radians(55.0)

    def __post_init__(self):
        if self.n_points <= 0:
            raise ConfigError("n_points must be positive")
        if self.viewpoints < 1:
            raise ConfigError("viewpoints must be >= 1")
        if self.width < 1 or self.height < 1:
            raise ConfigError("depth buffer must be at least 1x1")
        if self.sigma0 < 0 or self.sigma1 < 0 or self.quantization < 0:
            raise ConfigError("noise parameters must be non-negative")
        if not (0.0 <= self.p_drop < 1.0):
            raise ConfigError("p_drop must lie in [0, 1)")


# ---------------------------------------------------------------------------
# object generation
#
# Dimension ranges (meters) keep every rest bounding-box diagonal inside
# [0.5, 2.0] and keep the bounding-box joint heuristic well-posed: drawers
# are longer along their pull axis than in any other direction, and doors
# are taller than they are wide.

_CABINET = {
    "depth": (0.45, 0.65),
    "height": (0.7, 1.3),
    "drawer_height": (0.1, 0.2),
    "drawer_pull_frac": (0.45, 0.65),  # of drawer depth
    "door_open_max": (1.2, 2.0),  # radians
    "handle_half": (0.05, 0.08),  # half-width of handle bar
}

_LAMP = {
    "base_radius": (0.12, 0.18),
    "base_height": (0.04, 0.08),
    "arm_radius": (0.015, 0.03),
    "arm_length": (0.28, 0.45),
    "head_radius": (0.06, 0.11),
    "head_height": (0.12, 0.18),
    "swing": (0.35, 0.6),  # radians, symmetric joint range
}

_CHAIR = {
    "base_radius": (0.22, 0.32),
    "base_height": (0.05, 0.09),
    "column_radius": (0.03, 0.05),
    "column_height": (0.25, 0.4),
    "seat_lift": (0.08, 0.14),
    "back_width": (0.35, 0.5),
    "back_height": (0.35, 0.55),
    "wheel_radius": (0.03, 0.045),
    "wheel_height": (0.025, 0.04),
}

_WALL = 0.02  # cabinet frame margin


def _u(rng: np.random.Generator, lo_hi: tuple[float, float]) -> float:
    return float(rng.uniform(*lo_hi))


class _Builder:
    """Accumulates parts and edges with dense ids in construction order."""

    def __init__(self):
        self.parts: list[Part] = []
        self.nodes: list[TreeNode] = []
        self.edges: list[TreeEdge] = []

    def add(self, shape, motion: MotionType, parent: int | None, joint: Joint | None) -> int:
        pid = len(self.parts)
        self.parts.append(Part(pid, shape))
        self.nodes.append(TreeNode(pid, motion))
        if parent is not None:
            self.edges.append(TreeEdge(parent, pid, joint))
        return pid

    def build(self, category: str) -> GroundTruthObject:
        tree = KinematicTree(tuple(self.nodes), 0, tuple(self.edges))
        return GroundTruthObject(tuple(self.parts), tree, category)


def _cabinet(rng: np.random.Generator, clearance: float) -> GroundTruthObject:
    """Cabinet body with drawers and/or doors.

    clearance == 0: drawers nest inside the body volume and doors sit flush
    on its front face (realistic contacts and overlap at any pull).
    clearance > 0: a "separated" layout for the clustering baseline: every
    moving part floats at least ``clearance`` meters from its neighbors, in
    front of the body.  Both layouts consume the RNG identically, so a seed
    names the same cabinet morphology in either mode.
    """
    g = _CABINET
    sep = clearance
    depth = _u(rng, g["depth"])
    height = _u(rng, g["height"])
    drawer_depth = 0.85 * depth
    # width < drawer depth keeps drawers elongated along the +y pull axis
    width = float(rng.uniform(0.3, 0.9 * drawer_depth - 0.01))
    layout = str(rng.choice(["drawers", "doors", "both"], p=[0.45, 0.25, 0.3]))
    if layout == "drawers":
        n_drawers, n_doors = int(rng.integers(1, 5)), 0
    elif layout == "doors":
        n_drawers, n_doors = 0, int(rng.integers(1, 3))
    else:
        n_drawers, n_doors = int(rng.integers(1, 4)), 2

    # doors occupy the bottom section; drawers stack above them
    door_h = 0.0
    if n_doors:
        dw_door = (width - _WALL) / n_doors - _WALL - sep
        lo_h = 1.25 * dw_door + 0.05
        if n_drawers:
            door_h = min(max(0.4 * height, lo_h), height - n_drawers * 0.1 - 0.02)
        else:
            door_h = min(max(0.62 * height, lo_h), height - 0.02)
    zone_lo = door_h + (sep if sep > 0 else 0.01 if n_doors else 0.02)
    if sep > 0 and n_drawers:
        height = max(height, zone_lo + n_drawers * (0.11 + sep) + 0.02)

    b = _Builder()
    b.add(Box([0.0, 0.0, height / 2.0], [width, depth, height]), MotionType.STATIC, None, None)
    front = depth / 2.0

    for i in range(n_drawers):
        slot = (height - 0.02 - zone_lo) / n_drawers
        dh = max(0.05, min(_u(rng, g["drawer_height"]), slot - max(0.02, sep + 0.01)))
        zc = zone_lo + slot * (i + 0.5)
        dw = width - 2 * _WALL
        if sep > 0:
            drawer_y = front + sep + drawer_depth / 2.0
        else:
            # drawer nests inside the body, front face flush with the body
            drawer_y = front - drawer_depth / 2.0
        drawer = Box([0.0, drawer_y, zc], [dw, drawer_depth, dh])
        pull = drawer_depth * _u(rng, g["drawer_pull_frac"])
        joint = Joint(PRISMATIC, axis=[0.0, 1.0, 0.0], origin=drawer.center, limits=(0.0, pull))
        did = b.add(drawer, MotionType.TRANSLATING, 0, joint)
        hw = _u(rng, g["handle_half"])
        handle_y = drawer_y + drawer_depth / 2.0 + sep + 0.015
        handle = Box([0.0, handle_y, zc], [2 * hw, 0.03, 0.024])
        b.add(handle, MotionType.STATIC, did, Joint(FIXED))

    for j in range(n_doors):
        dw = (width - _WALL) / n_doors - _WALL - sep
        dh = door_h - _WALL
        xc = -width / 2.0 + _WALL / 2.0 + ((width - _WALL) / n_doors) * (j + 0.5)
        thickness = 0.025
        door_y = front + sep + thickness / 2.0
        door = Box([xc, door_y, dh / 2.0 + 0.01], [dw, thickness, dh])
        hinge_right = j % 2 == 1 if n_doors == 2 else bool(rng.integers(0, 2))
        hx = xc + dw / 2.0 if hinge_right else xc - dw / 2.0
        # axis sign makes the door swing away from the body for q in [0, max]
        axis = [0.0, 0.0, -1.0] if hinge_right else [0.0, 0.0, 1.0]
        joint = Joint(
            REVOLUTE,
            axis=axis,
            origin=[hx, front, door.center[2]],
            limits=(0.0, _u(rng, g["door_open_max"])),
        )
        did = b.add(door, MotionType.ROTATING, 0, joint)
        hox = xc - (dw / 2.0 - 0.05) if hinge_right else xc + (dw / 2.0 - 0.05)
        handle = Box(
            [hox, door_y + thickness / 2.0 + sep + 0.015, door.center[2]],
            [0.025, 0.03, 2 * _u(rng, g["handle_half"])],
        )
        b.add(handle, MotionType.STATIC, did, Joint(FIXED))

    return b.build("cabinet")


def _lamp(rng: np.random.Generator, clearance: float) -> GroundTruthObject:
    g = _LAMP
    b = _Builder()
    base_r = _u(rng, g["base_radius"])
    base_h = _u(rng, g["base_height"])
    b.add(Cylinder([0.0, 0.0, base_h / 2.0], base_r, base_h), MotionType.STATIC, None, None)
    n_arms = int(rng.integers(1, 4))
    z = base_h
    parent = 0
    for _ in range(n_arms):
        length = _u(rng, g["arm_length"])
        arm = Cylinder([0.0, 0.0, z + length / 2.0], _u(rng, g["arm_radius"]), length)
        phi = _u(rng, (0.0, 2.0 * np.pi))
        swing = _u(rng, g["swing"])
        joint = Joint(
            REVOLUTE,
            axis=[np.cos(phi), np.sin(phi), 0.0],
            origin=[0.0, 0.0, z],
            limits=(-swing, swing),
        )
        parent = b.add(arm, MotionType.ROTATING, parent, joint)
        z += length
    head_h = _u(rng, g["head_height"])
    head = Cylinder([0.0, 0.0, z + head_h / 2.0], _u(rng, g["head_radius"]), head_h)
    phi = _u(rng, (0.0, 2.0 * np.pi))
    swing = _u(rng, g["swing"])
    b.add(
        head,
        MotionType.ROTATING,
        parent,
        Joint(REVOLUTE, axis=[np.cos(phi), np.sin(phi), 0.0], origin=[0.0, 0.0, z],
              limits=(-swing, swing)),
    )
    return _apply_clearance(b.build("lamp"), clearance)


def _chair(rng: np.random.Generator, clearance: float) -> GroundTruthObject:
    g = _CHAIR
    b = _Builder()
    base_r = _u(rng, g["base_radius"])
    base_h = _u(rng, g["base_height"])
    wheel_h = _u(rng, g["wheel_height"])
    base = Cylinder([0.0, 0.0, wheel_h + base_h / 2.0], base_r, base_h)
    b.add(base, MotionType.STATIC, None, None)

    col_r = _u(rng, g["column_radius"])
    col_h = _u(rng, g["column_height"])
    col_z = wheel_h + base_h
    column = Cylinder([0.0, 0.0, col_z + col_h / 2.0], col_r, col_h)
    lift = _u(rng, g["seat_lift"])
    cid = b.add(
        column,
        MotionType.TRANSLATING,
        0,
        Joint(PRISMATIC, axis=[0.0, 0.0, 1.0], origin=column.center, limits=(0.0, lift)),
    )

    bw = _u(rng, g["back_width"])
    bh = _u(rng, g["back_height"])
    back = Box([0.0, -col_r - 0.02, col_z + col_h + bh / 2.0 - 0.05], [bw, 0.04, bh])
    b.add(back, MotionType.STATIC, cid, Joint(FIXED))

    n_wheels = int(rng.integers(3, 6))
    wheel_r = _u(rng, g["wheel_radius"])
    for k in range(n_wheels):
        th = 2.0 * np.pi * k / n_wheels
        cx, cy = (base_r - wheel_r) * np.cos(th), (base_r - wheel_r) * np.sin(th)
        wheel = Cylinder([cx, cy, wheel_h / 2.0], wheel_r, wheel_h)
        # swivel caster: full revolution about its vertical axis
        b.add(
            wheel,
            MotionType.ROTATING,
            0,
            Joint(REVOLUTE, axis=[0.0, 0.0, 1.0], origin=wheel.center, limits=(-np.pi, np.pi)),
        )
    return _apply_clearance(b.build("chair"), clearance)


def _shrunk(shape, margin: float):
    if isinstance(shape, Box):
        return Box(shape.center, np.maximum(shape.size - margin, 0.012))
    r = max(shape.radius - margin / 2.0, 0.006)
    return Cylinder(shape.center, r, max(shape.height - margin, 0.012))


def _apply_clearance(obj: GroundTruthObject, clearance: float) -> GroundTruthObject:
    """Inset every primitive so inter-part gaps grow to ~clearance meters.

    Used by the segmentation baseline, which needs spatially separable parts;
    clearance 0 leaves contacts flush.
    """
    if clearance <= 0.0:
        return obj
    parts = tuple(Part(p.part_id, _shrunk(p.shape, clearance)) for p in obj.parts)
    return GroundTruthObject(parts, obj.tree, obj.category)


def generate_object(category: str, seed: int, clearance: float = 0.0) -> GroundTruthObject:
    """Deterministically generate one articulated object.

    cabinet: static body + 1-4 drawers (prismatic, outward +y axis) and/or
    1-2 doors (revolute, vertical hinge), each moving part carrying a static
    handle child.  lamp: static base + chain of 1-3 revolute arms + head.
    chair: static base + prismatic seat column + static back + 3-5 swivel
    wheels.
    """
    if category not in CATEGORIES:
        raise ConfigError(f"unknown category {category!r}; expected one of {CATEGORIES}")
    rng = _rng(_TAG_OBJECT, CATEGORIES.index(category), seed)
    if category == "cabinet":
        return _cabinet(rng, clearance)
    if category == "lamp":
        return _lamp(rng, clearance)
    return _chair(rng, clearance)


# ---------------------------------------------------------------------------
# pose sampling and scanning


def sample_pose(obj: GroundTruthObject, seed: int) -> JointPose:
    """Uniform independent value per non-fixed joint, inside its limits."""
    rng = _rng(_TAG_POSE, seed)
    values: dict[int, float] = {}
    for e in obj.tree.edges:
        if e.joint.is_fixed:
            continue
        lo, hi = e.joint.limits
        values[e.child] = lo if lo == hi else float(rng.uniform(lo, hi))
    return JointPose(values)


def rest_pose(obj: GroundTruthObject) -> JointPose:
    values = {}
    for e in obj.tree.edges:
        if not e.joint.is_fixed:
            lo, hi = e.joint.limits
            values[e.child] = min(max(0.0, lo), hi)
    return JointPose(values)


def scan_clean(
    obj: GroundTruthObject, pose: JointPose, n_points: int, seed: int
) -> PointCloud:
    """Sample exactly n_points on the posed surface, area-proportionally.

    Points are drawn on each part's rest-pose primitive and moved by the
    part's articulation transform, so every output point lies exactly on a
    posed primitive surface.  Labels are the owning part ids.
    """
    if n_points <= 0:
        raise ConfigError("n_points must be positive")
    rng = _rng(_TAG_SCAN, seed)
    areas = np.array([p.shape.surface_area() for p in obj.parts])
    counts = rng.multinomial(n_points, areas / areas.sum())
    tfs = part_transforms(obj, pose)
    pts = np.empty((n_points, 3))
    labels = np.empty(n_points, dtype=np.int64)
    k = 0
    for p, cnt in zip(obj.parts, counts):
        if cnt == 0:
            continue
        local = p.shape.sample_surface(rng, int(cnt))
        m = tfs[p.part_id]
        if not np.array_equal(m, np.eye(4)):
            local = local @ m[:3, :3].T + m[:3, 3]
        pts[k : k + cnt] = local
        labels[k : k + cnt] = p.part_id
        k += cnt
    return PointCloud(pts, labels)


def view_clean_seed(seed: int, view: int) -> int:
    """Seed of the clean sample drawn for one viewpoint of scan_noisy."""
    return derive_seed(_TAG_VIEW, seed, view)


def posed_aabb(obj: GroundTruthObject, pose: JointPose) -> tuple[np.ndarray, np.ndarray]:
    """Conservative axis-aligned bounds of the posed object."""
    tfs = part_transforms(obj, pose)
    corners = []
    for p in obj.parts:
        lo, hi = p.shape.aabb()
        cs = np.array(
            [[x, y, z] for x in (lo[0], hi[0]) for y in (lo[1], hi[1]) for z in (lo[2], hi[2])]
        )
        m = tfs[p.part_id]
        corners.append(cs @ m[:3, :3].T + m[:3, 3])
    corners = np.vstack(corners)
    return corners.min(axis=0), corners.max(axis=0)


def camera_ring(
    obj: GroundTruthObject, pose: JointPose, config: ScanConfig
) -> tuple[list[np.ndarray], np.ndarray]:
    """Camera positions on a ring around the posed object plus the target."""
    lo, hi = posed_aabb(obj, pose)
    center = (lo + hi) / 2.0
    diag = float(np.linalg.norm(hi - lo))
    radius = 1.6 * diag
    cams = []
    for v in range(config.viewpoints):
        th = 2.0 * np.pi * v / config.viewpoints
        cams.append(center + np.array([radius * np.cos(th), radius * np.sin(th), 0.25 * diag]))
    return cams, center


def _camera_basis(cam: np.ndarray, target: np.ndarray):
    fwd = target - cam
    fwd = fwd / np.linalg.norm(fwd)
    right = np.cross(fwd, np.array([0.0, 0.0, 1.0]))
    right = right / np.linalg.norm(right)
    up = np.cross(right, fwd)
    return right, up, fwd


def depth_visibility(
    points: np.ndarray, cam: np.ndarray, target: np.ndarray, config: ScanConfig
) -> tuple[np.ndarray, np.ndarray]:
    """Indices of points surviving one view's per-pixel nearest-depth test.

    Returns (surviving indices ascending, axial depth per input point; -inf
    marks points outside the frustum).  Pixel ties keep the nearer point,
    then the lower index.
    """
    right, up, fwd = _camera_basis(cam, target)
    rel = points - cam
    x, y, z = rel @ right, rel @ up, rel @ fwd
    fl = (config.height / 2.0) / math.tan(config.fov_y / 2.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        px = np.floor(config.width / 2.0 + fl * x / z).astype(np.int64)
        py = np.floor(config.height / 2.0 - fl * y / z).astype(np.int64)
    valid = (z > 1e-6) & (px >= 0) & (px < config.width) & (py >= 0) & (py < config.height)
    depth = np.where(valid, z, -np.inf)
    idx = np.flatnonzero(valid)
    if idx.size == 0:
        return idx, depth
    pix = (py[idx] * config.width + px[idx]).astype(np.int64)
    order = np.lexsort((idx, z[idx], pix))
    pix_sorted = pix[order]
    first = np.ones(order.size, dtype=bool)
    first[1:] = pix_sorted[1:] != pix_sorted[:-1]
    keep = np.sort(idx[order[first]])
    return keep, depth


def scan_noisy(
    obj: GroundTruthObject, pose: JointPose, config: ScanConfig, seed: int
) -> PointCloud:
    """Multi-view noisy scan: visibility, range noise, quantization, dropout.

    The clean point budget is split across viewpoints on a ring around the
    object.  Surviving points are displaced along their view ray by Gaussian
    noise with std sigma0 + sigma1 * z^2 (z = axial depth), depth is then
    quantized to the configured step and points drop out independently.
    When a part would lose every point, a few of its noised points are
    reinstated so each part id stays represented (bounded so the output
    never exceeds n_points * viewpoints).
    """
    tfs = part_transforms(obj, pose)
    cams, center = camera_ring(obj, pose, config)
    per_view = [config.n_points // config.viewpoints] * config.viewpoints
    for i in range(config.n_points % config.viewpoints):
        per_view[i] += 1
    out_pts: list[np.ndarray] = []
    out_lab: list[np.ndarray] = []
    spares: dict[int, list[np.ndarray]] = {p.part_id: [] for p in obj.parts}
    noise_free = config.sigma0 == 0.0 and config.sigma1 == 0.0 and config.quantization == 0.0
    for v, cam in enumerate(cams):
        clean = scan_clean(obj, pose, per_view[v], view_clean_seed(seed, v))
        keep, depth = depth_visibility(clean.points, cam, center, config)
        rng = _rng(_TAG_VIEW, seed, v, 1)
        n_std = rng.normal(size=keep.size)
        u_drop = rng.uniform(size=keep.size)
        if keep.size == 0:
            continue
        p = clean.points[keep]
        lab = clean.labels[keep]
        if noise_free:
            q, ok = p, np.ones(keep.size, dtype=bool)
        else:
            z = depth[keep]
            r = np.linalg.norm(p - cam, axis=1)
            n = n_std * (config.sigma0 + config.sigma1 * z * z)
            r1 = r + n
            z1 = z * (r1 / r)
            if config.quantization > 0.0:
                z2 = np.round(z1 / config.quantization) * config.quantization
            else:
                z2 = z1
            ok = z2 > 0.0
            scale = np.where(ok, (r1 / r) * (z2 / np.where(z1 == 0.0, 1.0, z1)), 1.0)
            q = cam + (p - cam) * scale[:, None]
            exact = (n == 0.0) & (z2 == z1)
            q[exact] = p[exact]
        for pid in np.unique(lab):
            rows = q[(lab == pid) & ok]
            if rows.size:
                spares[int(pid)].append(rows[:8])
        survive = ok & (u_drop >= config.p_drop)
        if survive.any():
            out_pts.append(q[survive])
            out_lab.append(lab[survive])
    points = np.vstack(out_pts) if out_pts else np.empty((0, 3))
    labels = np.concatenate(out_lab) if out_lab else np.empty(0, dtype=np.int64)

    # part survival floor
    present = set(np.unique(labels).tolist())
    budget = config.n_points * config.viewpoints - points.shape[0]
    missing = [p for p in obj.parts if p.part_id not in present]
    floors_p, floors_l = [], []
    for p in missing:
        take = max(1, min(8, budget // max(1, len(missing))))
        pool = np.vstack(spares[p.part_id]) if spares[p.part_id] else None
        if pool is None:
            rng_f = _rng(_TAG_VIEW, seed, 9999, p.part_id)
            local = p.shape.sample_surface(rng_f, take)
            m = tfs[p.part_id]
            pool = local @ m[:3, :3].T + m[:3, 3]
        rows = pool[:take]
        floors_p.append(rows)
        floors_l.append(np.full(rows.shape[0], p.part_id, dtype=np.int64))
    if floors_p:
        points = np.vstack([points] + floors_p)
        labels = np.concatenate([labels] + floors_l)
    return PointCloud(points, labels)
