"""Candidate part graphs from labeled clouds, plus a clustering baseline.

The candidate ("overcomplete") graph connects every pair of parts whose
minimum point-to-point distance falls below a threshold that is relative to
the cloud's bounding-box diagonal.  Minimum distances come from a uniform
spatial hash grid searched in expanding shells; the arithmetic per point
pair is identical to the brute-force path, so results match it exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import PointCloud
from .errors import SchemaError

DEFAULT_TAU_REL = 0.05


@dataclass(frozen=True, eq=False)
class GraphNode:
    part_id: int
    point_indices: np.ndarray
    centroid: np.ndarray
    aabb_min: np.ndarray
    aabb_max: np.ndarray


@dataclass(frozen=True, eq=False)
class PartGraph:
    """Undirected candidate graph over parts; edges canonical (u < v).

    ``repair_flags[i]`` is True when edge i was added by connectivity repair
    rather than by the distance threshold.
    """

    nodes: tuple[GraphNode, ...]
    edges: tuple[tuple[int, int], ...]
    repair_flags: tuple[bool, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        edges = tuple((int(u), int(v)) for u, v in self.edges)
        object.__setattr__(self, "edges", edges)
        if not self.repair_flags:
            object.__setattr__(self, "repair_flags", tuple(False for _ in edges))
        p = len(self.nodes)
        ids = sorted(n.part_id for n in self.nodes)
        if ids != list(range(p)):
            raise SchemaError(f"node part ids not dense: {ids}")
        seen = set()
        for u, v in edges:
            if u == v:
                raise SchemaError(f"self-loop on node {u}")
            if not (0 <= u < v < p):
                raise SchemaError(f"edge ({u}, {v}) not canonical for {p} nodes")
            if (u, v) in seen:
                raise SchemaError(f"duplicate edge ({u}, {v})")
            seen.add((u, v))
        if p > 1 and not _connected(p, edges):
            raise SchemaError("candidate graph is not connected")

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    def neighbors(self, u: int) -> list[int]:
        out = [v for a, v in self.edges if a == u] + [a for a, v in self.edges if v == u]
        return sorted(out)

    def edge_array(self) -> np.ndarray:
        return np.array(self.edges, dtype=np.int64).reshape(-1, 2)


def _connected(n: int, edges) -> bool:
    parent = list(range(n))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for u, v in edges:
        parent[find(u)] = find(v)
    return len({find(i) for i in range(n)}) == 1


# ---------------------------------------------------------------------------
# spatial hashing


class _HashGrid:
    """Uniform grid over points; cells map to the point indices they hold."""

    def __init__(self, points: np.ndarray, cell: float):
        self.points = points
        self.cell = cell
        keys = np.floor(points / cell).astype(np.int64)
        self.cells: dict[tuple[int, int, int], list[int]] = {}
        for i, k in enumerate(map(tuple, keys)):
            self.cells.setdefault(k, []).append(i)
        self.lo = points.min(axis=0)
        self.hi = points.max(axis=0)

    def key_of(self, p: np.ndarray) -> tuple[int, int, int]:
        return tuple(np.floor(p / self.cell).astype(np.int64))

    def aabb_sq_dist(self, queries: np.ndarray) -> np.ndarray:
        """Lower bound per query: squared distance to the grid's bounding box."""
        d = np.maximum(np.maximum(self.lo - queries, queries - self.hi), 0.0)
        return (d * d).sum(axis=1)


def _sq_dists(p: np.ndarray, block: np.ndarray) -> np.ndarray:
    d = block - p
    return d[:, 0] * d[:, 0] + d[:, 1] * d[:, 1] + d[:, 2] * d[:, 2]


def _min_sq_dist_pair(queries: np.ndarray, grid: _HashGrid) -> float:
    """Min squared distance from any query point to any grid point.

    Expanding-shell search: after finishing Chebyshev shell k around a query
    point, any unvisited grid point is at least k*cell away, so a query
    stops once the running best cannot be beaten.  Queries run in ascending
    order of their bounding-box lower bound and are pruned entirely once
    that bound exceeds the running best, which leaves the returned value
    exact while skipping most of the work.
    """
    cell = grid.cell
    lower = grid.aabb_sq_dist(queries)
    order = np.argsort(lower, kind="stable")
    best = np.inf
    for qi in order:
        if lower[qi] >= best:
            break  # ascending bounds: nothing later can improve
        q = queries[qi]
        kq = grid.key_of(q)
        k = 0
        while True:
            shell_pts: list[int] = []
            if k == 0:
                shell_pts.extend(grid.cells.get(kq, ()))
            else:
                for dx in range(-k, k + 1):
                    for dy in range(-k, k + 1):
                        rim = max(abs(dx), abs(dy)) == k
                        for dz in ((-k, k) if rim is False else range(-k, k + 1)):
                            shell_pts.extend(
                                grid.cells.get((kq[0] + dx, kq[1] + dy, kq[2] + dz), ())
                            )
            if shell_pts:
                d2 = _sq_dists(q, grid.points[np.array(shell_pts, dtype=np.int64)])
                m = float(d2.min())
                if m < best:
                    best = m
            # conservative shrink keeps the bound a true lower bound under
            # floating-point rounding
            bound = (k * cell) ** 2 * (1.0 - 1e-12)
            if best <= bound:
                break
            k += 1
    return best


def part_min_distances(cloud: PointCloud) -> np.ndarray:
    """Symmetric P x P matrix of minimum inter-part point distances.

    Entry (i, j) is the minimum Euclidean distance over point pairs labeled
    i and j; the diagonal is zero.  Matches the O(n^2) brute force exactly
    (identical per-pair arithmetic).
    """
    if cloud.labels is None:
        raise SchemaError("part_min_distances requires a labeled cloud")
    bad = cloud.label_violations()
    if bad:
        raise SchemaError("; ".join(bad))
    p = cloud.n_parts
    out = np.zeros((p, p))
    if p <= 1:
        return out
    diag = cloud.bbox_diagonal()
    n = len(cloud)
    cell = max(diag / max(n ** (1.0 / 3.0), 1.0), 1e-9)
    groups = [cloud.points[cloud.labels == i] for i in range(p)]
    grids = [_HashGrid(g, cell) for g in groups]
    for i in range(p):
        for j in range(i + 1, p):
            # query with the smaller side against the larger side's grid
            if groups[i].shape[0] <= groups[j].shape[0]:
                q, grid = groups[i], grids[j]
            else:
                q, grid = groups[j], grids[i]
            d2 = _min_sq_dist_pair(q, grid)
            out[i, j] = out[j, i] = np.sqrt(d2)
    return out


def part_min_distances_bruteforce(cloud: PointCloud) -> np.ndarray:
    """O(n^2) reference: same per-pair arithmetic as the hash-grid path."""
    if cloud.labels is None:
        raise SchemaError("part_min_distances requires a labeled cloud")
    bad = cloud.label_violations()
    if bad:
        raise SchemaError("; ".join(bad))
    p = cloud.n_parts
    out = np.zeros((p, p))
    groups = [cloud.points[cloud.labels == i] for i in range(p)]
    for i in range(p):
        for j in range(i + 1, p):
            best = np.inf
            for q in groups[i]:
                d2 = _sq_dists(q, groups[j])
                m = float(d2.min())
                if m < best:
                    best = m
            out[i, j] = out[j, i] = np.sqrt(best)
    return out


# ---------------------------------------------------------------------------
# graph construction


def part_nodes(cloud: PointCloud) -> tuple[GraphNode, ...]:
    nodes = []
    for pid in range(cloud.n_parts):
        idx = np.flatnonzero(cloud.labels == pid)
        pts = cloud.points[idx]
        nodes.append(
            GraphNode(
                part_id=pid,
                point_indices=idx,
                centroid=pts.mean(axis=0),
                aabb_min=pts.min(axis=0),
                aabb_max=pts.max(axis=0),
            )
        )
    return tuple(nodes)


def build_graph(cloud: PointCloud, tau_rel: float = DEFAULT_TAU_REL) -> PartGraph:
    """Overcomplete candidate graph: edge iff min part distance < tau_rel * diag.

    If thresholding leaves the graph disconnected, the globally minimum
    distance edge between two components is added repeatedly (connectivity
    repair) until one component remains.
    """
    if tau_rel <= 0:
        raise SchemaError("tau_rel must be positive")
    if cloud.labels is None:
        raise SchemaError("build_graph requires a labeled cloud")
    bad = cloud.label_violations()
    if bad:
        raise SchemaError("; ".join(bad))
    p = cloud.n_parts
    nodes = part_nodes(cloud)
    if p == 1:
        return PartGraph(nodes, ())
    dists = part_min_distances(cloud)
    tau = tau_rel * cloud.bbox_diagonal()
    edges = [(i, j) for i in range(p) for j in range(i + 1, p) if dists[i, j] < tau]
    flags = [False] * len(edges)

    comp = list(range(p))

    def find(a):
        while comp[a] != a:
            comp[a] = comp[comp[a]]
            a = comp[a]
        return a

    for u, v in edges:
        comp[find(u)] = find(v)
    while len({find(i) for i in range(p)}) > 1:
        best = None
        for i in range(p):
            for j in range(i + 1, p):
                if find(i) == find(j):
                    continue
                cand = (dists[i, j], i, j)
                if best is None or cand < best:
                    best = cand
        _, i, j = best
        edges.append((i, j))
        flags.append(True)
        comp[find(i)] = find(j)
    order = np.argsort([u * p + v for u, v in edges], kind="stable")
    return PartGraph(nodes, tuple(edges[k] for k in order), tuple(flags[k] for k in order))


def graph_from_labels(cloud: PointCloud, tau_rel: float = DEFAULT_TAU_REL) -> PartGraph:
    """Alias kept for readability at call sites."""
    return build_graph(cloud, tau_rel)


# ---------------------------------------------------------------------------
# clustering baseline (non-learned segmentation substitute)


def segment_clustering(cloud: PointCloud, radius: float) -> PointCloud:
    """Label points by connected components of the radius graph.

    Components are ordered by size descending (ties: smallest member point
    index first) and labeled 0, 1, ...; the geometry is untouched.
    """
    if radius <= 0:
        raise SchemaError("radius must be positive")
    n = len(cloud)
    if n == 0:
        return PointCloud(cloud.points, np.empty(0, dtype=np.int64))
    pts = cloud.points
    grid = _HashGrid(pts, radius)
    parent = list(range(n))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    r2 = radius * radius
    for key, members in grid.cells.items():
        mem = np.array(members, dtype=np.int64)
        for dx in (-1, 0, 1):
            for dy in (-1, 0, 1):
                for dz in (-1, 0, 1):
                    other = grid.cells.get((key[0] + dx, key[1] + dy, key[2] + dz))
                    if other is None:
                        continue
                    oth = np.array(other, dtype=np.int64)
                    for i in mem:
                        d2 = _sq_dists(pts[i], pts[oth])
                        for j in oth[d2 < r2]:
                            ra, rb = find(int(i)), find(int(j))
                            if ra != rb:
                                parent[ra] = rb
    roots = np.array([find(i) for i in range(n)])
    sizes: dict[int, int] = {}
    firsts: dict[int, int] = {}
    for i, r in enumerate(roots):
        sizes[r] = sizes.get(r, 0) + 1
        firsts.setdefault(int(r), i)
    ordered = sorted(sizes, key=lambda r: (-sizes[r], firsts[int(r)]))
    relabel = {r: k for k, r in enumerate(ordered)}
    labels = np.array([relabel[int(r)] for r in roots], dtype=np.int64)
    return PointCloud(cloud.points, labels)


def segment_clustering_bruteforce(cloud: PointCloud, radius: float) -> PointCloud:
    """All-pairs union-find reference for segment_clustering."""
    if radius <= 0:
        raise SchemaError("radius must be positive")
    n = len(cloud)
    if n == 0:
        return PointCloud(cloud.points, np.empty(0, dtype=np.int64))
    pts = cloud.points
    parent = list(range(n))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    r2 = radius * radius
    for i in range(n):
        d2 = _sq_dists(pts[i], pts[i + 1 :])
        for off in np.flatnonzero(d2 < r2):
            j = i + 1 + int(off)
            ra, rb = find(i), find(j)
            if ra != rb:
                parent[ra] = rb
    roots = np.array([find(i) for i in range(n)])
    sizes: dict[int, int] = {}
    firsts: dict[int, int] = {}
    for i, r in enumerate(roots):
        sizes[int(r)] = sizes.get(int(r), 0) + 1
        firsts.setdefault(int(r), i)
    ordered = sorted(sizes, key=lambda r: (-sizes[r], firsts[r]))
    relabel = {r: k for k, r in enumerate(ordered)}
    labels = np.array([relabel[int(r)] for r in roots], dtype=np.int64)
    return PointCloud(cloud.points, labels)
