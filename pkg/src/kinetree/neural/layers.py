"""Network layers: linear/MLP blocks, PointNet encoder, GraphSAGE
convolution and edge-collapse pooling over batched graphs."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import EmptyPartError, SchemaError, ShapeError
from .tensor import (
    ParameterSet,
    Tensor,
    add,
    as_tensor,
    concat,
    gather_rows,
    matmul,
    mul,
    relu,
    reshape,
    scatter_add_rows,
    tanh,
    tmax,
)


@dataclass(frozen=True, eq=False)
class GraphBatch:
    """One or more disjoint graphs sharing a node index space.

    ``edges`` is (E, 2) int64 with canonical u < v per row; ``offsets`` has
    one entry per graph boundary (length G + 1) and every edge must stay
    inside a single graph's node range.
    """

    n_nodes: int
    edges: np.ndarray
    offsets: np.ndarray

    def __post_init__(self):
        edges = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        offsets = np.asarray(self.offsets, dtype=np.int64)
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "offsets", offsets)
        if offsets.ndim != 1 or offsets.size < 2 or offsets[0] != 0 or offsets[-1] != self.n_nodes:
            raise SchemaError(f"bad offsets {offsets} for {self.n_nodes} nodes")
        if np.any(np.diff(offsets) < 0):
            raise SchemaError("offsets must be non-decreasing")
        if edges.size:
            if edges.min() < 0 or edges.max() >= self.n_nodes:
                raise SchemaError("edge endpoint outside node range")
            if np.any(edges[:, 0] >= edges[:, 1]):
                raise SchemaError("edges must be canonical u < v")
            gu = np.searchsorted(offsets, edges[:, 0], side="right")
            gv = np.searchsorted(offsets, edges[:, 1], side="right")
            if np.any(gu != gv):
                raise SchemaError("cross-graph edge found")

    @property
    def n_graphs(self) -> int:
        return self.offsets.size - 1

    @staticmethod
    def single(n_nodes: int, edges) -> "GraphBatch":
        return GraphBatch(n_nodes, np.asarray(edges, dtype=np.int64).reshape(-1, 2),
                          np.array([0, n_nodes]))


# ---------------------------------------------------------------------------
# parameter initialization


def init_linear(params: ParameterSet, name: str, fan_in: int, fan_out: int,
                rng: np.random.Generator, scale: float | None = None) -> None:
    std = scale if scale is not None else np.sqrt(2.0 / fan_in)
    w = rng.normal(0.0, std, size=(fan_in, fan_out)).astype(np.float32)
    params.add(f"{name}.W", w)
    params.add(f"{name}.b", np.zeros(fan_out, dtype=np.float32))


def linear(params: ParameterSet, name: str, x: Tensor) -> Tensor:
    return add(matmul(x, params[f"{name}.W"]), params[f"{name}.b"])


def init_mlp(params: ParameterSet, name: str, dims: list[int],
             rng: np.random.Generator, final_scale: float | None = None) -> None:
    for i in range(len(dims) - 1):
        last = i == len(dims) - 2
        init_linear(params, f"{name}.l{i}", dims[i], dims[i + 1],
                    rng, scale=final_scale if last and final_scale is not None else None)


def mlp(params: ParameterSet, name: str, x: Tensor, n_layers: int,
        final_relu: bool = False) -> Tensor:
    h = x
    for i in range(n_layers):
        h = linear(params, f"{name}.l{i}", h)
        if i < n_layers - 1 or final_relu:
            h = relu(h)
    return h


# ---------------------------------------------------------------------------
# PointNet


def init_pointnet(params: ParameterSet, name: str, dims: tuple[int, ...],
                  rng: np.random.Generator) -> None:
    init_mlp(params, name, list(dims), rng)


def pointnet_encode_batch(points: Tensor | np.ndarray, params: ParameterSet,
                          name: str = "encoder", n_layers: int = 3) -> Tensor:
    """Encode (P, n, d) stacked point sets into (P, F) feature rows.

    Shared per-point MLP with ReLU after every layer, then an elementwise
    max over each set's points.  Permutation-invariant per set.
    """
    points = as_tensor(points)
    if points.data.ndim != 3:
        raise ShapeError(f"expected (P, n, d) points, got {points.shape}")
    p, n, d = points.shape
    if n == 0 or p == 0:
        raise EmptyPartError("pointnet on an empty point set")
    flat = reshape(points, (p * n, d))
    feats = mlp(params, name, flat, n_layers, final_relu=True)
    f = feats.shape[1]
    return tmax(reshape(feats, (p, n, f)), axis=1)


def pointnet_encode(points: Tensor | np.ndarray, params: ParameterSet,
                    name: str = "encoder", n_layers: int = 3) -> Tensor:
    """Encode one (n, d) point set into an F-vector."""
    points = as_tensor(points)
    if points.data.ndim != 2:
        raise ShapeError(f"expected (n, d) points, got {points.shape}")
    n, d = points.shape
    if n == 0:
        raise EmptyPartError("pointnet on an empty point set")
    stacked = pointnet_encode_batch(reshape(points, (1, n, d)), params, name, n_layers)
    return reshape(stacked, (stacked.shape[1],))


# ---------------------------------------------------------------------------
# GraphSAGE convolution (mean aggregator)


def init_sage(params: ParameterSet, name: str, fan_in: int, fan_out: int,
              rng: np.random.Generator) -> None:
    std = np.sqrt(2.0 / fan_in)
    params.add(f"{name}.self.W", rng.normal(0.0, std, (fan_in, fan_out)).astype(np.float32))
    params.add(f"{name}.neigh.W", rng.normal(0.0, std, (fan_in, fan_out)).astype(np.float32))
    params.add(f"{name}.b", np.zeros(fan_out, dtype=np.float32))


def sage_conv(batch: GraphBatch, x: Tensor, params: ParameterSet, name: str) -> Tensor:
    """h'_v = ReLU(W_self h_v + W_neigh mean_{u in N(v)} h_u + b).

    The mean over an empty neighborhood is the zero vector.
    """
    x = as_tensor(x)
    if x.shape[0] != batch.n_nodes:
        raise ShapeError(f"{x.shape[0]} feature rows for {batch.n_nodes} nodes")
    if x.shape[1] != params[f"{name}.self.W"].shape[0]:
        raise ShapeError(
            f"feature dim {x.shape[1]} does not match weights "
            f"{params[f'{name}.self.W'].shape}"
        )
    n = batch.n_nodes
    if batch.edges.size:
        src = np.concatenate([batch.edges[:, 0], batch.edges[:, 1]])
        dst = np.concatenate([batch.edges[:, 1], batch.edges[:, 0]])
        gathered = gather_rows(x, src)
        sums = scatter_add_rows(gathered, dst, n)
        deg = np.bincount(dst, minlength=n).astype(x.dtype.type)
        inv = np.where(deg > 0, 1.0 / np.maximum(deg, 1.0), 0.0).astype(x.dtype.type)
        mean = mul(sums, Tensor(inv[:, None]))
    else:
        mean = Tensor(np.zeros_like(x.data))
    out = add(
        add(matmul(x, params[f"{name}.self.W"]), matmul(mean, params[f"{name}.neigh.W"])),
        params[f"{name}.b"],
    )
    return relu(out)


# ---------------------------------------------------------------------------
# edge-collapse pooling


@dataclass(frozen=True, eq=False)
class CollapseRecord:
    """Total map original node -> pooled node for one pooling step."""

    node_map: np.ndarray
    n_pooled: int

    def compose(self, later: "CollapseRecord") -> "CollapseRecord":
        return CollapseRecord(later.node_map[self.node_map], later.n_pooled)


def init_edge_pool(params: ParameterSet, name: str, feat_dim: int,
                   rng: np.random.Generator) -> None:
    params.add(f"{name}.w", rng.normal(0.0, 0.1, (2 * feat_dim, 1)).astype(np.float32))
    params.add(f"{name}.b", np.zeros(1, dtype=np.float32))


def edge_pool(batch: GraphBatch, x: Tensor, params: ParameterSet, name: str
              ) -> tuple[GraphBatch, Tensor, CollapseRecord]:
    """Greedy learned edge collapse.

    Each edge (u, v) gets a raw score r = (w . [h_u; h_v] + w . [h_v; h_u]) / 2
    + b (symmetrized over endpoint order so node relabeling cannot change
    gates) and a gate s = 1 + tanh(r).  Edges are processed in descending
    gate order (ties by canonical edge order); an edge collapses iff neither
    endpoint is merged yet, and the merged feature is s * (h_u + h_v) / 2 so
    gradients reach the scorer.  Unmerged nodes pass through.  Pooled node
    ids group by graph: merged pairs in processed order first, then
    surviving nodes ascending.  Pooled edges are the quotient edges minus
    self-loops and duplicates.
    """
    x = as_tensor(x)
    if x.shape[0] != batch.n_nodes:
        raise ShapeError(f"{x.shape[0]} feature rows for {batch.n_nodes} nodes")
    n = batch.n_nodes
    e = batch.edges.shape[0]
    if e == 0:
        record = CollapseRecord(np.arange(n, dtype=np.int64), n)
        return batch, x, record

    hu = gather_rows(x, batch.edges[:, 0])
    hv = gather_rows(x, batch.edges[:, 1])
    fwd = matmul(concat([hu, hv], axis=1), params[f"{name}.w"])
    rev = matmul(concat([hv, hu], axis=1), params[f"{name}.w"])
    raw = add(mul(add(fwd, rev), 0.5), params[f"{name}.b"])  # (E, 1)
    gate = add(tanh(raw), 1.0)

    s = gate.data[:, 0]
    order = sorted(range(e), key=lambda i: (-s[i], i))
    merged = np.zeros(n, dtype=bool)
    chosen: list[int] = []  # edge indices that collapse, in processed order
    for i in order:
        u, v = batch.edges[i]
        if not merged[u] and not merged[v]:
            merged[u] = merged[v] = True
            chosen.append(i)

    node_map = np.full(n, -1, dtype=np.int64)
    new_offsets = [0]
    pooled_rows: list[Tensor] = []
    next_id = 0
    for g in range(batch.n_graphs):
        lo, hi = batch.offsets[g], batch.offsets[g + 1]
        eg = [i for i in chosen if lo <= batch.edges[i, 0] < hi]
        if eg:
            us, vs = batch.edges[eg, 0], batch.edges[eg, 1]
            node_map[us] = node_map[vs] = next_id + np.arange(len(eg))
            pair = mul(add(gather_rows(x, us), gather_rows(x, vs)), 0.5)
            pooled_rows.append(mul(pair, gather_rows(gate, eg)))
            next_id += len(eg)
        keep = np.flatnonzero(~merged[lo:hi]) + lo
        if keep.size:
            node_map[keep] = next_id + np.arange(keep.size)
            next_id += keep.size
            pooled_rows.append(gather_rows(x, keep))
        new_offsets.append(next_id)
    pooled_x = concat(pooled_rows, axis=0) if len(pooled_rows) > 1 else pooled_rows[0]

    mapped = node_map[batch.edges]
    lo_e = mapped.min(axis=1)
    hi_e = mapped.max(axis=1)
    keep_mask = lo_e != hi_e
    quotient = np.unique(np.column_stack([lo_e[keep_mask], hi_e[keep_mask]]), axis=0)
    pooled = GraphBatch(next_id, quotient.reshape(-1, 2), np.array(new_offsets))
    return pooled, pooled_x, CollapseRecord(node_map, next_id)


def edge_unpool(pooled_x: Tensor, record: CollapseRecord) -> Tensor:
    """Copy each pooled node's feature back to its original nodes."""
    pooled_x = as_tensor(pooled_x)
    if pooled_x.shape[0] != record.n_pooled:
        raise ShapeError(
            f"pooled features have {pooled_x.shape[0]} rows, record expects {record.n_pooled}"
        )
    return gather_rows(pooled_x, record.node_map)
