"""Graph labeling network: part encoder, multi-scale GNN, prediction heads,
autoencoder pretraining and full training.

Architecture: each part's points are resampled to a fixed count, expressed
in a normalized object frame and encoded by a shared PointNet; the encoding
is concatenated with the part centroid and bbox extents.  Three GraphSAGE
stages run at progressively pooled resolution (learned edge collapses); the
per-stage conv and pool outputs are unpooled back to the original nodes and
concatenated into a multi-scale feature, which feeds small MLP heads for
motion type, root score, edge existence and edge direction.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import neural as nn
from .core import KinematicTree, MotionType, PointCloud
from .errors import ConfigError, EmptyPartError, SchemaError
from .graphbuild import PartGraph

log = logging.getLogger(__name__)

_TAG_INIT = 201
_TAG_RESAMPLE = 202
_TAG_TRAIN = 203
_TAG_PRETRAIN = 204


def _rng(*key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(key))


@dataclass(frozen=True)
class ModelConfig:
    encoder_dims: tuple[int, ...] = (3, 64, 128, 128)
    stage_width: int = 128
    head_hidden: int = 64
    part_samples: int = 256
    loss_weights: tuple[float, float, float, float] = (1.0, 1.0, 1.0, 1.0)
    epochs: int = 30
    lr: float = 1e-3
    batch_size: int = 8
    pretrain_epochs: int = 500
    pretrain_lr: float = 1e-3
    pretrain_momentum: float = 0.9
    decoder_hidden: int = 256
    seed: int = 0
    freeze_encoder: bool = False
    prob_clamp: float = 1e-6

    def __post_init__(self):
        if any(d <= 0 for d in self.encoder_dims) or self.stage_width <= 0:
            raise ConfigError("network widths must be positive")
        if self.part_samples <= 0 or self.batch_size <= 0:
            raise ConfigError("part_samples and batch_size must be positive")
        object.__setattr__(self, "encoder_dims", tuple(int(d) for d in self.encoder_dims))
        object.__setattr__(self, "loss_weights", tuple(float(w) for w in self.loss_weights))

    @property
    def feature_dim(self) -> int:
        return self.encoder_dims[-1] + 6

    @property
    def y_dim(self) -> int:
        return 6 * self.stage_width

    def to_json(self) -> dict:
        return {
            "encoder_dims": list(self.encoder_dims),
            "stage_width": self.stage_width,
            "head_hidden": self.head_hidden,
            "part_samples": self.part_samples,
            "loss_weights": list(self.loss_weights),
            "epochs": self.epochs,
            "lr": self.lr,
            "batch_size": self.batch_size,
            "pretrain_epochs": self.pretrain_epochs,
            "pretrain_lr": self.pretrain_lr,
            "pretrain_momentum": self.pretrain_momentum,
            "decoder_hidden": self.decoder_hidden,
            "seed": self.seed,
            "freeze_encoder": self.freeze_encoder,
            "prob_clamp": self.prob_clamp,
        }

    @staticmethod
    def from_json(doc: dict) -> "ModelConfig":
        known = {f for f in ModelConfig.__dataclass_fields__}
        bad = set(doc) - known
        if bad:
            raise ConfigError(f"unknown model config fields: {sorted(bad)}")
        doc = dict(doc)
        for key in ("encoder_dims", "loss_weights"):
            if key in doc:
                doc[key] = tuple(doc[key])
        return ModelConfig(**doc)


@dataclass(frozen=True, eq=False)
class LabeledGraph:
    """Candidate graph annotated with per-node and per-edge probabilities.

    ``dir_probs[k]`` is P(u -> v) for the canonical edge (u, v), u < v.
    ``tensors`` holds the autodiff handles when produced by predict; treat
    it as opaque.
    """

    base: PartGraph
    motion_probs: np.ndarray
    root_probs: np.ndarray
    exist_probs: np.ndarray
    dir_probs: np.ndarray
    tensors: dict | None = field(default=None, repr=False)

    def __post_init__(self):
        p, e = self.base.n_nodes, len(self.base.edges)
        motion = np.asarray(self.motion_probs, dtype=np.float64)
        root = np.asarray(self.root_probs, dtype=np.float64)
        exist = np.asarray(self.exist_probs, dtype=np.float64)
        direction = np.asarray(self.dir_probs, dtype=np.float64)
        if motion.shape != (p, 4):
            raise SchemaError(f"motion_probs shape {motion.shape}, expected ({p}, 4)")
        if root.shape != (p,) or exist.shape != (e,) or direction.shape != (e,):
            raise SchemaError("probability array shapes do not match the graph")
        for name, arr in (("motion", motion), ("root", root),
                          ("exist", exist), ("dir", direction)):
            if arr.size and (arr.min() < -1e-7 or arr.max() > 1.0 + 1e-7):
                raise SchemaError(f"{name} probabilities outside [0, 1]")
        if p and np.abs(motion.sum(axis=1) - 1.0).max() > 1e-5:
            raise SchemaError("motion distributions must sum to 1")
        object.__setattr__(self, "motion_probs", motion)
        object.__setattr__(self, "root_probs", root)
        object.__setattr__(self, "exist_probs", exist)
        object.__setattr__(self, "dir_probs", direction)


# ---------------------------------------------------------------------------
# parameters


def init_params(config: ModelConfig) -> nn.ParameterSet:
    """All model weights, registration order fixed by construction order."""
    rng = _rng(_TAG_INIT, config.seed)
    ps = nn.ParameterSet()
    nn.init_mlp(ps, "encoder", list(config.encoder_dims), rng)
    sw = config.stage_width
    in_dim = config.feature_dim
    for s in range(3):
        nn.init_sage(ps, f"gnn.s{s}.conv", in_dim if s == 0 else sw, sw, rng)
        nn.init_edge_pool(ps, f"gnn.s{s}.pool", sw, rng)
    y = config.y_dim
    # small final-layer scale keeps untrained heads near-uniform
    nn.init_mlp(ps, "head.motion", [y, config.head_hidden, 4], rng, final_scale=1e-2)
    nn.init_mlp(ps, "head.root", [y, config.head_hidden, 1], rng, final_scale=1e-2)
    nn.init_mlp(ps, "head.exist", [2 * y, config.head_hidden, 1], rng, final_scale=1e-2)
    nn.init_mlp(ps, "head.dir", [2 * y, config.head_hidden, 1], rng, final_scale=1e-2)
    return ps


def init_pretrain_params(config: ModelConfig) -> nn.ParameterSet:
    rng = _rng(_TAG_PRETRAIN, config.seed)
    ps = nn.ParameterSet()
    nn.init_mlp(ps, "encoder", list(config.encoder_dims), rng)
    latent = config.encoder_dims[-1]
    nn.init_mlp(ps, "decoder", [latent, config.decoder_hidden, config.part_samples * 3], rng)
    return ps


def transplant_encoder(params: nn.ParameterSet, encoder: nn.ParameterSet) -> None:
    for name in encoder.names():
        if name.startswith("encoder") and name in params:
            params.overwrite(name, encoder[name].data)


# ---------------------------------------------------------------------------
# part encoding


def resample_indices(count: int, k: int, seed: int) -> np.ndarray:
    """With-replacement indices; depend only on (seed, count, k) so they are
    stable under part relabeling and rigid motion of the object."""
    rng = _rng(_TAG_RESAMPLE, seed, count, k)
    return rng.integers(0, count, size=k)


def part_point_stack(
    graph: PartGraph, cloud: PointCloud, config: ModelConfig, resample_seed: int = 0
) -> tuple[np.ndarray, np.ndarray]:
    """(P, k, 3) resampled normalized part points plus (P, 6) geometry rows.

    The object frame subtracts the cloud bbox center and divides by its
    diagonal; geometry rows are the normalized part centroid and extents.
    """
    lo, hi = cloud.bbox()
    center = (lo + hi) / 2.0
    diag = float(np.linalg.norm(hi - lo))
    if diag <= 0:
        diag = 1.0
    k = config.part_samples
    p = graph.n_nodes
    stack = np.empty((p, k, 3), dtype=np.float32)
    geom = np.empty((p, 6), dtype=np.float32)
    for node in graph.nodes:
        pts = cloud.points[node.point_indices]
        if pts.shape[0] == 0:
            raise EmptyPartError(f"part {node.part_id} has no points")
        idx = resample_indices(pts.shape[0], k, resample_seed)
        stack[node.part_id] = (pts[idx] - center) / diag
        geom[node.part_id, :3] = (node.centroid - center) / diag
        geom[node.part_id, 3:] = (node.aabb_max - node.aabb_min) / diag
    return stack, geom


def encode_stack(stack, geom, params: nn.ParameterSet) -> nn.Tensor:
    enc = nn.pointnet_encode_batch(nn.as_tensor(stack), params, "encoder")
    return nn.concat([enc, nn.as_tensor(geom)], axis=1)


def encode_parts(
    graph: PartGraph, cloud: PointCloud, params: nn.ParameterSet,
    config: ModelConfig | None = None, resample_seed: int = 0
) -> nn.Tensor:
    """Per-part feature rows x (P, encoder_out + 6)."""
    config = config or ModelConfig()
    stack, geom = part_point_stack(graph, cloud, config, resample_seed)
    return encode_stack(stack, geom, params)


# ---------------------------------------------------------------------------
# GNN trunk and heads


def _to_original(h: nn.Tensor, records: list[nn.CollapseRecord]) -> nn.Tensor:
    if not records:
        return h
    comp = records[0]
    for r in records[1:]:
        comp = comp.compose(r)
    return nn.edge_unpool(h, comp)


def gnn_forward(x: nn.Tensor, batch: nn.GraphBatch, params: nn.ParameterSet) -> nn.Tensor:
    """Multi-scale node features y (N, 6 * stage width).

    Stages run at progressively pooled resolution; every stage's conv and
    pool outputs are unpooled back to the original nodes for concatenation.
    """
    outs: list[nn.Tensor] = []
    records: list[nn.CollapseRecord] = []
    feats, b = x, batch
    for s in range(3):
        h = nn.sage_conv(b, feats, params, f"gnn.s{s}.conv")
        outs.append(_to_original(h, records))
        b, feats, rec = nn.edge_pool(b, h, params, f"gnn.s{s}.pool")
        records.append(rec)
        outs.append(_to_original(feats, records))
    return nn.concat(outs, axis=1)


def _head_tensors(y: nn.Tensor, edges: np.ndarray, params: nn.ParameterSet) -> dict:
    p = y.shape[0]
    motion_logits = nn.mlp(params, "head.motion", y, 2)
    motion = nn.softmax(motion_logits, axis=1)
    root_logits = nn.reshape(nn.mlp(params, "head.root", y, 2), (p,))
    root = nn.softmax(root_logits, axis=0)
    if edges.shape[0]:
        # symmetrized existence logit and antisymmetrized direction logit:
        # relabeling nodes then re-canonicalizing an edge leaves existence
        # unchanged and maps the direction probability to 1 - p exactly
        fwd = nn.concat([nn.gather_rows(y, edges[:, 0]), nn.gather_rows(y, edges[:, 1])], axis=1)
        rev = nn.concat([nn.gather_rows(y, edges[:, 1]), nn.gather_rows(y, edges[:, 0])], axis=1)
        e_logit = nn.mul(nn.add(nn.mlp(params, "head.exist", fwd, 2),
                                nn.mlp(params, "head.exist", rev, 2)), 0.5)
        d_logit = nn.mul(nn.sub(nn.mlp(params, "head.dir", fwd, 2),
                                nn.mlp(params, "head.dir", rev, 2)), 0.5)
        exist = nn.reshape(nn.sigmoid(e_logit), (edges.shape[0],))
        direction = nn.reshape(nn.sigmoid(d_logit), (edges.shape[0],))
    else:
        exist = nn.Tensor(np.zeros(0, dtype=y.dtype))
        direction = nn.Tensor(np.zeros(0, dtype=y.dtype))
    return {"motion": motion, "root": root, "exist": exist, "dir": direction}


def forward_graph(graph: PartGraph, x: nn.Tensor, params: nn.ParameterSet) -> dict:
    batch = nn.GraphBatch.single(graph.n_nodes, graph.edge_array())
    y = gnn_forward(x, batch, params)
    return _head_tensors(y, graph.edge_array(), params)


def predict(
    graph: PartGraph, cloud: PointCloud, params: nn.ParameterSet,
    config: ModelConfig | None = None, resample_seed: int = 0
) -> LabeledGraph:
    """Run the full network and package probabilities as a LabeledGraph."""
    config = config or ModelConfig()
    x = encode_parts(graph, cloud, params, config, resample_seed)
    t = forward_graph(graph, x, params)
    return LabeledGraph(
        base=graph,
        motion_probs=t["motion"].data,
        root_probs=t["root"].data,
        exist_probs=t["exist"].data,
        dir_probs=t["dir"].data,
        tensors=t,
    )


# ---------------------------------------------------------------------------
# loss


@dataclass(frozen=True, eq=False)
class GraphTargets:
    """Training targets aligned with one candidate graph."""

    types: np.ndarray  # (P,) MotionType ints
    root: int
    exist: np.ndarray  # (E,) float 0/1
    dir_edge_indices: np.ndarray  # candidate edge rows that are GT edges
    dir_targets: np.ndarray  # 1.0 where GT direction is u -> v (canonical)


def targets_for(graph: PartGraph, tree: KinematicTree) -> GraphTargets:
    p = graph.n_nodes
    types = np.zeros(p, dtype=np.int64)
    for node in tree.nodes:
        types[node.part_id] = int(node.motion)
    gt_edges = {}
    for e in tree.edges:
        u, v = sorted((e.parent, e.child))
        gt_edges[(u, v)] = 1.0 if e.parent == u else 0.0
    exist = np.zeros(len(graph.edges), dtype=np.float32)
    dir_idx, dir_t = [], []
    seen = set()
    for k, (u, v) in enumerate(graph.edges):
        if (u, v) in gt_edges:
            exist[k] = 1.0
            dir_idx.append(k)
            dir_t.append(gt_edges[(u, v)])
            seen.add((u, v))
    missing = set(gt_edges) - seen
    if missing:
        log.warning("GT tree edges missing from candidate graph, skipped: %s",
                    sorted(missing))
    return GraphTargets(
        types=types,
        root=tree.root,
        exist=exist,
        dir_edge_indices=np.array(dir_idx, dtype=np.int64),
        dir_targets=np.array(dir_t, dtype=np.float32),
    )


def _neg_log(p: nn.Tensor, clamp_eps: float) -> nn.Tensor:
    return nn.mul(nn.log(nn.clamp(p, clamp_eps, 1.0 - clamp_eps)), -1.0)


def _bce(p: nn.Tensor, target: np.ndarray, clamp_eps: float) -> nn.Tensor:
    """Mean binary cross entropy on probabilities (clamped before any log)."""
    pc = nn.clamp(p, clamp_eps, 1.0 - clamp_eps)
    t = target.astype(pc.dtype.type)
    pos = nn.mul(nn.log(pc), nn.Tensor(-t))
    neg = nn.mul(nn.log(nn.sub(1.0 + np.zeros(1, dtype=pc.dtype.type)[0], pc)), nn.Tensor(t - 1.0))
    return nn.tmean(nn.add(pos, neg))


def loss_terms(tensors: dict, targets: GraphTargets, config: ModelConfig) -> dict:
    eps = config.prob_clamp
    p = targets.types.shape[0]
    onehot = np.zeros((p, 4), dtype=tensors["motion"].dtype.type)
    onehot[np.arange(p), targets.types] = 1.0
    p_true = nn.tsum(nn.mul(tensors["motion"], nn.Tensor(onehot)), axis=1)
    motion = nn.tmean(_neg_log(p_true, eps))
    root = nn.tmean(_neg_log(nn.gather_rows(tensors["root"], [targets.root]), eps))
    if targets.exist.shape[0]:
        exist = _bce(tensors["exist"], targets.exist, eps)
    else:
        exist = nn.Tensor(np.zeros((), dtype=tensors["motion"].dtype))
    if targets.dir_edge_indices.shape[0]:
        d = nn.gather_rows(tensors["dir"], targets.dir_edge_indices)
        direction = _bce(d, targets.dir_targets, eps)
    else:
        direction = nn.Tensor(np.zeros((), dtype=tensors["motion"].dtype))
    return {"motion": motion, "root": root, "exist": exist, "dir": direction}


def loss(pred: LabeledGraph, tree: KinematicTree,
         config: ModelConfig | None = None) -> nn.Tensor:
    """Weighted sum of motion CE, root CE, existence BCE and direction BCE.

    Differentiable when ``pred`` came from predict (tensors attached);
    otherwise computed on the stored probabilities.
    """
    config = config or ModelConfig()
    t = pred.tensors
    if t is None:
        t = {
            "motion": nn.Tensor(pred.motion_probs.astype(np.float32)),
            "root": nn.Tensor(pred.root_probs.astype(np.float32)),
            "exist": nn.Tensor(pred.exist_probs.astype(np.float32)),
            "dir": nn.Tensor(pred.dir_probs.astype(np.float32)),
        }
    targets = targets_for(pred.base, tree)
    terms = loss_terms(t, targets, config)
    w = config.loss_weights
    total = nn.add(
        nn.add(nn.mul(terms["motion"], w[0]), nn.mul(terms["root"], w[1])),
        nn.add(nn.mul(terms["exist"], w[2]), nn.mul(terms["dir"], w[3])),
    )
    return total


def oracle_labeled_graph(graph: PartGraph, tree: KinematicTree,
                         eps: float = 1e-6) -> LabeledGraph:
    """Probabilities derived from ground truth (near 0/1); oracle baseline."""
    p, e = graph.n_nodes, len(graph.edges)
    motion = np.full((p, 4), eps)
    for node in tree.nodes:
        motion[node.part_id, int(node.motion)] = 1.0 - 3 * eps
    root = np.full(p, eps / max(p - 1, 1) if p > 1 else 1.0)
    if p > 1:
        root[tree.root] = 1.0 - eps
    else:
        root[tree.root] = 1.0
    gt = {}
    for ed in tree.edges:
        u, v = sorted((ed.parent, ed.child))
        gt[(u, v)] = ed.parent == u
    exist = np.full(e, eps)
    direction = np.full(e, 0.5)
    for k, (u, v) in enumerate(graph.edges):
        if (u, v) in gt:
            exist[k] = 1.0 - eps
            direction[k] = 1.0 - eps if gt[(u, v)] else eps
    return LabeledGraph(graph, motion, root, exist, direction)


# ---------------------------------------------------------------------------
# training


@dataclass(eq=False)
class PreparedGraph:
    """Cached per-record arrays so epochs avoid redundant work."""

    stack: np.ndarray
    geom: np.ndarray
    graph: PartGraph
    targets: GraphTargets


def prepare_graph(graph: PartGraph, cloud: PointCloud, tree: KinematicTree,
                  config: ModelConfig, resample_seed: int = 0) -> PreparedGraph:
    stack, geom = part_point_stack(graph, cloud, config, resample_seed)
    return PreparedGraph(stack, geom, graph, targets_for(graph, tree))


def _batched_losses(preps: list[PreparedGraph], params: nn.ParameterSet,
                    config: ModelConfig) -> nn.Tensor:
    """Mean loss over a batch; the encoder runs once over all parts."""
    stacks = np.concatenate([pr.stack for pr in preps], axis=0)
    geoms = np.concatenate([pr.geom for pr in preps], axis=0)
    x_all = encode_stack(stacks, geoms, params)
    total = None
    row = 0
    for pr in preps:
        p = pr.graph.n_nodes
        x = nn.gather_rows(x_all, np.arange(row, row + p))
        row += p
        tensors = forward_graph(pr.graph, x, params)
        terms = loss_terms(tensors, pr.targets, config)
        w = config.loss_weights
        g_loss = nn.add(
            nn.add(nn.mul(terms["motion"], w[0]), nn.mul(terms["root"], w[1])),
            nn.add(nn.mul(terms["exist"], w[2]), nn.mul(terms["dir"], w[3])),
        )
        total = g_loss if total is None else nn.add(total, g_loss)
    return nn.mul(total, 1.0 / len(preps))


def train(
    prepared: list[PreparedGraph],
    config: ModelConfig,
    encoder_params: nn.ParameterSet | None = None,
) -> tuple[nn.ParameterSet, list[dict]]:
    """Train the full model with Adam; returns (params, per-epoch history).

    The encoder is fine-tuned jointly unless config.freeze_encoder is set.
    """
    if not prepared:
        raise ConfigError("empty training set")
    params = init_params(config)
    if encoder_params is not None:
        transplant_encoder(params, encoder_params)
    if config.freeze_encoder:
        params.set_trainable("encoder", False)
    state = nn.AdamState()
    rng = _rng(_TAG_TRAIN, config.seed)
    history: list[dict] = []
    for epoch in range(config.epochs):
        order = rng.permutation(len(prepared))
        losses = []
        for start in range(0, len(order), config.batch_size):
            chunk = [prepared[i] for i in order[start : start + config.batch_size]]
            total = _batched_losses(chunk, params, config)
            nn.backward(total, params)
            nn.adam_step(params, state, config.lr)
            losses.append(total.item())
        history.append({"epoch": epoch, "loss": float(np.mean(losses))})
    return params, history


# ---------------------------------------------------------------------------
# encoder pretraining (autoencoder with Chamfer loss)


def collect_part_sets(preps: list[PreparedGraph], config: ModelConfig,
                      cap: int | None = None) -> np.ndarray:
    """Stack every part's normalized resampled points: (N, k, 3)."""
    stacks = [pr.stack for pr in preps]
    if not stacks:
        raise ConfigError("no parts to pretrain on")
    out = np.concatenate(stacks, axis=0)
    if cap is not None and out.shape[0] > cap:
        keep = _rng(_TAG_PRETRAIN, config.seed, 1).permutation(out.shape[0])[:cap]
        out = out[np.sort(keep)]
    return out


def pretrain_encoder(
    part_sets: np.ndarray, config: ModelConfig, batch_size: int = 32
) -> tuple[nn.ParameterSet, list[dict]]:
    """Train encoder+decoder as an autoencoder with squared Chamfer loss,
    using Nesterov SGD; returns (params containing encoder.*, history)."""
    if part_sets.ndim != 3 or part_sets.shape[0] == 0:
        raise ConfigError("pretraining needs a non-empty (N, k, 3) stack")
    k = part_sets.shape[1]
    if k != config.part_samples:
        raise ConfigError(f"part sets have {k} points, config expects {config.part_samples}")
    params = init_pretrain_params(config)
    state = nn.NesterovState()
    rng = _rng(_TAG_PRETRAIN, config.seed, 2)
    n = part_sets.shape[0]
    history: list[dict] = []
    for epoch in range(config.pretrain_epochs):
        order = rng.permutation(n)
        losses = []
        for start in range(0, n, batch_size):
            idx = order[start : start + batch_size]
            batch = part_sets[idx]
            latent = nn.pointnet_encode_batch(nn.Tensor(batch), params, "encoder")
            flat = nn.mlp(params, "decoder", latent, 2)
            recon = nn.reshape(flat, (idx.size, k, 3))
            total = nn.chamfer_batch(recon, nn.Tensor(batch))
            nn.backward(total, params)
            nn.nesterov_sgd_step(params, state, config.pretrain_lr, config.pretrain_momentum)
            losses.append(total.item())
        history.append({"epoch": epoch, "loss": float(np.mean(losses))})
    return params, history


def reconstruction_loss(part_sets: np.ndarray, params: nn.ParameterSet,
                        batch_size: int = 64) -> float:
    """Mean Chamfer reconstruction loss of the autoencoder over a stack."""
    k = part_sets.shape[1]
    vals = []
    for start in range(0, part_sets.shape[0], batch_size):
        batch = part_sets[start : start + batch_size]
        latent = nn.pointnet_encode_batch(nn.Tensor(batch), params, "encoder")
        recon = nn.reshape(nn.mlp(params, "decoder", latent, 2), (batch.shape[0], k, 3))
        vals.append(nn.chamfer_batch(recon, nn.Tensor(batch)).item() * batch.shape[0])
    return float(np.sum(vals) / part_sets.shape[0])


# ---------------------------------------------------------------------------
# checkpoints


def save_checkpoint(params: nn.ParameterSet, config: ModelConfig,
                    history: list[dict], path: str | Path) -> None:
    path = Path(path)
    nn.save_params(params, path)
    sidecar = {
        "format_version": 1,
        "config": config.to_json(),
        "seed": config.seed,
        "loss_curve": history,
    }
    path.with_suffix(path.suffix + ".json").write_text(
        json.dumps(sidecar, sort_keys=True, separators=(",", ":")) + "\n",
        encoding="utf-8",
    )


def load_checkpoint(path: str | Path) -> tuple[nn.ParameterSet, ModelConfig, dict]:
    path = Path(path)
    params = nn.load_params(path)
    sidecar_path = path.with_suffix(path.suffix + ".json")
    if sidecar_path.exists():
        sidecar = json.loads(sidecar_path.read_text(encoding="utf-8"))
        config = ModelConfig.from_json(sidecar.get("config", {}))
    else:
        sidecar = {}
        config = ModelConfig()
    return params, config, sidecar
