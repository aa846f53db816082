"""Evaluation metrics: structure errors, top-down tree F1, segmentation AP,
and report emission (JSON + aligned text table).

Definitions frozen here (domains the source metrics leave open):
- existence error counts candidate-graph edges only;
- direction error counts ground-truth tree edges present in the candidate
  graph;
- root error is per model (0 or 100), averaged across a dataset;
- a predicted node matches top-down iff it is the root (same id and motion)
  or its parent matched, the directed parent edge exists in the reference
  tree and the motion type agrees.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import KinematicTree, PointCloud
from .errors import SchemaError
from .labelnet import LabeledGraph

# Reference metric values reported for the original large-scale evaluation
# corpus (storage furniture category).  Not reproducible in this repo and
# never used as test targets; kept for documentation and report context.
PUBLISHED_REFERENCE = {
    "structure": {
        "storage_clean": {"E_type": 1.16, "E_exist": 1.2, "E_dir": 2.22,
                          "E_root": 0.0, "tree_f1": 99.73},
        "storage_noisy": {"E_type": 0.39, "E_exist": 2.03, "E_dir": 29.04,
                          "E_root": 0.0, "tree_f1": 99.02},
    },
    "segmentation_map": {"storage_clean": 0.922, "storage_noisy": 0.907},
}


@dataclass
class StructureErrorReport:
    """Percentages in [0, 100]; tree_f1 likewise scaled to [0, 100]."""

    E_type: float
    E_exist: float
    E_dir: float
    E_root: float
    tree_f1: float | None = None
    per_object: list[dict] = field(default_factory=list)

    def to_json(self) -> dict:
        doc = {
            "E_type": self.E_type,
            "E_exist": self.E_exist,
            "E_dir": self.E_dir,
            "E_root": self.E_root,
        }
        if self.tree_f1 is not None:
            doc["tree_f1"] = self.tree_f1
        if self.per_object:
            doc["per_object"] = self.per_object
        return doc


def structure_errors(
    pred: LabeledGraph, gt_tree: KinematicTree, gt_root: int | None = None
) -> StructureErrorReport:
    """Per-object structure errors of a labeled graph against ground truth.

    E_type: % of nodes whose argmax motion type disagrees.
    E_exist: % of candidate edges where (p > 0.5) disagrees with membership
    of the undirected edge in the GT tree.
    E_dir: % of GT tree edges (present as candidates) where (p > 0.5)
    disagrees with the true direction.
    E_root: 100 if the selected root differs from the GT root, else 0.
    """
    graph = pred.base
    ids = {n.part_id for n in graph.nodes}
    if ids != set(gt_tree.part_ids):
        raise SchemaError("prediction and ground truth use different part ids")
    p = graph.n_nodes

    gt_type = {n.part_id: int(n.motion) for n in gt_tree.nodes}
    pred_type = np.argmax(pred.motion_probs, axis=1)
    wrong_type = sum(1 for pid in range(p) if pred_type[pid] != gt_type[pid])
    e_type = 100.0 * wrong_type / p

    gt_edges = {}
    for e in gt_tree.edges:
        u, v = sorted((e.parent, e.child))
        gt_edges[(u, v)] = e.parent == u
    n_edges = len(graph.edges)
    wrong_exist = 0
    wrong_dir = 0
    n_dir = 0
    for k, (u, v) in enumerate(graph.edges):
        is_gt = (u, v) in gt_edges
        if (pred.exist_probs[k] > 0.5) != is_gt:
            wrong_exist += 1
        if is_gt:
            n_dir += 1
            if (pred.dir_probs[k] > 0.5) != gt_edges[(u, v)]:
                wrong_dir += 1
    e_exist = 100.0 * wrong_exist / n_edges if n_edges else 0.0
    e_dir = 100.0 * wrong_dir / n_dir if n_dir else 0.0

    if gt_root is None:
        gt_root = gt_tree.root
    sel = int(np.argmax(pred.root_probs))
    e_root = 0.0 if sel == gt_root else 100.0
    return StructureErrorReport(e_type, e_exist, e_dir, e_root)


def _match_topdown(pred: KinematicTree, ref: KinematicTree) -> tuple[int, int]:
    """(matched nodes, matched edges) for pred traversed against ref."""
    ref_type = {n.part_id: n.motion for n in ref.nodes}
    ref_parent = ref.parent_map()
    pred_parent = pred.parent_map()
    matched: dict[int, bool] = {}
    matched_nodes = 0
    matched_edges = 0
    for pid in pred.topological_order():
        motion_ok = pred.motion_of(pid) == ref_type.get(pid)
        if pid == pred.root:
            ok = pid == ref.root and motion_ok
        else:
            parent = pred_parent[pid]
            ok = matched.get(parent, False) and ref_parent.get(pid) == parent and motion_ok
            if ok:
                matched_edges += 1
        matched[pid] = ok
        if ok:
            matched_nodes += 1
    return matched_nodes, matched_edges


def tree_f1(pred: KinematicTree, gt: KinematicTree) -> float:
    """Top-down F1 in [0, 100] between two trees on a shared id space."""
    if set(pred.part_ids) != set(gt.part_ids):
        raise SchemaError("trees use different part id spaces")
    mn_p, me_p = _match_topdown(pred, gt)
    precision = (mn_p + me_p) / (len(pred.nodes) + len(pred.edges))
    mn_r, me_r = _match_topdown(gt, pred)
    recall = (mn_r + me_r) / (len(gt.nodes) + len(gt.edges))
    if precision + recall == 0:
        return 0.0
    return 200.0 * precision * recall / (precision + recall)


# ---------------------------------------------------------------------------
# segmentation AP


def _segments(cloud: PointCloud) -> list[np.ndarray]:
    if cloud.labels is None:
        raise SchemaError("segmentation metrics need labeled clouds")
    return [np.flatnonzero(cloud.labels == k) for k in range(cloud.n_parts)]


def segmentation_map(pred: PointCloud, gt: PointCloud, iou_threshold: float = 0.5) -> float:
    """Average precision of predicted segments for one object.

    Predicted segments rank by size descending (ties by label id); each is
    correct iff its best-IoU ground-truth segment exceeds the threshold and
    is unclaimed.  AP is the area under the precision-recall staircase.
    Averaging across objects yields the dataset mAP.
    """
    if len(pred) != len(gt):
        raise SchemaError("clouds must share the same points")
    pred_segs = _segments(pred)
    gt_segs = _segments(gt)
    order = sorted(range(len(pred_segs)), key=lambda k: (-pred_segs[k].size, k))
    gt_sets = [set(s.tolist()) for s in gt_segs]
    claimed = [False] * len(gt_segs)
    hits: list[bool] = []
    for k in order:
        seg = set(pred_segs[k].tolist())
        best_iou, best_j = 0.0, -1
        for j, g in enumerate(gt_sets):
            inter = len(seg & g)
            if inter == 0:
                continue
            iou = inter / (len(seg) + len(g) - inter)
            if iou > best_iou:
                best_iou, best_j = iou, j
        if best_iou > iou_threshold and best_j >= 0 and not claimed[best_j]:
            claimed[best_j] = True
            hits.append(True)
        else:
            hits.append(False)
    n_gt = len(gt_segs)
    if n_gt == 0:
        return 0.0
    ap = 0.0
    tp = 0
    prev_recall = 0.0
    for i, hit in enumerate(hits):
        if hit:
            tp += 1
            recall = tp / n_gt
            precision = tp / (i + 1)
            ap += (recall - prev_recall) * precision
            prev_recall = recall
    return ap


# ---------------------------------------------------------------------------
# aggregation and reports


def aggregate_reports(rows: list[dict]) -> dict:
    """Mean every numeric column of per-object rows."""
    if not rows:
        return {}
    out = {}
    for key in rows[0]:
        vals = [r[key] for r in rows if isinstance(r.get(key), (int, float))]
        if vals and len(vals) == len(rows):
            out[key] = float(np.mean(vals))
    return out


def format_table(title: str, rows: dict[str, dict]) -> str:
    """Aligned text table: one row per condition, columns per metric."""
    columns: list[str] = []
    for metrics in rows.values():
        for c in metrics:
            if c not in columns:
                columns.append(c)
    name_w = max(len(title), *(len(r) for r in rows)) if rows else len(title)
    col_w = {c: max(len(c), 8) for c in columns}
    header = title.ljust(name_w) + "  " + "  ".join(c.rjust(col_w[c]) for c in columns)
    lines = [header, "-" * len(header)]
    for name, metrics in rows.items():
        cells = []
        for c in columns:
            v = metrics.get(c)
            cells.append(("-" if v is None else f"{v:.2f}").rjust(col_w[c]))
        lines.append(name.ljust(name_w) + "  " + "  ".join(cells))
    return "\n".join(lines) + "\n"
