"""Kinematic tree extraction from a labeled graph.

Root = argmax root score; tree = Prim's minimum spanning tree over negative
log existence probabilities, grown from the root so edges orient away from
it by construction.  Joint axes/origins are filled by a bounding-box
intersection heuristic.  Every tie-break is deterministic and documented.
"""

from __future__ import annotations

import numpy as np

from .core import (
    FIXED,
    PRISMATIC,
    REVOLUTE,
    Joint,
    KinematicTree,
    MotionType,
    PointCloud,
    TreeEdge,
    TreeNode,
    validate_tree,
)
from .errors import SchemaError, StructuralError
from .graphbuild import PartGraph
from .labelnet import LabeledGraph

PROB_CLAMP = 1e-6
NON_CANDIDATE_COST = np.inf

# placeholder joint kind per predicted motion type; composite motion maps to
# revolute because no composite joint representation exists here
_PLACEHOLDER_KIND = {
    MotionType.STATIC: FIXED,
    MotionType.ROTATING: REVOLUTE,
    MotionType.TRANSLATING: PRISMATIC,
    MotionType.ROTATING_TRANSLATING: REVOLUTE,
}


def pairwise_cost(labeled: LabeledGraph) -> np.ndarray:
    """P x P symmetric matrix of -log clamped existence probabilities.

    Non-candidate pairs (including the diagonal) get an infinite sentinel so
    they are never selected while a finite spanning tree exists.
    """
    p = labeled.base.n_nodes
    cost = np.full((p, p), NON_CANDIDATE_COST)
    for k, (u, v) in enumerate(labeled.base.edges):
        c = -np.log(np.clip(labeled.exist_probs[k], PROB_CLAMP, 1.0 - PROB_CLAMP))
        cost[u, v] = cost[v, u] = c
    return cost


def select_root(labeled: LabeledGraph) -> int:
    """Argmax of root scores; exact ties go to the lowest part id."""
    if labeled.base.n_nodes == 0:
        raise SchemaError("empty graph has no root")
    return int(np.argmax(labeled.root_probs))  # argmax returns first max


def _prim(cost: np.ndarray, root: int) -> list[tuple[int, int]]:
    """Prim's MST from the root; ties resolved by lowest (parent, child)."""
    p = cost.shape[0]
    in_tree = np.zeros(p, dtype=bool)
    in_tree[root] = True
    edges: list[tuple[int, int]] = []
    for _ in range(p - 1):
        best = None
        for u in range(p):
            if not in_tree[u]:
                continue
            for v in range(p):
                if in_tree[v] or not np.isfinite(cost[u, v]):
                    continue
                cand = (cost[u, v], u, v)
                if best is None or cand < best:
                    best = cand
        if best is None:
            raise StructuralError(
                "candidate graph is disconnected; upstream graph construction "
                "guarantees connectivity, so this indicates a pipeline bug"
            )
        _, u, v = best
        in_tree[v] = True
        edges.append((u, v))
    return edges


def extract_tree(labeled: LabeledGraph) -> KinematicTree:
    """Tree via Prim's algorithm; motion types from per-node argmax.

    Joints are kind-only placeholders until estimate_joint_axes runs.
    """
    root = select_root(labeled)
    cost = pairwise_cost(labeled)
    edges = _prim(cost, root)
    nodes = []
    for node in labeled.base.nodes:
        motion = MotionType(int(np.argmax(labeled.motion_probs[node.part_id])))
        nodes.append(TreeNode(node.part_id, motion))
    motion_of = {n.part_id: n.motion for n in nodes}
    tree_edges = tuple(
        TreeEdge(u, v, Joint(_PLACEHOLDER_KIND[motion_of[v]])) for u, v in edges
    )
    return KinematicTree(tuple(nodes), root, tree_edges)


# ---------------------------------------------------------------------------
# bounding-box joint heuristic


def _axis_name(i: int) -> np.ndarray:
    a = np.zeros(3)
    a[i] = 1.0
    return a


def estimate_joint_axes(
    tree: KinematicTree, graph: PartGraph
) -> tuple[KinematicTree, list[tuple[int, int]]]:
    """Fill revolute/prismatic axes and origins from part bounding boxes.

    Revolute: axis along the longest dimension of the (slightly expanded)
    bbox intersection of parent and child, origin at its centroid.
    Prismatic: axis along the child bbox's largest extent, origin at the
    child bbox centroid.  Returns the updated tree plus the list of edges
    that fell back to a vertical axis because the boxes never overlapped.
    """
    boxes = {n.part_id: (n.aabb_min, n.aabb_max) for n in graph.nodes}
    lo = np.min([b[0] for b in boxes.values()], axis=0)
    hi = np.max([b[1] for b in boxes.values()], axis=0)
    expand = 0.01 * float(np.linalg.norm(hi - lo))
    low_confidence: list[tuple[int, int]] = []
    new_edges = []
    for e in tree.edges:
        joint = e.joint
        if joint.kind == REVOLUTE:
            alo = boxes[e.parent][0] - expand
            ahi = boxes[e.parent][1] + expand
            blo = boxes[e.child][0] - expand
            bhi = boxes[e.child][1] + expand
            olo = np.maximum(alo, blo)
            ohi = np.minimum(ahi, bhi)
            if np.any(ohi <= olo):
                clo, chi = boxes[e.child]
                joint = Joint(REVOLUTE, axis=[0.0, 0.0, 1.0],
                              origin=(clo + chi) / 2.0, limits=joint.limits)
                low_confidence.append((e.parent, e.child))
            else:
                ext = ohi - olo
                joint = Joint(REVOLUTE, axis=_axis_name(int(np.argmax(ext))),
                              origin=(olo + ohi) / 2.0, limits=joint.limits)
        elif joint.kind == PRISMATIC:
            clo, chi = boxes[e.child]
            ext = chi - clo
            joint = Joint(PRISMATIC, axis=_axis_name(int(np.argmax(ext))),
                          origin=(clo + chi) / 2.0, limits=joint.limits)
        new_edges.append(TreeEdge(e.parent, e.child, joint))
    out = KinematicTree(tree.nodes, tree.root, tuple(new_edges))
    return out, low_confidence


# ---------------------------------------------------------------------------
# URDF-like XML export


def _fmt(x: float) -> str:
    return f"{x:.9g}"


def _vec(v: np.ndarray) -> str:
    return " ".join(_fmt(float(x)) for x in v)


def tree_to_urdf(tree: KinematicTree, name: str = "kinetree_object") -> str:
    """Deterministic URDF-style XML: one link per part, one joint per edge.

    Links ascend by part id; joints sort by (parent, child); attribute order
    is fixed.  Raises on invalid trees.
    """
    violations = validate_tree(tree)
    if violations:
        raise SchemaError("tree_to_urdf requires a valid tree: " + "; ".join(violations))
    lines = [f'<robot name="{name}">']
    for n in sorted(tree.nodes, key=lambda n: n.part_id):
        lines.append(f'  <link name="part_{n.part_id}"/>')
    for e in sorted(tree.edges, key=lambda e: (e.parent, e.child)):
        j = e.joint
        lines.append(
            f'  <joint name="joint_{e.parent}_{e.child}" type="{j.kind}">'
        )
        lines.append(f'    <parent link="part_{e.parent}"/>')
        lines.append(f'    <child link="part_{e.child}"/>')
        if j.kind != FIXED:
            lines.append(f'    <origin xyz="{_vec(j.origin)}"/>')
            lines.append(f'    <axis xyz="{_vec(j.axis)}"/>')
            lines.append(
                f'    <limit lower="{_fmt(j.limits[0])}" upper="{_fmt(j.limits[1])}"/>'
            )
        lines.append("  </joint>")
    lines.append("</robot>")
    return "\n".join(lines) + "\n"


def tree_from_json(doc: dict) -> KinematicTree:
    nodes = tuple(
        TreeNode(n["part_id"], MotionType[n["motion"]]) for n in doc["nodes"]
    )
    edges = tuple(
        TreeEdge(
            e["parent"],
            e["child"],
            Joint(
                e["joint"]["kind"],
                axis=e["joint"]["axis"],
                origin=e["joint"]["origin"],
                limits=tuple(e["joint"]["limits"]),
            ),
        )
        for e in doc["edges"]
    )
    return KinematicTree(nodes, doc["root"], edges)


def tree_to_json(tree: KinematicTree) -> dict:
    return {
        "root": tree.root,
        "nodes": [
            {"part_id": n.part_id, "motion": n.motion.name} for n in
            sorted(tree.nodes, key=lambda n: n.part_id)
        ],
        "edges": [
            {
                "parent": e.parent,
                "child": e.child,
                "joint": {
                    "kind": e.joint.kind,
                    "axis": [float(x) for x in e.joint.axis],
                    "origin": [float(x) for x in e.joint.origin],
                    "limits": [e.joint.limits[0], e.joint.limits[1]],
                },
            }
            for e in sorted(tree.edges, key=lambda e: (e.parent, e.child))
        ],
    }
