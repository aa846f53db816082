"""Dataset persistence: manifest plus one record file per (object, pose, condition).

Record format (format_version 1), one JSON document per file:

    {
      "format_version": 1,
      "category": "cabinet",
      "split": "train" | "test",
      "object_seed": int,        # generator seed of the object
      "pose_index": int,
      "condition": "clean" | "noisy",
      "object": {...},           # full object spec, see object_to_json
      "pose": {"<part_id>": float, ...},
      "n_points": int,
      "points_b64": "...",       # little-endian float32, xyz interleaved
      "labels_b64": "...",       # little-endian uint16, one per point
      "graph_edges": [[u, v], ...],        # candidate graph, canonical u < v
      "graph_repair_flags": [bool, ...]
    }

All JSON is emitted with sorted keys and compact separators, so identical
inputs produce byte-identical files.
"""

from __future__ import annotations

import base64
import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import graphbuild, synthgen
from .core import (
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
)
from .errors import ConfigError, DataError, VersionError

FORMAT_VERSION = 1
CONDITIONS = ("clean", "noisy")


@dataclass(frozen=True)
class DatasetManifest:
    """Build plan for one dataset; object seed ranges are disjoint by split:
    train uses seeds [0, train_objects), test uses [train_objects,
    train_objects + test_objects)."""

    category: str
    seed: int
    train_objects: int
    test_objects: int
    out_dir: str
    poses_per_object: int = 18
    scan: synthgen.ScanConfig = field(default_factory=synthgen.ScanConfig)
    clearance: float = 0.0
    tau_rel: float = graphbuild.DEFAULT_TAU_REL

    def __post_init__(self):
        if self.category not in synthgen.CATEGORIES:
            raise ConfigError(f"unknown category {self.category!r}")
        if self.train_objects < 0 or self.test_objects < 0:
            raise ConfigError("object counts must be non-negative")
        if self.poses_per_object < 1:
            raise ConfigError("poses_per_object must be >= 1")

    def object_seeds(self, split: str) -> list[int]:
        if split == "train":
            return list(range(self.train_objects))
        if split == "test":
            return list(range(self.train_objects, self.train_objects + self.test_objects))
        raise ConfigError(f"unknown split {split!r}")


@dataclass(frozen=True, eq=False)
class Record:
    category: str
    split: str
    object_seed: int
    pose_index: int
    condition: str
    obj: GroundTruthObject
    pose: JointPose
    cloud: PointCloud
    graph_edges: tuple[tuple[int, int], ...]
    graph_repair_flags: tuple[bool, ...]

    def part_graph(self) -> graphbuild.PartGraph:
        nodes = graphbuild.part_nodes(self.cloud)
        return graphbuild.PartGraph(nodes, self.graph_edges, self.graph_repair_flags)


# ---------------------------------------------------------------------------
# JSON codecs


def _joint_to_json(j: Joint) -> dict:
    return {
        "kind": j.kind,
        "axis": [float(x) for x in j.axis],
        "origin": [float(x) for x in j.origin],
        "limits": [j.limits[0], j.limits[1]],
    }


def _joint_from_json(d: dict) -> Joint:
    return Joint(d["kind"], axis=d["axis"], origin=d["origin"], limits=tuple(d["limits"]))


def object_to_json(obj: GroundTruthObject) -> dict:
    parts = []
    for p in obj.parts:
        if isinstance(p.shape, Box):
            shape = {
                "kind": "box",
                "center": [float(x) for x in p.shape.center],
                "size": [float(x) for x in p.shape.size],
            }
        else:
            shape = {
                "kind": "cylinder",
                "center": [float(x) for x in p.shape.center],
                "radius": p.shape.radius,
                "height": p.shape.height,
            }
        parts.append({"part_id": p.part_id, "shape": shape})
    tree = {
        "root": obj.tree.root,
        "nodes": [{"part_id": n.part_id, "motion": int(n.motion)} for n in obj.tree.nodes],
        "edges": [
            {"parent": e.parent, "child": e.child, "joint": _joint_to_json(e.joint)}
            for e in obj.tree.edges
        ],
    }
    return {"category": obj.category, "parts": parts, "tree": tree}


def object_from_json(d: dict) -> GroundTruthObject:
    parts = []
    for p in d["parts"]:
        s = p["shape"]
        if s["kind"] == "box":
            shape: Box | Cylinder = Box(s["center"], s["size"])
        elif s["kind"] == "cylinder":
            shape = Cylinder(s["center"], s["radius"], s["height"])
        else:
            raise DataError(f"unknown shape kind {s['kind']!r}")
        parts.append(Part(p["part_id"], shape))
    t = d["tree"]
    tree = KinematicTree(
        tuple(TreeNode(n["part_id"], MotionType(n["motion"])) for n in t["nodes"]),
        t["root"],
        tuple(TreeEdge(e["parent"], e["child"], _joint_from_json(e["joint"])) for e in t["edges"]),
    )
    return GroundTruthObject(tuple(parts), tree, d["category"])


def encode_points(cloud: PointCloud) -> tuple[str, str]:
    pts = np.ascontiguousarray(cloud.points, dtype="<f4")
    labs = np.ascontiguousarray(cloud.labels, dtype="<u2")
    return (
        base64.b64encode(pts.tobytes()).decode("ascii"),
        base64.b64encode(labs.tobytes()).decode("ascii"),
    )


def decode_points(points_b64: str, labels_b64: str, n: int) -> PointCloud:
    pts = np.frombuffer(base64.b64decode(points_b64), dtype="<f4").reshape(n, 3)
    labs = np.frombuffer(base64.b64decode(labels_b64), dtype="<u2").astype(np.int64)
    return PointCloud(pts.astype(np.float64), labs)


def _dumps(doc: dict) -> str:
    return json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n"


# ---------------------------------------------------------------------------
# building


def record_filename(split: str, category: str, object_seed: int, pose_index: int,
                    condition: str) -> str:
    return f"{split}_{category}_{object_seed:06d}_p{pose_index:03d}_{condition}.json"


def dense_clean_scan(obj, pose, n_points: int, base_seed: int) -> PointCloud:
    """Clean scan, retrying derived seeds until every part is sampled."""
    for attempt in range(64):
        cloud = synthgen.scan_clean(
            obj, pose, n_points, synthgen.derive_seed(base_seed, attempt)
        )
        if cloud.n_parts == obj.n_parts and not cloud.label_violations():
            return cloud
    raise DataError(f"could not sample all {obj.n_parts} parts with {n_points} points")


def build_record(manifest: DatasetManifest, split: str, object_seed: int,
                 pose_index: int, condition: str) -> dict:
    obj = synthgen.generate_object(manifest.category, object_seed, manifest.clearance)
    pose_seed = synthgen.derive_seed(manifest.seed, object_seed, pose_index, 2)
    pose = synthgen.sample_pose(obj, pose_seed)
    if condition == "clean":
        base = synthgen.derive_seed(manifest.seed, object_seed, pose_index, 0)
        cloud = dense_clean_scan(obj, pose, manifest.scan.n_points, base)
    elif condition == "noisy":
        noisy_seed = synthgen.derive_seed(manifest.seed, object_seed, pose_index, 1)
        cloud = synthgen.scan_noisy(obj, pose, manifest.scan, noisy_seed)
    else:
        raise ConfigError(f"unknown condition {condition!r}")
    graph = graphbuild.build_graph(cloud, manifest.tau_rel)
    pts_b64, labs_b64 = encode_points(cloud)
    return {
        "format_version": FORMAT_VERSION,
        "category": manifest.category,
        "split": split,
        "object_seed": object_seed,
        "pose_index": pose_index,
        "condition": condition,
        "object": object_to_json(obj),
        "pose": {str(k): v for k, v in pose.values.items()},
        "n_points": len(cloud),
        "points_b64": pts_b64,
        "labels_b64": labs_b64,
        "graph_edges": [[u, v] for u, v in graph.edges],
        "graph_repair_flags": list(graph.repair_flags),
    }


def build_dataset(manifest: DatasetManifest, conditions=CONDITIONS) -> Path:
    """Write every record plus the manifest; returns the manifest path.

    Deterministic: rebuilding with an identical manifest produces
    byte-identical files.
    """
    out = Path(manifest.out_dir)
    records_dir = out / "records"
    records_dir.mkdir(parents=True, exist_ok=True)
    entries = []
    for split in ("train", "test"):
        for object_seed in manifest.object_seeds(split):
            for pose_index in range(manifest.poses_per_object):
                for condition in conditions:
                    doc = build_record(manifest, split, object_seed, pose_index, condition)
                    name = record_filename(split, manifest.category, object_seed,
                                           pose_index, condition)
                    (records_dir / name).write_text(_dumps(doc), encoding="utf-8")
                    entries.append(
                        {
                            "split": split,
                            "object_seed": object_seed,
                            "pose_index": pose_index,
                            "condition": condition,
                            "path": f"records/{name}",
                        }
                    )
    doc = {
        "format_version": FORMAT_VERSION,
        "category": manifest.category,
        "seed": manifest.seed,
        "train_objects": manifest.train_objects,
        "test_objects": manifest.test_objects,
        "poses_per_object": manifest.poses_per_object,
        "clearance": manifest.clearance,
        "tau_rel": manifest.tau_rel,
        "scan": {
            "n_points": manifest.scan.n_points,
            "viewpoints": manifest.scan.viewpoints,
            "width": manifest.scan.width,
            "height": manifest.scan.height,
            "sigma0": manifest.scan.sigma0,
            "sigma1": manifest.scan.sigma1,
            "p_drop": manifest.scan.p_drop,
            "quantization": manifest.scan.quantization,
        },
        "records": entries,
    }
    path = out / "manifest.json"
    path.write_text(_dumps(doc), encoding="utf-8")
    return path


def manifest_from_json(doc: dict, out_dir: str) -> DatasetManifest:
    if doc.get("format_version") != FORMAT_VERSION:
        raise VersionError(f"unsupported manifest version {doc.get('format_version')}")
    scan = synthgen.ScanConfig(**doc["scan"]) if "scan" in doc else synthgen.ScanConfig()
    return DatasetManifest(
        category=doc["category"],
        seed=doc["seed"],
        train_objects=doc["train_objects"],
        test_objects=doc["test_objects"],
        out_dir=out_dir,
        poses_per_object=doc.get("poses_per_object", 18),
        scan=scan,
        clearance=doc.get("clearance", 0.0),
        tau_rel=doc.get("tau_rel", graphbuild.DEFAULT_TAU_REL),
    )


def load_manifest(path: str | Path) -> tuple[DatasetManifest, list[dict]]:
    path = Path(path)
    doc = json.loads(path.read_text(encoding="utf-8"))
    if doc.get("format_version") != FORMAT_VERSION:
        raise VersionError(f"unsupported manifest version {doc.get('format_version')}")
    manifest = manifest_from_json(doc, str(path.parent))
    return manifest, doc["records"]


def load_record(path: str | Path) -> Record:
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise DataError(f"corrupt record {path}: {e}") from e
    if doc.get("format_version") != FORMAT_VERSION:
        raise VersionError(f"unsupported record version {doc.get('format_version')} in {path}")
    try:
        obj = object_from_json(doc["object"])
        cloud = decode_points(doc["points_b64"], doc["labels_b64"], doc["n_points"])
        pose = JointPose({int(k): v for k, v in doc["pose"].items()})
        return Record(
            category=doc["category"],
            split=doc["split"],
            object_seed=doc["object_seed"],
            pose_index=doc["pose_index"],
            condition=doc["condition"],
            obj=obj,
            pose=pose,
            cloud=cloud,
            graph_edges=tuple((int(u), int(v)) for u, v in doc["graph_edges"]),
            graph_repair_flags=tuple(bool(b) for b in doc["graph_repair_flags"]),
        )
    except (KeyError, ValueError) as e:
        raise DataError(f"corrupt record {path}: {e}") from e


def load_split(manifest_path: str | Path, split: str, condition: str) -> list[Record]:
    manifest, entries = load_manifest(manifest_path)
    base = Path(manifest_path).parent
    out = []
    for i, e in enumerate(entries):
        if e["split"] != split or e["condition"] != condition:
            continue
        try:
            out.append(load_record(base / e["path"]))
        except DataError as err:
            raise DataError(f"record index {i}: {err}") from err
    return out
