"""Command-line interface.

Verbs: gen, pretrain, train, infer, eval, export.  Exit codes are a stable
contract: 0 success, 2 configuration error, 3 I/O error, 4 corrupt data,
5 version mismatch.
"""

from __future__ import annotations

import argparse
import base64
import json
import sys
from pathlib import Path

import numpy as np

from . import dataset as ds
from . import graphbuild, labelnet, metrics, synthgen, treeextract, viz
from .core import PointCloud, tree_to_dot
from .errors import ConfigError, DataError, KinetreeError, VersionError

EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_DATA = 4
EXIT_VERSION = 5


def _read_json_config(path: str) -> dict:
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        return json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ConfigError(f"invalid JSON in {path}: {e}") from e


def _dataset_manifest(doc: dict, out_dir: str) -> ds.DatasetManifest:
    scan = synthgen.ScanConfig(**doc.get("scan", {}))
    try:
        return ds.DatasetManifest(
            category=doc["category"],
            seed=doc.get("seed", 0),
            train_objects=doc["train_objects"],
            test_objects=doc.get("test_objects", 0),
            out_dir=out_dir,
            poses_per_object=doc.get("poses_per_object", 18),
            scan=scan,
            clearance=doc.get("clearance", 0.0),
            tau_rel=doc.get("tau_rel", graphbuild.DEFAULT_TAU_REL),
        )
    except KeyError as e:
        raise ConfigError(f"dataset config missing field {e}") from e
    except TypeError as e:
        raise ConfigError(f"bad dataset config: {e}") from e


def _model_config(doc: dict) -> tuple[labelnet.ModelConfig, str]:
    doc = dict(doc)
    doc.pop("format_version", None)
    condition = doc.pop("condition", "clean")
    if condition not in ds.CONDITIONS:
        raise ConfigError(f"unknown condition {condition!r}")
    try:
        return labelnet.ModelConfig.from_json(doc), condition
    except TypeError as e:
        raise ConfigError(f"bad model config: {e}") from e


def load_cloud_file(path: str | Path) -> PointCloud:
    """Standalone cloud file: JSON with the record blob encoding."""
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if doc.get("format_version") != ds.FORMAT_VERSION:
        raise VersionError(f"unsupported cloud file version {doc.get('format_version')}")
    n = doc["n_points"]
    pts = np.frombuffer(base64.b64decode(doc["points_b64"]), dtype="<f4").reshape(n, 3)
    labels = None
    if doc.get("labels_b64"):
        labels = np.frombuffer(base64.b64decode(doc["labels_b64"]), dtype="<u2").astype(np.int64)
    return PointCloud(pts.astype(np.float64), labels)


def save_cloud_file(cloud: PointCloud, path: str | Path) -> None:
    doc: dict = {"format_version": ds.FORMAT_VERSION, "n_points": len(cloud)}
    pts = np.ascontiguousarray(cloud.points, dtype="<f4")
    doc["points_b64"] = base64.b64encode(pts.tobytes()).decode("ascii")
    if cloud.labels is not None:
        labs = np.ascontiguousarray(cloud.labels, dtype="<u2")
        doc["labels_b64"] = base64.b64encode(labs.tobytes()).decode("ascii")
    Path(path).write_text(
        json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n", encoding="utf-8"
    )


# ---------------------------------------------------------------------------
# commands


def cmd_gen(args) -> int:
    doc = _read_json_config(args.config)
    out_dir = args.out or doc.get("out_dir")
    if not out_dir:
        raise ConfigError("no output directory: set out_dir in config or pass --out")
    manifest = _dataset_manifest(doc, out_dir)
    path = ds.build_dataset(manifest)
    n = manifest.poses_per_object * (manifest.train_objects + manifest.test_objects)
    print(f"dataset written to {path}")
    print(
        f"category={manifest.category} seed={manifest.seed} "
        f"train_objects={manifest.train_objects} test_objects={manifest.test_objects} "
        f"poses={manifest.poses_per_object} records_per_condition={n}"
    )
    return 0


def _load_training_records(dataset_path: str, condition: str) -> list[ds.Record]:
    records = ds.load_split(dataset_path, "train", condition)
    if not records:
        raise ConfigError(f"dataset has no train records for condition {condition!r}")
    return records


def _prepare(records: list[ds.Record], config: labelnet.ModelConfig):
    return [
        labelnet.prepare_graph(r.part_graph(), r.cloud, r.obj.tree, config)
        for r in records
    ]


def cmd_pretrain(args) -> int:
    config, condition = _model_config(_read_json_config(args.config))
    records = _load_training_records(args.dataset, condition)
    preps = _prepare(records, config)
    sets = labelnet.collect_part_sets(preps, config, cap=args.max_parts)
    params, history = labelnet.pretrain_encoder(sets, config)
    labelnet.save_checkpoint(params, config, history, args.out)
    print(f"pretrained encoder on {sets.shape[0]} part sets "
          f"for {config.pretrain_epochs} epochs -> {args.out}")
    print(f"final reconstruction loss {history[-1]['loss']:.6f}")
    return 0


def cmd_train(args) -> int:
    config, condition = _model_config(_read_json_config(args.config))
    if args.freeze_encoder:
        config = labelnet.ModelConfig.from_json(
            {**config.to_json(), "freeze_encoder": True}
        )
    records = _load_training_records(args.dataset, condition)
    preps = _prepare(records, config)
    if args.encoder:
        encoder_params, _, _ = labelnet.load_checkpoint(args.encoder)
    else:
        sets = labelnet.collect_part_sets(preps, config, cap=args.max_parts)
        encoder_params, pre_hist = labelnet.pretrain_encoder(sets, config)
        print(f"pretraining done: final loss {pre_hist[-1]['loss']:.6f}")
    params, history = labelnet.train(preps, config, encoder_params)
    labelnet.save_checkpoint(params, config, history, args.out)
    print(f"trained {config.epochs} epochs on {len(preps)} records -> {args.out}")
    print(f"final training loss {history[-1]['loss']:.6f}")
    return 0


def _infer_cloud(args) -> tuple[PointCloud, ds.Record | None]:
    path = Path(args.input)
    if not path.exists():
        raise OSError(f"input not found: {path}")
    doc = json.loads(path.read_text(encoding="utf-8"))
    if "object" in doc:
        record = ds.load_record(path)
        return record.cloud, record
    return load_cloud_file(path), None


def cmd_infer(args) -> int:
    params, config, _ = labelnet.load_checkpoint(args.checkpoint)
    cloud, record = _infer_cloud(args)
    if args.unlabeled or cloud.labels is None:
        cloud = graphbuild.segment_clustering(cloud, args.cluster_radius)
    graph = graphbuild.build_graph(cloud, args.tau_rel)
    labeled = labelnet.predict(graph, cloud, params, config)
    tree = treeextract.extract_tree(labeled)
    tree, low_conf = treeextract.estimate_joint_axes(tree, graph)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "tree.json").write_text(
        json.dumps(treeextract.tree_to_json(tree), sort_keys=True, separators=(",", ":"))
        + "\n",
        encoding="utf-8",
    )
    (out / "tree.dot").write_text(tree_to_dot(tree), encoding="utf-8")
    (out / "tree.urdf").write_text(treeextract.tree_to_urdf(tree), encoding="utf-8")
    (out / "cloud.svg").write_text(viz.cloud_to_svg(cloud), encoding="utf-8")
    print(f"root part: {tree.root}; {len(tree.edges)} edges; exports in {out}")
    if low_conf:
        print(f"low-confidence joints (no bbox overlap): {low_conf}")
    if record is not None and args.compare_gt:
        f1 = metrics.tree_f1(tree, record.obj.tree)
        print(f"tree F1 vs record ground truth: {f1:.2f}")
    return 0


def _eval_condition(records, params, config, oracle: bool,
                    seg_radius: float | None) -> tuple[dict, list[dict]]:
    rows = []
    for r in records:
        graph = r.part_graph()
        if oracle:
            labeled = labelnet.oracle_labeled_graph(graph, r.obj.tree)
        else:
            labeled = labelnet.predict(graph, r.cloud, params, config)
        rep = metrics.structure_errors(labeled, r.obj.tree)
        tree = treeextract.extract_tree(labeled)
        row = {
            "object_seed": r.object_seed,
            "pose_index": r.pose_index,
            "E_type": rep.E_type,
            "E_exist": rep.E_exist,
            "E_dir": rep.E_dir,
            "E_root": rep.E_root,
            "tree_f1": metrics.tree_f1(tree, r.obj.tree),
        }
        if seg_radius is not None:
            unlabeled = PointCloud(r.cloud.points)
            clustered = graphbuild.segment_clustering(unlabeled, seg_radius)
            row["seg_ap"] = metrics.segmentation_map(clustered, r.cloud)
        rows.append(row)
    agg = metrics.aggregate_reports(
        [{k: v for k, v in row.items() if k not in ("object_seed", "pose_index")}
         for row in rows]
    )
    return agg, rows


def cmd_eval(args) -> int:
    params, config = None, None
    if args.oracle:
        config = labelnet.ModelConfig()
    else:
        if not args.checkpoint:
            raise ConfigError("eval needs --checkpoint (or --oracle)")
        params, config, _ = labelnet.load_checkpoint(args.checkpoint)
    conditions = [c.strip() for c in args.conditions.split(",") if c.strip()]
    for c in conditions:
        if c not in ds.CONDITIONS:
            raise ConfigError(f"unknown condition {c!r}")
    table: dict[str, dict] = {}
    report = {"split": args.split, "conditions": {}}
    any_records = False
    for condition in conditions:
        records = ds.load_split(args.dataset, args.split, condition)
        if not records:
            continue
        any_records = True
        agg, rows = _eval_condition(records, params, config, args.oracle,
                                    args.segmentation_radius)
        report["conditions"][condition] = {"aggregate": agg, "per_object": rows}
        table[condition] = agg
    if not any_records:
        raise ConfigError(f"no records found for split {args.split!r}")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(
        json.dumps(report, sort_keys=True, separators=(",", ":")) + "\n",
        encoding="utf-8",
    )
    text = metrics.format_table(f"{args.split}", table)
    (out / "report.txt").write_text(text, encoding="utf-8")
    print(text, end="")
    return 0


def cmd_export(args) -> int:
    doc = json.loads(Path(args.tree).read_text(encoding="utf-8"))
    tree = treeextract.tree_from_json(doc)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "tree.dot").write_text(tree_to_dot(tree), encoding="utf-8")
    (out / "tree.urdf").write_text(treeextract.tree_to_urdf(tree), encoding="utf-8")
    if args.cloud:
        cloud = load_cloud_file(args.cloud)
        (out / "cloud.svg").write_text(viz.cloud_to_svg(cloud), encoding="utf-8")
    print(f"exports written to {out}")
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kinetree",
        description="Kinematic hierarchy inference on part-labeled point clouds",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a synthetic dataset")
    p.add_argument("--config", required=True, help="dataset config JSON")
    p.add_argument("--out", help="output directory (overrides config out_dir)")
    p.set_defaults(fn=cmd_gen)

    p = sub.add_parser("pretrain", help="pretrain the part encoder (autoencoder)")
    p.add_argument("--dataset", required=True, help="manifest.json path")
    p.add_argument("--config", required=True, help="model config JSON")
    p.add_argument("--out", required=True, help="encoder checkpoint path")
    p.add_argument("--max-parts", type=int, default=None,
                   help="cap on pretraining part sets")
    p.set_defaults(fn=cmd_pretrain)

    p = sub.add_parser("train", help="pretrain (unless --encoder) and train the GNN")
    p.add_argument("--dataset", required=True)
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True, help="checkpoint path")
    p.add_argument("--encoder", help="reuse a pretrained encoder checkpoint")
    p.add_argument("--freeze-encoder", action="store_true",
                   help="skip encoder fine-tuning")
    p.add_argument("--max-parts", type=int, default=None)
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("infer", help="infer a kinematic tree for one input")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--input", required=True, help="dataset record or cloud JSON")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--unlabeled", action="store_true",
                   help="ignore labels; segment by radius clustering")
    p.add_argument("--use-gt-segmentation", action="store_true",
                   help="use the record's labels (default when present)")
    p.add_argument("--cluster-radius", type=float, default=0.05)
    p.add_argument("--tau-rel", type=float, default=graphbuild.DEFAULT_TAU_REL)
    p.add_argument("--compare-gt", action="store_true",
                   help="print tree F1 against the record's ground truth")
    p.set_defaults(fn=cmd_infer)

    p = sub.add_parser("eval", help="evaluate a checkpoint over a dataset split")
    p.add_argument("--dataset", required=True)
    p.add_argument("--checkpoint")
    p.add_argument("--out", required=True)
    p.add_argument("--split", default="test", choices=("train", "test"))
    p.add_argument("--conditions", default="clean,noisy")
    p.add_argument("--oracle", action="store_true",
                   help="use GT-derived probabilities instead of a model")
    p.add_argument("--segmentation-radius", type=float, default=None,
                   help="also run the clustering baseline and report AP")
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("export", help="re-export a tree JSON as DOT/URDF/SVG")
    p.add_argument("--tree", required=True, help="tree.json from infer")
    p.add_argument("--out", required=True)
    p.add_argument("--cloud", help="optional cloud JSON for an SVG")
    p.set_defaults(fn=cmd_export)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except VersionError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_VERSION
    except DataError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DATA
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO
    except KinetreeError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
