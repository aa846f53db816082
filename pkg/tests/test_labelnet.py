import math

import numpy as np
import pytest

from kinetree import graphbuild, labelnet, synthgen
from kinetree import neural as nn
from kinetree.core import (
    Joint,
    KinematicTree,
    MotionType,
    PointCloud,
    TreeEdge,
    TreeNode,
)
from kinetree.errors import ConfigError, SchemaError
from kinetree.graphbuild import PartGraph, build_graph, part_nodes


def cabinet_case(seed=1, pose_seed=7, n=1200):
    from kinetree.dataset import dense_clean_scan

    obj = synthgen.generate_object("cabinet", seed)
    pose = synthgen.sample_pose(obj, pose_seed)
    cloud = dense_clean_scan(obj, pose, n, seed)
    graph = build_graph(cloud)
    return obj, cloud, graph


def tiny_config(**kw):
    base = dict(
        encoder_dims=(3, 16, 16, 16),
        stage_width=16,
        head_hidden=8,
        part_samples=32,
        epochs=5,
        batch_size=4,
        pretrain_epochs=3,
    )
    base.update(kw)
    return labelnet.ModelConfig(**base)


class TestEncodeParts:
    def test_feature_dim_134_default(self):
        obj, cloud, graph = cabinet_case()
        cfg = labelnet.ModelConfig()
        params = labelnet.init_params(cfg)
        x = labelnet.encode_parts(graph, cloud, params, cfg)
        assert x.shape == (graph.n_nodes, 134)

    def test_single_point_part_valid(self):
        pts = np.array([[0.0, 0, 0], [1, 0, 0], [1.1, 0, 0], [0.2, 0, 0.4]])
        cloud = PointCloud(pts, np.array([0, 1, 1, 0]))
        graph = PartGraph(part_nodes(cloud), ((0, 1),))
        cfg = tiny_config()
        params = labelnet.init_params(cfg)
        x = labelnet.encode_parts(graph, cloud, params, cfg)
        assert np.all(np.isfinite(x.data))

    def test_translation_invariant(self):
        obj, cloud, graph = cabinet_case()
        cfg = tiny_config()
        params = labelnet.init_params(cfg)
        a = labelnet.encode_parts(graph, cloud, params, cfg)
        shifted = PointCloud(cloud.points + np.array([5.0, -3.0, 2.0]), cloud.labels)
        graph2 = build_graph(shifted)
        b = labelnet.encode_parts(graph2, shifted, params, cfg)
        assert np.abs(a.data - b.data).max() < 1e-5


class TestGnnForward:
    def test_single_node_graph(self):
        cloud = PointCloud(np.random.default_rng(0).normal(size=(30, 3)),
                           np.zeros(30, dtype=np.int64))
        graph = PartGraph(part_nodes(cloud), ())
        cfg = tiny_config()
        params = labelnet.init_params(cfg)
        x = labelnet.encode_parts(graph, cloud, params, cfg)
        batch = nn.GraphBatch.single(1, np.zeros((0, 2)))
        y = labelnet.gnn_forward(x, batch, params)
        assert y.shape == (1, cfg.y_dim)
        assert np.all(np.isfinite(y.data))

    def test_y_width_bookkeeping(self):
        obj, cloud, graph = cabinet_case()
        cfg = labelnet.ModelConfig()
        params = labelnet.init_params(cfg)
        x = labelnet.encode_parts(graph, cloud, params, cfg)
        y = labelnet.gnn_forward(x, nn.GraphBatch.single(graph.n_nodes, graph.edge_array()),
                                 params)
        assert y.shape[1] == 6 * 128 == 768

    def test_permutation_equivariance(self):
        obj, cloud, graph = cabinet_case(seed=2)
        cfg = tiny_config()
        params = labelnet.init_params(cfg)
        p = graph.n_nodes
        rng = np.random.default_rng(0)
        perm = rng.permutation(p)  # perm[old] = new id

        relabeled = PointCloud(cloud.points, perm[cloud.labels])
        graph2 = build_graph(relabeled)

        x1 = labelnet.encode_parts(graph, cloud, params, cfg)
        y1 = labelnet.gnn_forward(
            x1, nn.GraphBatch.single(p, graph.edge_array()), params)
        x2 = labelnet.encode_parts(graph2, relabeled, params, cfg)
        y2 = labelnet.gnn_forward(
            x2, nn.GraphBatch.single(p, graph2.edge_array()), params)
        # row for old id i moved to row perm[i]
        assert np.abs(y2.data[perm] - y1.data).max() < 1e-4


class TestPredict:
    def test_invariants_random_params_100_trials(self):
        obj, cloud, graph = cabinet_case(seed=3)
        for trial in range(100):
            cfg = tiny_config(seed=trial)
            params = labelnet.init_params(cfg)
            pred = labelnet.predict(graph, cloud, params, cfg)
            assert np.abs(pred.motion_probs.sum(axis=1) - 1).max() < 1e-5
            assert pred.root_probs.sum() == pytest.approx(1.0, abs=1e-5)
            assert pred.motion_probs.min() >= 0 and pred.motion_probs.max() <= 1
            assert pred.exist_probs.min() >= 0 and pred.exist_probs.max() <= 1

    def test_untrained_motion_ce_near_ln4(self):
        obj, cloud, graph = cabinet_case(seed=4)
        targets = labelnet.targets_for(graph, obj.tree)
        ces = []
        for trial in range(100):
            cfg = tiny_config(seed=1000 + trial)
            params = labelnet.init_params(cfg)
            pred = labelnet.predict(graph, cloud, params, cfg)
            terms = labelnet.loss_terms(pred.tensors, targets, cfg)
            ces.append(terms["motion"].item())
        assert np.mean(ces) == pytest.approx(math.log(4.0), abs=0.05)

    def test_equivariance_of_predictions(self):
        obj, cloud, graph = cabinet_case(seed=5)
        cfg = tiny_config()
        params = labelnet.init_params(cfg)
        p = graph.n_nodes
        perm = np.random.default_rng(1).permutation(p)
        relabeled = PointCloud(cloud.points, perm[cloud.labels])
        graph2 = build_graph(relabeled)
        a = labelnet.predict(graph, cloud, params, cfg)
        b = labelnet.predict(graph2, relabeled, params, cfg)
        assert np.abs(b.motion_probs[perm] - a.motion_probs).max() < 1e-4
        assert np.abs(b.root_probs[perm] - a.root_probs).max() < 1e-4
        # edge predictions map consistently; direction flips with canonical order
        bmap = {e: k for k, e in enumerate(graph2.edges)}
        for k, (u, v) in enumerate(graph.edges):
            pu, pv = int(perm[u]), int(perm[v])
            flipped = pu > pv
            k2 = bmap[(min(pu, pv), max(pu, pv))]
            assert b.exist_probs[k2] == pytest.approx(a.exist_probs[k], abs=1e-4)
            expected_dir = 1.0 - a.dir_probs[k] if flipped else a.dir_probs[k]
            assert b.dir_probs[k2] == pytest.approx(expected_dir, abs=2e-4)


class TestLoss:
    def test_perfect_predictions_tiny_loss(self):
        obj, cloud, graph = cabinet_case(seed=6)
        pred = labelnet.oracle_labeled_graph(graph, obj.tree)
        val = labelnet.loss(pred, obj.tree).item()
        assert val < 1e-4

    def test_single_part_no_direction_term(self):
        cloud = PointCloud(np.random.default_rng(0).normal(size=(30, 3)),
                           np.zeros(30, dtype=np.int64))
        graph = PartGraph(part_nodes(cloud), ())
        tree = KinematicTree((TreeNode(0, MotionType.STATIC),), 0, ())
        pred = labelnet.oracle_labeled_graph(graph, tree)
        targets = labelnet.targets_for(graph, tree)
        cfg = labelnet.ModelConfig()
        t = {
            "motion": nn.Tensor(pred.motion_probs.astype(np.float32)),
            "root": nn.Tensor(pred.root_probs.astype(np.float32)),
            "exist": nn.Tensor(pred.exist_probs.astype(np.float32)),
            "dir": nn.Tensor(pred.dir_probs.astype(np.float32)),
        }
        terms = labelnet.loss_terms(t, targets, cfg)
        assert terms["dir"].item() == 0.0
        assert terms["exist"].item() == 0.0

    def test_hand_worked_three_node_loss(self):
        # path graph 0-1-2; GT tree 0 -> 1 -> 2, types S, R, T
        pts = np.array([[0, 0, 0], [1.0, 0, 0], [2.0, 0, 0]])
        cloud = PointCloud(pts, np.array([0, 1, 2]))
        graph = PartGraph(part_nodes(cloud), ((0, 1), (1, 2)))
        tree = KinematicTree(
            (TreeNode(0, MotionType.STATIC), TreeNode(1, MotionType.ROTATING),
             TreeNode(2, MotionType.TRANSLATING)),
            0,
            (
                TreeEdge(0, 1, Joint("revolute", axis=[0, 0, 1], limits=(0, 1))),
                TreeEdge(1, 2, Joint("prismatic", axis=[0, 1, 0], limits=(0, 1))),
            ),
        )
        motion = np.array(
            [[0.7, 0.1, 0.1, 0.1], [0.2, 0.5, 0.2, 0.1], [0.25, 0.25, 0.4, 0.1]]
        )
        root = np.array([0.8, 0.15, 0.05])
        exist = np.array([0.9, 0.6])
        direction = np.array([0.85, 0.3])
        pred = labelnet.LabeledGraph(graph, motion, root, exist, direction)
        got = labelnet.loss(pred, tree).item()
        expected = (
            -(math.log(0.7) + math.log(0.5) + math.log(0.4)) / 3.0
            + -math.log(0.8)
            + -(math.log(0.9) + math.log(0.6)) / 2.0
            + -(math.log(0.85) + math.log(0.3)) / 2.0
        )
        assert got == pytest.approx(expected, abs=1e-5)

    def test_gt_edge_missing_from_candidates_is_skipped(self, caplog):
        pts = np.array([[0, 0, 0], [1.0, 0, 0], [2.0, 0, 0]])
        cloud = PointCloud(pts, np.array([0, 1, 2]))
        graph = PartGraph(part_nodes(cloud), ((0, 1), (1, 2)))
        # GT edge 0->2 is not a candidate edge
        tree = KinematicTree(
            (TreeNode(0, MotionType.STATIC), TreeNode(1, MotionType.STATIC),
             TreeNode(2, MotionType.STATIC)),
            0,
            (
                TreeEdge(0, 1, Joint("fixed")),
                TreeEdge(0, 2, Joint("fixed")),
            ),
        )
        with caplog.at_level("WARNING"):
            targets = labelnet.targets_for(graph, tree)
        assert "missing" in caplog.text
        assert targets.dir_edge_indices.tolist() == [0]

    def test_loss_finite_on_extreme_probs(self):
        pts = np.array([[0, 0, 0], [1.0, 0, 0]])
        cloud = PointCloud(pts, np.array([0, 1]))
        graph = PartGraph(part_nodes(cloud), ((0, 1),))
        tree = KinematicTree(
            (TreeNode(0, MotionType.STATIC), TreeNode(1, MotionType.ROTATING)),
            0,
            (TreeEdge(0, 1, Joint("revolute", axis=[0, 0, 1], limits=(0, 1))),),
        )
        motion = np.array([[1.0, 0, 0, 0], [1.0, 0, 0, 0]])  # worst case for node 1
        pred = labelnet.LabeledGraph(graph, motion, np.array([0.0, 1.0]),
                                     np.array([0.0]), np.array([0.0]))
        val = labelnet.loss(pred, tree).item()
        assert np.isfinite(val)


class TestTraining:
    def test_loss_decreases_on_toy_set(self):
        obj, cloud, graph = cabinet_case(seed=8)
        cfg = tiny_config(epochs=40, seed=0)
        from kinetree.dataset import dense_clean_scan

        preps = []
        for i in range(6):
            pose = synthgen.sample_pose(obj, 50 + i)
            c = dense_clean_scan(obj, pose, 600, 60 + i)
            g = build_graph(c)
            preps.append(labelnet.prepare_graph(g, c, obj.tree, cfg))
        params, history = labelnet.train(preps, cfg)
        assert history[-1]["loss"] < history[0]["loss"] * 0.7

    def test_deterministic_checkpoints(self, tmp_path):
        obj, cloud, graph = cabinet_case(seed=9)
        cfg = tiny_config(epochs=2, seed=3)
        preps = [labelnet.prepare_graph(graph, cloud, obj.tree, cfg)]
        out = []
        for run in range(2):
            params, history = labelnet.train(preps, cfg)
            path = tmp_path / f"run{run}.ktnn"
            labelnet.save_checkpoint(params, cfg, history, path)
            out.append(path.read_bytes() + path.with_suffix(".ktnn.json").read_bytes())
        assert out[0] == out[1]

    def test_zero_weight_head_stays_at_init(self):
        obj, cloud, graph = cabinet_case(seed=10)
        cfg = tiny_config(epochs=3, loss_weights=(1.0, 1.0, 1.0, 0.0), seed=1)
        preps = [labelnet.prepare_graph(graph, cloud, obj.tree, cfg)]
        init = labelnet.init_params(cfg).clone_values()
        params, _ = labelnet.train(preps, cfg)
        for name in params.names():
            changed = not np.array_equal(params[name].data, init[name])
            if name.startswith("head.dir"):
                assert not changed, name
            elif name.startswith(("head.motion", "head.root", "head.exist")):
                assert changed, name

    def test_freeze_encoder_flag(self):
        obj, cloud, graph = cabinet_case(seed=11)
        cfg = tiny_config(epochs=2, freeze_encoder=True, seed=2)
        preps = [labelnet.prepare_graph(graph, cloud, obj.tree, cfg)]
        init = labelnet.init_params(cfg).clone_values()
        params, _ = labelnet.train(preps, cfg)
        for name in params.names():
            if name.startswith("encoder"):
                assert np.array_equal(params[name].data, init[name]), name

    def test_empty_training_set_rejected(self):
        with pytest.raises(ConfigError):
            labelnet.train([], tiny_config())


class TestPretrain:
    def _sets(self, cfg, n_objects=4):
        preps = []
        for seed in range(n_objects):
            obj = synthgen.generate_object("cabinet", seed)
            pose = synthgen.rest_pose(obj)
            cloud = synthgen.scan_clean(obj, pose, 800, seed)
            if cloud.label_violations():
                continue
            graph = build_graph(cloud)
            preps.append(labelnet.prepare_graph(graph, cloud, obj.tree, cfg))
        return labelnet.collect_part_sets(preps, cfg)

    def test_loss_decreases(self):
        cfg = tiny_config(pretrain_epochs=10)
        sets = self._sets(cfg)
        params, history = labelnet.pretrain_encoder(sets, cfg)
        # smoothed over epochs: mean of last 3 below mean of first 3
        first = np.mean([h["loss"] for h in history[:3]])
        last = np.mean([h["loss"] for h in history[-3:]])
        assert last < first

    def test_deterministic_bytes(self, tmp_path):
        cfg = tiny_config(pretrain_epochs=2)
        sets = self._sets(cfg, n_objects=2)
        blobs = []
        for run in range(2):
            params, hist = labelnet.pretrain_encoder(sets, cfg)
            path = tmp_path / f"enc{run}.ktnn"
            nn.save_params(params, path)
            blobs.append(path.read_bytes())
        assert blobs[0] == blobs[1]

    def test_default_epochs_500(self):
        assert labelnet.ModelConfig().pretrain_epochs == 500

    def test_empty_rejected(self):
        with pytest.raises(ConfigError):
            labelnet.pretrain_encoder(np.zeros((0, 32, 3), dtype=np.float32),
                                      tiny_config())


class TestConfig:
    def test_roundtrip(self):
        cfg = tiny_config(seed=5)
        assert labelnet.ModelConfig.from_json(cfg.to_json()) == cfg

    def test_unknown_field_rejected(self):
        with pytest.raises(ConfigError):
            labelnet.ModelConfig.from_json({"bogus": 1})

    def test_defaults_match_training_protocol(self):
        cfg = labelnet.ModelConfig()
        assert cfg.epochs == 30
        assert cfg.lr == 1e-3
        assert cfg.pretrain_lr == 1e-3
        assert cfg.part_samples == 256
