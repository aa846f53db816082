"""Finite-difference gradient battery shared by the unit and acceptance tests.

Each check builds a small float64 graph, compares analytic gradients against
central differences (h = 1e-4) and returns the worst relative error across
the requested number of randomized trials.
"""

import numpy as np

from conftest import finite_difference_check
from kinetree import neural as nn


def _ps(tensors: dict) -> nn.ParameterSet:
    ps = nn.ParameterSet()
    for name, t in tensors.items():
        ps._tensors[name] = t
        ps._trainable[name] = True
    return ps


def check_mlp(trials: int) -> float:
    worst = 0.0
    for t in range(trials):
        g = np.random.default_rng(1000 + t)
        arrays = {
            "x": g.normal(size=(3, 4)),
            "W0": g.normal(size=(4, 5)) * 0.7,
            "b0": g.normal(size=5) * 0.3,
            "W1": g.normal(size=(5, 2)) * 0.7,
            "b1": g.normal(size=2) * 0.3,
        }

        def build(ts):
            h = nn.relu(nn.add(nn.matmul(ts["x"], ts["W0"]), ts["b0"]))
            out = nn.add(nn.matmul(h, ts["W1"]), ts["b1"])
            return nn.tsum(nn.mul(out, out))

        worst = max(worst, finite_difference_check(build, arrays))
    return worst


def check_pointnet(trials: int) -> float:
    worst = 0.0
    for t in range(trials):
        g = np.random.default_rng(2000 + t)
        arrays = {
            "pts": g.normal(size=(2, 5, 3)),
            "W0": g.normal(size=(3, 4)) * 0.8,
            "b0": g.normal(size=4) * 0.3,
            "W1": g.normal(size=(4, 4)) * 0.8,
            "b1": g.normal(size=4) * 0.3,
            "W2": g.normal(size=(4, 3)) * 0.8,
            "b2": g.normal(size=3) * 0.3,
        }

        def build(ts):
            ps = _ps({f"enc.l{i}.{k}": ts[f"{k}{i}"] for i in range(3) for k in ("W", "b")})
            out = nn.pointnet_encode_batch(ts["pts"], ps, "enc")
            return nn.tsum(nn.mul(out, out))

        worst = max(worst, finite_difference_check(build, arrays))
    return worst


def check_sage(trials: int) -> float:
    worst = 0.0
    batch = nn.GraphBatch.single(4, np.array([[0, 1], [1, 2], [2, 3], [0, 3]]))
    for t in range(trials):
        g = np.random.default_rng(3000 + t)
        arrays = {
            "x": g.normal(size=(4, 3)),
            "Ws": g.normal(size=(3, 4)) * 0.8,
            "Wn": g.normal(size=(3, 4)) * 0.8,
            "b": g.normal(size=4) * 0.3,
        }

        def build(ts):
            ps = _ps({"s.self.W": ts["Ws"], "s.neigh.W": ts["Wn"], "s.b": ts["b"]})
            out = nn.sage_conv(batch, ts["x"], ps, "s")
            return nn.tsum(nn.mul(out, out))

        worst = max(worst, finite_difference_check(build, arrays))
    return worst


def check_edge_pool(trials: int) -> float:
    worst = 0.0
    edges = np.array([[0, 1], [1, 2], [2, 3], [0, 3], [1, 3]])
    batch = nn.GraphBatch.single(4, edges)
    checked = 0
    t = 0
    while checked < trials:
        g = np.random.default_rng(4000 + t)
        t += 1
        arrays = {
            "x": g.normal(size=(4, 3)),
            "w": g.normal(size=(6, 1)) * 0.8,
            "b": g.normal(size=1) * 0.2,
        }
        # skip draws whose gate scores nearly tie: the greedy collapse choice
        # would flip inside the finite-difference step
        hu, hv = arrays["x"][edges[:, 0]], arrays["x"][edges[:, 1]]
        w = arrays["w"]
        scores = 0.5 * (np.concatenate([hu, hv], 1) @ w + np.concatenate([hv, hu], 1) @ w)
        gaps = np.abs(np.diff(np.sort(scores[:, 0])))
        if gaps.size and gaps.min() < 1e-2:
            continue
        checked += 1

        def build(ts):
            ps = _ps({"p.w": ts["w"], "p.b": ts["b"]})
            _, pooled_x, rec = nn.edge_pool(batch, ts["x"], ps, "p")
            out = nn.edge_unpool(pooled_x, rec)
            return nn.tsum(nn.mul(out, out))

        worst = max(worst, finite_difference_check(build, arrays))
    return worst


def check_heads(trials: int) -> float:
    worst = 0.0
    for t in range(trials):
        g = np.random.default_rng(5000 + t)
        arrays = {
            "y": g.normal(size=(3, 5)),
            "W": g.normal(size=(5, 4)) * 0.8,
            "b": g.normal(size=4) * 0.3,
            "w2": g.normal(size=(5, 1)) * 0.8,
        }
        targets = g.integers(0, 4, size=3)
        onehot = np.zeros((3, 4))
        onehot[np.arange(3), targets] = 1.0

        def build(ts):
            logits = nn.add(nn.matmul(ts["y"], ts["W"]), ts["b"])
            probs = nn.softmax(logits, axis=1)
            p_true = nn.tsum(nn.mul(probs, nn.Tensor(onehot)), axis=1)
            ce = nn.tmean(nn.mul(nn.log(nn.clamp(p_true, 1e-6, 1 - 1e-6)), -1.0))
            sig = nn.sigmoid(nn.matmul(ts["y"], ts["w2"]))
            bce = nn.tmean(nn.mul(nn.log(nn.clamp(sig, 1e-6, 1 - 1e-6)), -1.0))
            return nn.add(ce, bce)

        worst = max(worst, finite_difference_check(build, arrays))
    return worst


def check_chamfer(trials: int) -> float:
    worst = 0.0
    for t in range(trials):
        g = np.random.default_rng(6000 + t)
        arrays = {"a": g.normal(size=(5, 3)), "b": g.normal(size=(6, 3))}
        worst = max(worst, finite_difference_check(lambda ts: nn.chamfer(ts["a"], ts["b"]),
                                                   arrays))
    return worst


def check_cross_entropy(trials: int) -> float:
    worst = 0.0
    for t in range(trials):
        g = np.random.default_rng(7000 + t)
        arrays = {"l1": g.normal(size=7), "l2": g.normal(size=(4, 5))}
        t1 = int(g.integers(0, 7))
        t2 = g.integers(0, 5, size=4)

        def build(ts):
            return nn.add(nn.cross_entropy(ts["l1"], t1), nn.cross_entropy(ts["l2"], t2))

        worst = max(worst, finite_difference_check(build, arrays))
    return worst


LAYER_CHECKS = {
    "mlp": check_mlp,
    "pointnet": check_pointnet,
    "graphsage": check_sage,
    "edge_pool_gate": check_edge_pool,
    "heads_softmax_sigmoid": check_heads,
    "chamfer": check_chamfer,
    "cross_entropy": check_cross_entropy,
}
