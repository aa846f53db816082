"""Minimal reverse-mode autodiff over dense numpy arrays.

Compute is float32 by default; every op inherits the dtype of its inputs,
so tests can run an identical float64 shadow graph for finite-difference
checks.  Graphs are built eagerly: each op returns a Tensor holding its
parents and a closure that accumulates gradients into them.  No implicit
broadcasting beyond what the ops below document.
"""

from __future__ import annotations

import numpy as np

from ..errors import EmptyPartError, SchemaError, ShapeError

DEFAULT_DTYPE = np.float32


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "parents", "backward_fn")

    def __init__(self, data, requires_grad: bool = False, parents=(), backward_fn=None):
        if isinstance(data, Tensor):
            raise ShapeError("cannot nest Tensors")
        arr = np.asarray(data)
        if not np.issubdtype(arr.dtype, np.floating):
            arr = arr.astype(DEFAULT_DTYPE)
        self.data = arr
        self.grad: np.ndarray | None = None
        self.requires_grad = bool(requires_grad)
        self.parents = tuple(parents)
        self.backward_fn = backward_fn

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    def item(self) -> float:
        return float(self.data)

    def accumulate(self, g: np.ndarray) -> None:
        if self.grad is None:
            self.grad = np.array(g, dtype=self.data.dtype)
        else:
            self.grad = self.grad + g

    def __repr__(self):
        return f"Tensor(shape={self.shape}, grad={'yes' if self.grad is not None else 'no'})"

    # operator sugar used throughout the layers
    def __add__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return sub(self, other)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(self, other)

    def __matmul__(self, other):
        return matmul(self, other)

    def __neg__(self):
        return mul(self, -1.0)


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def constant(x, dtype=None) -> Tensor:
    arr = np.asarray(x)
    if dtype is not None:
        arr = arr.astype(dtype)
    return Tensor(arr)


def _result(data, parents, backward_fn) -> Tensor:
    if any(p.requires_grad for p in parents):
        t = Tensor(data, requires_grad=True, parents=parents, backward_fn=backward_fn)
    else:
        t = Tensor(data)
    return t


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum gradient over axes that numpy broadcasting expanded."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for ax, dim in enumerate(shape):
        if dim == 1 and grad.shape[ax] != 1:
            grad = grad.sum(axis=ax, keepdims=True)
    return grad


# ---------------------------------------------------------------------------
# arithmetic


def add(a, b) -> Tensor:
    # python scalars stay weakly typed so they never upcast a float32 graph
    if isinstance(b, (int, float)):
        a = as_tensor(a)
        out = a.data + b

        def backward(g):
            if a.requires_grad:
                a.accumulate(g)

        return _result(out, (a,), backward)
    a, b = as_tensor(a), as_tensor(b)
    out = a.data + b.data

    def backward(g):
        if a.requires_grad:
            a.accumulate(_unbroadcast(g, a.shape))
        if b.requires_grad:
            b.accumulate(_unbroadcast(g, b.shape))

    return _result(out, (a, b), backward)


def sub(a, b) -> Tensor:
    if isinstance(b, (int, float)):
        return add(a, -b)
    a, b = as_tensor(a), as_tensor(b)
    out = a.data - b.data

    def backward(g):
        if a.requires_grad:
            a.accumulate(_unbroadcast(g, a.shape))
        if b.requires_grad:
            b.accumulate(_unbroadcast(-g, b.shape))

    return _result(out, (a, b), backward)


def mul(a, b) -> Tensor:
    if isinstance(b, (int, float)):
        a = as_tensor(a)
        out = a.data * b

        def backward(g):
            if a.requires_grad:
                a.accumulate(g * b)

        return _result(out, (a,), backward)
    a, b = as_tensor(a), as_tensor(b)
    out = a.data * b.data

    def backward(g):
        if a.requires_grad:
            a.accumulate(_unbroadcast(g * b.data, a.shape))
        if b.requires_grad:
            b.accumulate(_unbroadcast(g * a.data, b.shape))

    return _result(out, (a, b), backward)


def matmul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if a.data.ndim != 2 or b.data.ndim != 2:
        raise ShapeError(f"matmul expects 2-D operands, got {a.shape} @ {b.shape}")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul shape mismatch: {a.shape} @ {b.shape}")
    out = a.data @ b.data

    def backward(g):
        if a.requires_grad:
            a.accumulate(g @ b.data.T)
        if b.requires_grad:
            b.accumulate(a.data.T @ g)

    return _result(out, (a, b), backward)


def relu(a) -> Tensor:
    a = as_tensor(a)
    out = np.maximum(a.data, 0)

    def backward(g):
        if a.requires_grad:
            a.accumulate(g * (a.data > 0))

    return _result(out, (a,), backward)


def tanh(a) -> Tensor:
    a = as_tensor(a)
    out = np.tanh(a.data)

    def backward(g):
        if a.requires_grad:
            a.accumulate(g * (1.0 - out * out))

    return _result(out, (a,), backward)


def sigmoid(a) -> Tensor:
    a = as_tensor(a)
    # stable piecewise form
    out = np.where(a.data >= 0, 1.0 / (1.0 + np.exp(-np.abs(a.data))),
                   np.exp(-np.abs(a.data)) / (1.0 + np.exp(-np.abs(a.data))))
    out = out.astype(a.dtype)

    def backward(g):
        if a.requires_grad:
            a.accumulate(g * out * (1.0 - out))

    return _result(out, (a,), backward)


def log(a) -> Tensor:
    a = as_tensor(a)
    out = np.log(a.data)

    def backward(g):
        if a.requires_grad:
            a.accumulate(g / a.data)

    return _result(out, (a,), backward)


def clamp(a, lo: float, hi: float) -> Tensor:
    a = as_tensor(a)
    out = np.clip(a.data, lo, hi)

    def backward(g):
        if a.requires_grad:
            inside = (a.data > lo) & (a.data < hi)
            a.accumulate(g * inside)

    return _result(out, (a,), backward)


# ---------------------------------------------------------------------------
# shape and reduction


def reshape(a, shape) -> Tensor:
    a = as_tensor(a)
    out = a.data.reshape(shape)

    def backward(g):
        if a.requires_grad:
            a.accumulate(g.reshape(a.shape))

    return _result(out, (a,), backward)


def tsum(a, axis: int | None = None) -> Tensor:
    a = as_tensor(a)
    out = a.data.sum(axis=axis)

    def backward(g):
        if not a.requires_grad:
            return
        if axis is None:
            a.accumulate(np.broadcast_to(g, a.shape))
        else:
            a.accumulate(np.broadcast_to(np.expand_dims(g, axis), a.shape))

    return _result(out, (a,), backward)


def tmean(a, axis: int | None = None) -> Tensor:
    a = as_tensor(a)
    n = a.data.size if axis is None else a.shape[axis]
    return mul(tsum(a, axis), 1.0 / n)


def tmax(a, axis: int) -> Tensor:
    """Max over one axis; gradient flows to the first argmax occurrence."""
    a = as_tensor(a)
    out = a.data.max(axis=axis)
    arg = a.data.argmax(axis=axis)

    def backward(g):
        if not a.requires_grad:
            return
        grad = np.zeros_like(a.data)
        idx = list(np.indices(out.shape))
        idx.insert(axis, arg)
        grad[tuple(idx)] = g
        a.accumulate(grad)

    return _result(out, (a,), backward)


def concat(parts, axis: int = 0) -> Tensor:
    parts = [as_tensor(p) for p in parts]
    if not parts:
        raise ShapeError("concat of zero tensors")
    out = np.concatenate([p.data for p in parts], axis=axis)
    sizes = [p.shape[axis] for p in parts]
    offsets = np.cumsum([0] + sizes)

    def backward(g):
        for p, lo, hi in zip(parts, offsets[:-1], offsets[1:]):
            if p.requires_grad:
                sl = [slice(None)] * g.ndim
                sl[axis] = slice(lo, hi)
                p.accumulate(g[tuple(sl)])

    return _result(out, tuple(parts), backward)


def gather_rows(a, idx) -> Tensor:
    a = as_tensor(a)
    idx = np.asarray(idx, dtype=np.int64)
    out = a.data[idx]

    def backward(g):
        if a.requires_grad:
            grad = np.zeros_like(a.data)
            np.add.at(grad, idx, g)
            a.accumulate(grad)

    return _result(out, (a,), backward)


def scatter_add_rows(a, idx, n_rows: int) -> Tensor:
    """out[r] = sum of a[k] over k with idx[k] == r; shape (n_rows, F)."""
    a = as_tensor(a)
    idx = np.asarray(idx, dtype=np.int64)
    if idx.shape[0] != a.shape[0]:
        raise ShapeError("scatter index length must match rows")
    out = np.zeros((n_rows,) + a.shape[1:], dtype=a.dtype)
    np.add.at(out, idx, a.data)

    def backward(g):
        if a.requires_grad:
            a.accumulate(g[idx])

    return _result(out, (a,), backward)


def softmax(a, axis: int = -1) -> Tensor:
    a = as_tensor(a)
    shifted = a.data - a.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    out = e / e.sum(axis=axis, keepdims=True)

    def backward(g):
        if a.requires_grad:
            dot = (g * out).sum(axis=axis, keepdims=True)
            a.accumulate(out * (g - dot))

    return _result(out, (a,), backward)


# ---------------------------------------------------------------------------
# fused losses


def cross_entropy(logits, target) -> Tensor:
    """Negative log softmax at the target index, stabilized by max-subtraction.

    1-D logits take an int target; 2-D (B, k) logits take a length-B index
    vector and return the mean over rows.
    """
    logits = as_tensor(logits)
    if logits.data.ndim == 1:
        t = int(target)
        if not (0 <= t < logits.shape[0]):
            raise IndexError(f"target {t} out of range for {logits.shape[0]} classes")
        m = logits.data.max()
        z = logits.data - m
        lse = np.log(np.exp(z).sum())
        out = lse - z[t]
        soft = np.exp(z - lse)

        def backward(g):
            if logits.requires_grad:
                grad = soft.copy()
                grad[t] -= 1.0
                logits.accumulate(g * grad)

        return _result(np.asarray(out, dtype=logits.dtype), (logits,), backward)

    if logits.data.ndim != 2:
        raise ShapeError(f"cross_entropy expects 1-D or 2-D logits, got {logits.shape}")
    targets = np.asarray(target, dtype=np.int64)
    if targets.shape != (logits.shape[0],):
        raise ShapeError("batched cross_entropy needs one target per row")
    if targets.size and (targets.min() < 0 or targets.max() >= logits.shape[1]):
        raise IndexError("target index out of range")
    m = logits.data.max(axis=1, keepdims=True)
    z = logits.data - m
    lse = np.log(np.exp(z).sum(axis=1, keepdims=True))
    rows = np.arange(logits.shape[0])
    losses = lse[:, 0] - z[rows, targets]
    out = losses.mean()
    soft = np.exp(z - lse)

    def backward(g):
        if logits.requires_grad:
            grad = soft.copy()
            grad[rows, targets] -= 1.0
            logits.accumulate(g * grad / logits.shape[0])

    return _result(np.asarray(out, dtype=logits.dtype), (logits,), backward)


def chamfer(a, b) -> Tensor:
    """Symmetric squared Chamfer distance between two point sets (n,3),(m,3).

    mean_i min_j ||a_i - b_j||^2 + mean_j min_i ||a_i - b_j||^2, with
    distances computed in float64 regardless of input dtype.
    """
    a, b = as_tensor(a), as_tensor(b)
    if a.data.ndim != 2 or b.data.ndim != 2 or a.shape[1] != 3 or b.shape[1] != 3:
        raise ShapeError(f"chamfer expects (n,3),(m,3), got {a.shape},{b.shape}")
    if a.shape[0] == 0 or b.shape[0] == 0:
        raise EmptyPartError("chamfer of an empty point set")
    pa = a.data.astype(np.float64)
    pb = b.data.astype(np.float64)
    diff = pa[:, None, :] - pb[None, :, :]
    sq = diff * diff
    # explicit component sum keeps the arithmetic identical to the loop oracle
    d2 = sq[:, :, 0] + sq[:, :, 1] + sq[:, :, 2]
    jstar = d2.argmin(axis=1)
    istar = d2.argmin(axis=0)
    n, m = a.shape[0], b.shape[0]
    out = d2[np.arange(n), jstar].mean() + d2[istar, np.arange(m)].mean()

    def backward(g):
        ga = np.zeros_like(pa)
        gb = np.zeros_like(pb)
        # term 1: each a_i pairs with b_{jstar[i]}
        d1 = 2.0 * (pa - pb[jstar]) / n
        ga += d1
        np.add.at(gb, jstar, -d1)
        # term 2: each b_j pairs with a_{istar[j]}
        d2g = 2.0 * (pb - pa[istar]) / m
        np.add.at(ga, istar, -d2g)
        gb += d2g
        if a.requires_grad:
            a.accumulate(g * ga.astype(a.dtype))
        if b.requires_grad:
            b.accumulate(g * gb.astype(b.dtype))

    return _result(np.asarray(out, dtype=a.dtype), (a, b), backward)


def chamfer_batch(a, b) -> Tensor:
    """Mean of per-sample symmetric squared Chamfer over a batch.

    a: (B, n, 3), b: (B, m, 3).  Matches the mean of chamfer(a[i], b[i]) to
    float rounding (the pairwise distances come from a GEMM expansion in the
    input dtype rather than explicit differences).
    """
    a, b = as_tensor(a), as_tensor(b)
    if a.data.ndim != 3 or b.data.ndim != 3 or a.shape[0] != b.shape[0]:
        raise ShapeError(f"chamfer_batch expects (B,n,3),(B,m,3), got {a.shape},{b.shape}")
    if a.shape[1] == 0 or b.shape[1] == 0:
        raise EmptyPartError("chamfer of an empty point set")
    pa, pb = a.data, b.data
    # ||a-b||^2 = ||a||^2 + ||b||^2 - 2 a.b via batched GEMM; cheaper than
    # materializing the (B, n, m, 3) difference tensor
    na = (pa * pa).sum(axis=2)
    nb = (pb * pb).sum(axis=2)
    d2 = na[:, :, None] + nb[:, None, :] - 2.0 * (pa @ pb.transpose(0, 2, 1))
    np.maximum(d2, 0.0, out=d2)  # (B, n, m)
    bsz, n, m = d2.shape
    jstar = d2.argmin(axis=2)  # (B, n)
    istar = d2.argmin(axis=1)  # (B, m)
    bi = np.arange(bsz)[:, None]
    term_a = d2[bi, np.arange(n)[None, :], jstar].mean(axis=1)
    term_b = d2[bi, istar, np.arange(m)[None, :]].mean(axis=1)
    out = (term_a + term_b).mean()

    def backward(g):
        scale = g / bsz
        ga = np.zeros_like(pa)
        gb = np.zeros_like(pb)
        d1 = 2.0 * (pa - np.take_along_axis(pb, jstar[:, :, None], axis=1)) / n
        ga += d1
        for k in range(bsz):
            np.add.at(gb[k], jstar[k], -d1[k])
        d2g = 2.0 * (pb - np.take_along_axis(pa, istar[:, :, None], axis=1)) / m
        gb += d2g
        for k in range(bsz):
            np.add.at(ga[k], istar[k], -d2g[k])
        if a.requires_grad:
            a.accumulate(scale * ga.astype(a.dtype))
        if b.requires_grad:
            b.accumulate(scale * gb.astype(b.dtype))

    return _result(np.asarray(out, dtype=a.dtype), (a, b), backward)


def chamfer_reference(a: np.ndarray, b: np.ndarray) -> float:
    """Loop-based O(nm) oracle with the same per-pair arithmetic as chamfer."""
    pa = np.asarray(a, dtype=np.float64)
    pb = np.asarray(b, dtype=np.float64)
    if pa.shape[0] == 0 or pb.shape[0] == 0:
        raise EmptyPartError("chamfer of an empty point set")
    mins_a = np.empty(pa.shape[0])
    for i in range(pa.shape[0]):
        best = np.inf
        for j in range(pb.shape[0]):
            d = pa[i] - pb[j]
            sq = d * d
            v = sq[0] + sq[1] + sq[2]
            if v < best:
                best = v
        mins_a[i] = best
    mins_b = np.empty(pb.shape[0])
    for j in range(pb.shape[0]):
        best = np.inf
        for i in range(pa.shape[0]):
            d = pa[i] - pb[j]
            sq = d * d
            v = sq[0] + sq[1] + sq[2]
            if v < best:
                best = v
        mins_b[j] = best
    return float(mins_a.mean() + mins_b.mean())


# ---------------------------------------------------------------------------
# graph walk


def _topo(root: Tensor) -> list[Tensor]:
    order: list[Tensor] = []
    seen: set[int] = set()
    stack: list[tuple[Tensor, int]] = [(root, 0)]
    while stack:
        node, i = stack.pop()
        if i == 0:
            if id(node) in seen:
                continue
            seen.add(id(node))
        if i < len(node.parents):
            stack.append((node, i + 1))
            p = node.parents[i]
            if id(p) not in seen and p.requires_grad:
                stack.append((p, 0))
        else:
            order.append(node)
    return order


def backward(loss: Tensor, params=None) -> None:
    """Reverse-mode accumulation from a scalar loss.

    When ``params`` (a ParameterSet) is given, every trainable tensor's grad
    is zeroed first, so unreachable parameters end with zero gradients.
    """
    if loss.data.ndim != 0 and loss.data.size != 1:
        raise ShapeError(f"backward requires a scalar loss, got shape {loss.shape}")
    if params is not None:
        for t in params.tensors():
            t.grad = np.zeros_like(t.data)
    if not loss.requires_grad:
        return
    order = _topo(loss)
    loss.grad = np.ones_like(loss.data)
    for node in reversed(order):
        if node.backward_fn is not None and node.grad is not None:
            node.backward_fn(node.grad)


class ParameterSet:
    """Ordered, named map of trainable tensors.

    Registration order is the checkpoint order; names must be unique.
    """

    def __init__(self):
        self._tensors: dict[str, Tensor] = {}
        self._trainable: dict[str, bool] = {}

    def add(self, name: str, value: np.ndarray, trainable: bool = True) -> Tensor:
        if name in self._tensors:
            raise SchemaError(f"duplicate parameter name {name!r}")
        t = Tensor(np.array(value), requires_grad=True)
        self._tensors[name] = t
        self._trainable[name] = trainable
        return t

    def __getitem__(self, name: str) -> Tensor:
        return self._tensors[name]

    def __contains__(self, name: str) -> bool:
        return name in self._tensors

    def names(self) -> list[str]:
        return list(self._tensors)

    def tensors(self) -> list[Tensor]:
        return list(self._tensors.values())

    def is_trainable(self, name: str) -> bool:
        return self._trainable[name]

    def set_trainable(self, prefix: str, trainable: bool) -> None:
        for name in self._tensors:
            if name.startswith(prefix):
                self._trainable[name] = trainable

    def zero_grads(self) -> None:
        for t in self._tensors.values():
            t.grad = np.zeros_like(t.data)

    def overwrite(self, name: str, value: np.ndarray) -> None:
        t = self._tensors[name]
        if t.data.shape != value.shape:
            raise ShapeError(f"shape mismatch for {name}: {t.data.shape} vs {value.shape}")
        t.data = np.array(value, dtype=t.data.dtype)

    def clone_values(self) -> dict[str, np.ndarray]:
        return {k: np.array(t.data) for k, t in self._tensors.items()}
