"""Dense-tensor reverse-mode autodiff with the layers, losses and
optimizers the graph labeling network needs."""

from .checkpoint import load_params, save_params
from .layers import (
    CollapseRecord,
    GraphBatch,
    edge_pool,
    edge_unpool,
    init_edge_pool,
    init_linear,
    init_mlp,
    init_pointnet,
    init_sage,
    linear,
    mlp,
    pointnet_encode,
    pointnet_encode_batch,
    sage_conv,
)
from .optim import AdamState, NesterovState, adam_step, nesterov_sgd_step
from .tensor import (
    ParameterSet,
    Tensor,
    add,
    as_tensor,
    backward,
    chamfer,
    chamfer_batch,
    chamfer_reference,
    clamp,
    concat,
    constant,
    cross_entropy,
    gather_rows,
    log,
    matmul,
    mul,
    relu,
    reshape,
    scatter_add_rows,
    sigmoid,
    softmax,
    sub,
    tanh,
    tmax,
    tmean,
    tsum,
)

__all__ = [
    "AdamState",
    "CollapseRecord",
    "GraphBatch",
    "NesterovState",
    "ParameterSet",
    "Tensor",
    "adam_step",
    "add",
    "as_tensor",
    "backward",
    "chamfer",
    "chamfer_batch",
    "chamfer_reference",
    "clamp",
    "concat",
    "constant",
    "cross_entropy",
    "edge_pool",
    "edge_unpool",
    "gather_rows",
    "init_edge_pool",
    "init_linear",
    "init_mlp",
    "init_pointnet",
    "init_sage",
    "linear",
    "load_params",
    "log",
    "matmul",
    "mlp",
    "mul",
    "nesterov_sgd_step",
    "pointnet_encode",
    "pointnet_encode_batch",
    "relu",
    "reshape",
    "sage_conv",
    "save_params",
    "scatter_add_rows",
    "sigmoid",
    "softmax",
    "sub",
    "tanh",
    "tmax",
    "tmean",
    "tsum",
]
