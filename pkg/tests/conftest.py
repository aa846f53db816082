import numpy as np
import pytest

from kinetree import neural as nn


def rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(seed)


def finite_difference_check(build, arrays: dict, h: float = 1e-4) -> float:
    """Max relative error between analytic and central-difference gradients.

    ``build`` maps {name: Tensor} to a scalar Tensor; arrays must be float64
    so the whole graph runs as a float64 shadow of the production path.
    """
    ts = {k: nn.Tensor(np.array(v, dtype=np.float64), requires_grad=True)
          for k, v in arrays.items()}
    loss = build(ts)
    nn.backward(loss)
    grads = {k: (np.array(t.grad) if t.grad is not None else np.zeros_like(t.data))
             for k, t in ts.items()}

    def value(mod):
        return build({k: nn.Tensor(np.array(v, dtype=np.float64)) for k, v in mod.items()}).item()

    max_rel = 0.0
    for k, base in arrays.items():
        base = np.array(base, dtype=np.float64)
        for idx in np.ndindex(base.shape):
            plus = {k2: np.array(v, dtype=np.float64) for k2, v in arrays.items()}
            plus[k][idx] += h
            minus = {k2: np.array(v, dtype=np.float64) for k2, v in arrays.items()}
            minus[k][idx] -= h
            num = (value(plus) - value(minus)) / (2.0 * h)
            ana = float(grads[k][idx])
            rel = abs(ana - num) / max(abs(ana), abs(num), 1e-6)
            max_rel = max(max_rel, rel)
    return max_rel


@pytest.fixture
def cabinet():
    from kinetree import synthgen

    return synthgen.generate_object("cabinet", 1)
