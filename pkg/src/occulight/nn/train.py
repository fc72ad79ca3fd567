from __future__ import annotations

import numpy as np

from ..dataset import Dataset
from ..errors import ShapeError
from .graph import backward, forward, loss
from .optim import OptimizerState, make_optimizer


def dataset_loss(net, X, y) -> float:
    """Mean loss over (X, y) in inference mode."""
    _, cache = forward(net, X, "infer")
    return loss(net, cache, y)


def fit(net, data, optimizer="adadelta", epochs: int = 100, batch_size: int = 32, seed: int = 0,
        optimizer_params: dict | None = None):
    """Mini-batch training in place on a Dataset or an ``(X, y)`` pair.

    Returns ``(net, history)`` where ``history[e]`` is the sample-weighted
    mean training loss of epoch ``e`` (dropout active). Shuffling and
    dropout masks both come from ``seed``.
    """
    X, y = (data.X, data.y) if isinstance(data, Dataset) else data
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    if X.ndim != 2 or X.shape[1] != net.input_dim:
        raise ShapeError(f"network expects {net.input_dim} inputs, data has shape {X.shape}")
    if y.shape[0] != X.shape[0]:
        raise ShapeError("X and y lengths differ")
    opt = optimizer if isinstance(optimizer, OptimizerState) else make_optimizer(optimizer, **(optimizer_params or {}))
    rng = np.random.default_rng(seed)
    n = X.shape[0]
    history = []
    for _ in range(epochs):
        order = rng.permutation(n)
        total = 0.0
        for start in range(0, n, batch_size):
            rows = order[start:start + batch_size]
            _, cache = forward(net, X[rows], "train", rng)
            total += loss(net, cache, y[rows]) * len(rows)
            grads = backward(net, cache, y[rows])
            opt.step(net.parameters(), grads)
            net.touch()
        history.append(total / n)
    return net, history
