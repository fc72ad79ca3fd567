"""Feedforward networks as explicit layer DAGs.

Node kinds: ``input``, ``dense`` (weights ``W`` of shape (in, out), bias
``b``, activation ``relu|linear|sigmoid|softmax``), ``dropout`` (inverted
scaling, active only in train mode) and ``concat`` (joins its inputs along
the feature axis). Nodes are stored in topological order; node 0 is the
input and the last node is the output head.

Loss pairing: a sigmoid head (one unit) uses binary cross-entropy, a
softmax head categorical cross-entropy, both averaged over the batch.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from ..errors import InvalidCacheError, ShapeError

ACTIVATIONS = ("relu", "linear", "sigmoid", "softmax")
_ids = itertools.count()


@dataclass(frozen=True)
class Node:
    kind: str
    name: str
    inputs: tuple = ()
    dim: int = 0
    activation: str = "linear"
    rate: float = 0.0

    def record(self) -> dict:
        return {"kind": self.kind, "name": self.name, "inputs": list(self.inputs), "dim": self.dim,
                "activation": self.activation, "rate": self.rate}


class NetworkGraph:
    """Validated DAG plus its dense-layer parameters.

    ``version`` increments on every parameter update so stale forward caches
    are detected by :func:`backward`.
    """

    def __init__(self, nodes, params=None):
        self.nodes = list(nodes)
        self._validate()
        self.dense_nodes = [i for i, n in enumerate(self.nodes) if n.kind == "dense"]
        if params is None:
            params = {i: (np.zeros((self.in_dim(i), self.nodes[i].dim)), np.zeros(self.nodes[i].dim))
                      for i in self.dense_nodes}
        self.params = params
        self.uid = next(_ids)
        self.version = 0

    # ---- structure
    def _validate(self):
        nodes = self.nodes
        if not nodes or nodes[0].kind != "input":
            raise ShapeError("node 0 must be the input node")
        if sum(n.kind == "input" for n in nodes) != 1:
            raise ShapeError("exactly one input node is required")
        consumed = set()
        for i, n in enumerate(nodes):
            if any(not 0 <= j < i for j in n.inputs):
                raise ShapeError(f"node {n.name}: inputs must precede it (graph must be acyclic)")
            consumed.update(n.inputs)
            dims = [nodes[j].dim for j in n.inputs]
            if n.kind == "input":
                if n.inputs or n.dim < 1:
                    raise ShapeError("input node takes no inputs and needs dim >= 1")
            elif n.kind == "dense":
                if len(n.inputs) != 1 or n.dim < 1 or n.activation not in ACTIVATIONS:
                    raise ShapeError(f"dense node {n.name} is malformed")
            elif n.kind == "dropout":
                if len(n.inputs) != 1 or dims[0] != n.dim or not 0.0 <= n.rate < 1.0:
                    raise ShapeError(f"dropout node {n.name} is malformed")
            elif n.kind == "concat":
                if len(n.inputs) < 2 or sum(dims) != n.dim:
                    raise ShapeError(f"concat node {n.name}: width {n.dim} != sum of inputs {dims}")
            else:
                raise ShapeError(f"unknown node kind {n.kind!r}")
        dangling = [n.name for i, n in enumerate(nodes[:-1]) if i not in consumed]
        if dangling:
            raise ShapeError(f"nodes without consumers (only one output allowed): {dangling}")
        head = nodes[-1]
        if head.kind == "dense" and head.activation == "sigmoid" and head.dim != 1:
            raise ShapeError("sigmoid head must have a single unit")

    def in_dim(self, i: int) -> int:
        return sum(self.nodes[j].dim for j in self.nodes[i].inputs)

    @property
    def input_dim(self) -> int:
        return self.nodes[0].dim

    @property
    def output_dim(self) -> int:
        return self.nodes[-1].dim

    @property
    def head(self) -> str:
        return self.nodes[-1].activation

    def index(self, name: str) -> int:
        for i, n in enumerate(self.nodes):
            if n.name == name:
                return i
        raise KeyError(name)

    def topology(self) -> list:
        return [n.record() for n in self.nodes]

    @classmethod
    def from_topology(cls, records, params=None) -> "NetworkGraph":
        nodes = [Node(r["kind"], r["name"], tuple(r["inputs"]), int(r["dim"]), r["activation"], float(r["rate"]))
                 for r in records]
        return cls(nodes, params)

    # ---- parameters
    def parameters(self) -> list:
        """Flat list [W, b, W, b, ...] over dense nodes in graph order."""
        return [p for i in self.dense_nodes for p in self.params[i]]

    def set_parameters(self, flat) -> None:
        flat = list(flat)
        if len(flat) != 2 * len(self.dense_nodes):
            raise ShapeError("parameter list length does not match the graph")
        for k, i in enumerate(self.dense_nodes):
            W, b = flat[2 * k], flat[2 * k + 1]
            if W.shape != self.params[i][0].shape or b.shape != self.params[i][1].shape:
                raise ShapeError(f"parameter shape mismatch at node {self.nodes[i].name}")
            self.params[i] = (W, b)
        self.version += 1

    def touch(self) -> None:
        """Mark parameters as modified in place."""
        self.version += 1

    def n_parameters(self) -> int:
        return sum(p.size for p in self.parameters())

    def copy(self) -> "NetworkGraph":
        return NetworkGraph(self.nodes, {i: (W.copy(), b.copy()) for i, (W, b) in self.params.items()})

    def init_weights(self, seed: int) -> "NetworkGraph":
        """Uniform fan-in scaling: W ~ U(-sqrt(6/fan_in), sqrt(6/fan_in)), b = 0."""
        rng = np.random.default_rng(seed)
        for i in self.dense_nodes:
            fan_in = self.in_dim(i)
            limit = np.sqrt(6.0 / fan_in)
            self.params[i] = (rng.uniform(-limit, limit, (fan_in, self.nodes[i].dim)), np.zeros(self.nodes[i].dim))
        self.version += 1
        return self


@dataclass
class Cache:
    net_uid: int
    version: int
    mode: str
    acts: list
    pre: dict
    masks: dict


def _activate(z, kind):
    if kind == "relu":
        return np.maximum(z, 0.0)
    if kind == "sigmoid":
        return np.where(z >= 0, 1.0 / (1.0 + np.exp(-np.abs(z))), np.exp(-np.abs(z)) / (1.0 + np.exp(-np.abs(z))))
    if kind == "softmax":
        e = np.exp(z - z.max(axis=1, keepdims=True))
        return e / e.sum(axis=1, keepdims=True)
    return z


def forward(net: NetworkGraph, x, mode: str = "infer", seed=None):
    """Evaluate the graph on a vector or a batch (rows = samples).

    Returns ``(output, cache)``. In train mode dropout masks are drawn from
    ``seed`` (an int or a Generator); the same seed reproduces the same masks.
    """
    if mode not in ("train", "infer"):
        raise ValueError(f"mode must be 'train' or 'infer', got {mode!r}")
    X = np.asarray(x, dtype=float)
    single = X.ndim == 1
    if single:
        X = X[None, :]
    if X.ndim != 2 or X.shape[1] != net.input_dim:
        raise ShapeError(f"expected input width {net.input_dim}, got shape {np.shape(x)}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    acts, pre, masks = [X], {}, {}
    for i, node in enumerate(net.nodes[1:], start=1):
        if node.kind == "dense":
            W, b = net.params[i]
            z = acts[node.inputs[0]] @ W + b
            pre[i] = z
            acts.append(_activate(z, node.activation))
        elif node.kind == "dropout":
            a = acts[node.inputs[0]]
            if mode == "train" and node.rate > 0.0:
                m = (rng.random(a.shape) >= node.rate) / (1.0 - node.rate)
                masks[i] = m
                acts.append(a * m)
            else:
                acts.append(a)
        else:
            acts.append(np.concatenate([acts[j] for j in node.inputs], axis=1))
    out = acts[-1]
    return (out[0] if single else out), Cache(net.uid, net.version, mode, acts, pre, masks)


def _targets(net: NetworkGraph, target, n: int) -> np.ndarray:
    """Targets as an (n, out_dim) float matrix."""
    t = np.asarray(target)
    if t.ndim == 2 and t.shape == (n, net.output_dim):
        return t.astype(float)
    t = t.reshape(-1)
    if t.shape[0] != n:
        raise ShapeError(f"expected {n} targets, got {t.shape[0]}")
    if net.head == "sigmoid":
        return t.astype(float).reshape(n, 1)
    return np.eye(net.output_dim)[t.astype(int)]


def loss(net: NetworkGraph, cache: Cache, target) -> float:
    z = cache.pre[len(net.nodes) - 1]
    T = _targets(net, target, z.shape[0])
    if net.head == "sigmoid":
        # BCE from logits: softplus(z) - t*z
        return float(np.mean(np.logaddexp(0.0, z) - T * z))
    if net.head == "softmax":
        zmax = z.max(axis=1, keepdims=True)
        lse = zmax[:, 0] + np.log(np.exp(z - zmax).sum(axis=1))
        return float(np.mean(lse - np.sum(T * z, axis=1)))
    raise ValueError(f"no loss defined for a {net.head} head")


def backward(net: NetworkGraph, cache: Cache, target) -> list:
    """Exact gradients of the mean cross-entropy, aligned with ``net.parameters()``."""
    if cache.net_uid != net.uid or cache.version != net.version:
        raise InvalidCacheError("cache was produced by a different network or stale parameters")
    if cache.mode != "train":
        raise InvalidCacheError("backward needs a cache from a train-mode forward pass")
    last = len(net.nodes) - 1
    if net.nodes[last].kind != "dense" or net.head not in ("sigmoid", "softmax"):
        raise ValueError("backward needs a sigmoid or softmax dense head")
    out = cache.acts[last]
    n = out.shape[0]
    T = _targets(net, target, n)
    upstream = {last: None}
    dz_head = (out - T) / n
    grads = {}
    for i in range(last, 0, -1):
        node = net.nodes[i]
        if i not in upstream:
            continue
        g = upstream.pop(i)
        if node.kind == "dense":
            if i == last:
                dz = dz_head
            elif node.activation == "relu":
                dz = g * (cache.pre[i] > 0.0)
            elif node.activation == "linear":
                dz = g
            else:
                raise ValueError(f"hidden activation {node.activation} is not supported in backward")
            W, _ = net.params[i]
            j = node.inputs[0]
            grads[i] = (cache.acts[j].T @ dz, dz.sum(axis=0))
            _accumulate(upstream, j, dz @ W.T)
        elif node.kind == "dropout":
            _accumulate(upstream, node.inputs[0], g * cache.masks[i] if i in cache.masks else g)
        elif node.kind == "concat":
            start = 0
            for j in node.inputs:
                w = net.nodes[j].dim
                _accumulate(upstream, j, g[:, start:start + w])
                start += w
    flat = []
    for i in net.dense_nodes:
        dW, db = grads.get(i, (np.zeros_like(net.params[i][0]), np.zeros_like(net.params[i][1])))
        flat += [dW, db]
    return flat


def _accumulate(upstream, j, g):
    if j == 0:
        return
    upstream[j] = g if upstream.get(j) is None else upstream[j] + g
