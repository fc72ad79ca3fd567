"""Frozen network topologies."""
from __future__ import annotations

from .graph import NetworkGraph, Node

# Emotion network: (name, kind, width-or-rate, inputs). Hidden dense layers
# are H1..H14, all ReLU; M1 and M2 concatenate, D1/D2 drop 20% / 30%.
EMOTION_LAYERS = (
    ("H1", "dense", 50, ("x",)),
    ("H2", "dense", 40, ("H1",)),
    ("H3", "dense", 30, ("H2",)),
    ("H4", "dense", 20, ("H3",)),
    ("D1", "dropout", 0.20, ("H4",)),
    ("H5", "dense", 20, ("D1",)),
    ("D2", "dropout", 0.30, ("H5",)),
    ("H6", "dense", 20, ("D2",)),
    ("H7", "dense", 10, ("H6",)),
    ("H8", "dense", 5, ("H7",)),
    ("H9", "dense", 10, ("H8",)),
    ("H10", "dense", 20, ("H9",)),
    ("M1", "concat", None, ("H6", "H10")),
    ("H11", "dense", 20, ("M1",)),
    ("H12", "dense", 25, ("H11",)),
    ("M2", "concat", None, ("H4", "H12")),
    ("H13", "dense", 25, ("M2",)),
    ("H14", "dense", 7, ("H13",)),
)
EMOTION_INPUT_DIM = 46

POSTURE_HIDDEN = (32, 16, 8)
POSTURE_INPUT_DIM = 31


def _head(n_classes: int):
    if n_classes == 2:
        return 1, "sigmoid"
    if n_classes >= 3:
        return n_classes, "softmax"
    raise ValueError("need at least two classes")


def build_from_layers(layers, input_dim: int, n_classes: int) -> NetworkGraph:
    nodes = [Node("input", "x", (), input_dim)]
    index = {"x": 0}
    for name, kind, arg, inputs in layers:
        src = tuple(index[i] for i in inputs)
        if kind == "dense":
            node = Node("dense", name, src, int(arg), "relu")
        elif kind == "dropout":
            node = Node("dropout", name, src, nodes[src[0]].dim, rate=float(arg))
        elif kind == "concat":
            node = Node("concat", name, src, sum(nodes[j].dim for j in src))
        else:
            raise ValueError(f"unknown layer kind {kind!r}")
        index[name] = len(nodes)
        nodes.append(node)
    dim, act = _head(n_classes)
    nodes.append(Node("dense", "out", (len(nodes) - 1,), dim, act))
    return NetworkGraph(nodes)


def build_emotion_net(n_classes: int = 3, input_dim: int = EMOTION_INPUT_DIM, seed: int | None = 0) -> NetworkGraph:
    net = build_from_layers(EMOTION_LAYERS, input_dim, n_classes)
    return net if seed is None else net.init_weights(seed)


def build_mlp(input_dim: int, hidden=POSTURE_HIDDEN, n_classes: int = 3, seed: int | None = 0) -> NetworkGraph:
    layers, prev = [], "x"
    for k, width in enumerate(hidden, start=1):
        layers.append((f"H{k}", "dense", width, (prev,)))
        prev = f"H{k}"
    net = build_from_layers(layers, input_dim, n_classes)
    return net if seed is None else net.init_weights(seed)


def build_posture_net(n_classes: int = 3, seed: int | None = 0) -> NetworkGraph:
    return build_mlp(POSTURE_INPUT_DIM, POSTURE_HIDDEN, n_classes, seed)
