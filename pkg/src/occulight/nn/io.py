"""Network files: the shared container with magic ``OCCULIGHT-NET``, a
``topology`` header (node records in graph order) and one ``W<i>``/``b<i>``
block pair per dense node ``i``."""
from __future__ import annotations

from pathlib import Path

from ..serialize import NET_MAGIC, dumps, loads
from .graph import NetworkGraph


def save_network(net: NetworkGraph, path) -> None:
    blocks = {}
    for i in net.dense_nodes:
        W, b = net.params[i]
        blocks[f"W{i}"], blocks[f"b{i}"] = W, b
    Path(path).write_text(dumps(NET_MAGIC, {"topology": net.topology()}, blocks), encoding="utf-8")


def load_network(path) -> NetworkGraph:
    header, blocks = loads(Path(path).read_text(encoding="utf-8"), NET_MAGIC)
    net = NetworkGraph.from_topology(header["topology"])
    net.params = {i: (blocks[f"W{i}"], blocks[f"b{i}"]) for i in net.dense_nodes}
    return net
