"""Versioned flat-file container for fitted models.

Layout (UTF-8 text, ``\\n`` line endings)::

    <MAGIC> <version>                 e.g. "OCCULIGHT-MODEL 1"
    <key> <json value>                header fields, one per line
    ...
    blocks <count>
    block <name> <f8|i8> <ndim> <dim_1> ... <dim_ndim>
    <space-separated values, row-major, one line>
    ...
    end

Floats are written with ``repr`` (shortest exact round-trip), so loading
reproduces every parameter bit for bit. Classical models store ``kind``,
``n_features``, ``classes`` and ``params`` headers; networks add
``topology`` (list of node records).
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import InvalidModelError

MODEL_MAGIC = "OCCULIGHT-MODEL"
NET_MAGIC = "OCCULIGHT-NET"
FORMAT_VERSION = 1


def _encode_values(arr: np.ndarray) -> str:
    flat = arr.ravel().tolist()
    if arr.dtype.kind == "f":
        return " ".join(repr(float(v)) for v in flat)
    return " ".join(str(int(v)) for v in flat)


def dumps(magic: str, header: dict, blocks: dict) -> str:
    lines = [f"{magic} {FORMAT_VERSION}"]
    for key, value in header.items():
        if " " in key:
            raise ValueError(f"header key {key!r} contains a space")
        lines.append(f"{key} {json.dumps(value, sort_keys=True)}")
    lines.append(f"blocks {len(blocks)}")
    for name, arr in blocks.items():
        arr = np.asarray(arr)
        if arr.dtype.kind in "iub":
            arr, code = arr.astype(np.int64), "i8"
        elif arr.dtype.kind == "f":
            arr, code = arr.astype(np.float64), "f8"
        else:
            raise ValueError(f"block {name!r} has unsupported dtype {arr.dtype}")
        lines.append(" ".join(["block", name, code, str(arr.ndim), *map(str, arr.shape)]))
        lines.append(_encode_values(arr))
    lines.append("end")
    return "\n".join(lines) + "\n"


def loads(text: str, magic: str):
    lines = text.split("\n")
    if not lines or lines[0].split(" ")[0] != magic:
        raise InvalidModelError(f"not a {magic} file")
    try:
        version = int(lines[0].split(" ")[1])
    except (IndexError, ValueError):
        raise InvalidModelError("missing format version") from None
    if version != FORMAT_VERSION:
        raise InvalidModelError(f"unsupported format version {version}")
    header, blocks = {}, {}
    i = 1
    try:
        while not lines[i].startswith("blocks "):
            key, _, value = lines[i].partition(" ")
            header[key] = json.loads(value)
            i += 1
        count = int(lines[i].split()[1])
        i += 1
        for _ in range(count):
            parts = lines[i].split()
            if parts[0] != "block":
                raise InvalidModelError(f"expected block header, got {lines[i][:40]!r}")
            name, code, ndim = parts[1], parts[2], int(parts[3])
            shape = tuple(int(v) for v in parts[4:4 + ndim])
            dtype = {"f8": np.float64, "i8": np.int64}[code]
            raw = lines[i + 1].split()
            arr = np.array(raw, dtype=np.float64 if code == "f8" else np.int64).astype(dtype)
            blocks[name] = arr.reshape(shape)
            i += 2
        if lines[i] != "end":
            raise InvalidModelError("missing end marker")
    except (IndexError, KeyError, ValueError) as exc:
        if isinstance(exc, InvalidModelError):
            raise
        raise InvalidModelError(f"corrupt model file near line {i + 1}: {exc}") from None
    return header, blocks


def save_estimator(est, path) -> None:
    """Write a fitted classical estimator or NeuralNetClassifier."""
    from .nn.estimator import NeuralNetClassifier

    header = {
        "kind": est.kind,
        "n_features": int(est.n_features_in_),
        "classes": np.asarray(est.classes_).tolist(),
        "params": _jsonable(est.get_params()),
    }
    if isinstance(est, NeuralNetClassifier):
        header["topology"] = est.network_.topology()
    Path(path).write_text(dumps(MODEL_MAGIC, header, est._state()), encoding="utf-8")


def load_estimator(path):
    from .classical import KIND_TO_CLASS
    from .nn.estimator import NeuralNetClassifier

    header, blocks = loads(Path(path).read_text(encoding="utf-8"), MODEL_MAGIC)
    kind = header.get("kind")
    if kind == NeuralNetClassifier.kind:
        cls = NeuralNetClassifier
    elif kind in KIND_TO_CLASS:
        cls = KIND_TO_CLASS[kind]
    else:
        raise InvalidModelError(f"unknown model kind {kind!r}")
    params = {k: tuple(v) if isinstance(v, list) else v for k, v in header["params"].items()}
    est = cls(**params)
    est.classes_ = np.array(header["classes"])
    est.n_features_in_ = int(header["n_features"])
    if cls is NeuralNetClassifier:
        est._load_state(blocks, header["topology"])
    else:
        est._load_state(blocks)
    return est


def _jsonable(params: dict) -> dict:
    out = {}
    for k, v in params.items():
        if isinstance(v, np.generic):
            v = v.item()
        if isinstance(v, tuple):
            v = list(v)
        if not isinstance(v, (int, float, str, bool, list, dict, type(None))):
            raise InvalidModelError(f"parameter {k}={v!r} is not serializable")
        out[k] = v
    return out
