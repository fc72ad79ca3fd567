"""Labeled feature tables and their CSV form.

CSV layout: header ``subject_id,label,f0,...,f{d-1}``, one row per sample,
labels written as literal class names, ``\\n`` line endings, ``.`` decimals.
Floats are written with 17 significant digits so files round-trip exactly.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import InvalidDatasetError

POSTURE_CLASSES = ("Standing", "Sitting", "LyingDown")
EMOTION_CLASSES = ("Comfortable", "Neutral", "Uncomfortable")


@dataclass(frozen=True)
class Dataset:
    """Feature matrix with integer labels indexing into ``class_names``."""

    X: np.ndarray
    y: np.ndarray
    subjects: np.ndarray
    class_names: tuple
    feature_names: tuple = field(default=())

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        y = np.asarray(self.y, dtype=int)
        subjects = np.asarray(self.subjects).astype(str)
        if X.ndim != 2:
            raise InvalidDatasetError(f"X must be 2-D, got shape {X.shape}")
        n = X.shape[0]
        if y.shape != (n,) or subjects.shape != (n,):
            raise InvalidDatasetError("X, y and subjects must have the same length")
        if not np.all(np.isfinite(X)):
            raise InvalidDatasetError("X contains non-finite values")
        if n and (y.min() < 0 or y.max() >= len(self.class_names)):
            raise InvalidDatasetError("label index outside class_names")
        names = tuple(self.feature_names) or tuple(f"f{i}" for i in range(X.shape[1]))
        if len(names) != X.shape[1]:
            raise InvalidDatasetError("feature_names length does not match X")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "subjects", subjects)
        object.__setattr__(self, "class_names", tuple(self.class_names))
        object.__setattr__(self, "feature_names", names)

    @property
    def n_samples(self) -> int:
        return self.X.shape[0]

    @property
    def n_features(self) -> int:
        return self.X.shape[1]

    @property
    def labels(self) -> list:
        return [self.class_names[i] for i in self.y]

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx, dtype=int)
        return Dataset(self.X[idx], self.y[idx], self.subjects[idx],
                       self.class_names, self.feature_names)

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.y, minlength=len(self.class_names))

    def check_trainable(self, min_per_class: int = 2) -> None:
        counts = self.class_counts()
        present = counts[counts > 0]
        if present.size < 2:
            raise InvalidDatasetError("at least two classes must be present")
        if self.n_features < 1:
            raise InvalidDatasetError("dataset has no features")
        if np.any(present < min_per_class):
            raise InvalidDatasetError(
                f"every present class needs at least {min_per_class} samples, got {counts.tolist()}")


def from_labels(X, labels: Sequence[str], subjects, class_names: Sequence[str]) -> Dataset:
    lookup = {name: i for i, name in enumerate(class_names)}
    try:
        y = [lookup[label] for label in labels]
    except KeyError as exc:
        raise InvalidDatasetError(f"unknown label {exc.args[0]!r}") from None
    return Dataset(np.asarray(X, dtype=float), np.asarray(y, dtype=int), subjects, tuple(class_names))


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def write_csv(data: Dataset, path) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["subject_id", "label", *[f"f{i}" for i in range(data.n_features)]])
    for row, label, subject in zip(data.X, data.y, data.subjects):
        writer.writerow([subject, data.class_names[label], *map(_fmt, row)])
    Path(path).write_text(buf.getvalue(), encoding="utf-8", newline="")


def read_csv(path, class_names: Sequence[str] | None = None) -> Dataset:
    """Read a dataset CSV.

    If ``class_names`` is omitted it is inferred: the posture or emotion class
    tuple when all labels belong to one of them, else sorted label names.
    """
    text = Path(path).read_text(encoding="utf-8")
    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        raise InvalidDatasetError(f"{path}: empty file")
    header, body = rows[0], rows[1:]
    if header[:2] != ["subject_id", "label"]:
        raise InvalidDatasetError(f"{path}: header must start with subject_id,label")
    d = len(header) - 2
    if header[2:] != [f"f{i}" for i in range(d)]:
        raise InvalidDatasetError(f"{path}: feature columns must be f0..f{d - 1}")
    subjects, labels, X = [], [], []
    for line_no, row in enumerate(body, start=2):
        if len(row) != d + 2:
            raise InvalidDatasetError(f"{path}:{line_no}: expected {d + 2} fields, got {len(row)}")
        subjects.append(row[0])
        labels.append(row[1])
        try:
            X.append([float(v) for v in row[2:]])
        except ValueError:
            raise InvalidDatasetError(f"{path}:{line_no}: non-numeric feature") from None
    if class_names is None:
        seen = set(labels)
        for candidate in (POSTURE_CLASSES, EMOTION_CLASSES):
            if seen <= set(candidate):
                class_names = candidate
                break
        else:
            class_names = tuple(sorted(seen))
    X = np.asarray(X, dtype=float).reshape(len(body), d)
    return from_labels(X, labels, subjects, class_names)
