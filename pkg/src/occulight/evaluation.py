"""Cross-validation, subject-held-out blind tests, confusion matrices and ROC.

Report CSV columns: ``mode,model,fold,accuracy,matrix`` where ``matrix`` is
the confusion matrix flattened row-major (rows = true class) and joined with
spaces. ``fold`` is a fold number, ``pooled`` or ``blind``.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from sklearn.base import clone

from .dataset import Dataset
from .errors import InvalidClassError, InvalidLabelsError, InvalidSplitError, ShapeError

REPORT_COLUMNS = ("mode", "model", "fold", "accuracy", "matrix")


@dataclass
class RocCurve:
    fpr: np.ndarray
    tpr: np.ndarray
    thresholds: np.ndarray
    auc: float


@dataclass
class EvalReport:
    accuracy: float
    matrix: np.ndarray
    class_names: tuple = ()
    fold_accuracies: list = field(default_factory=list)
    roc: RocCurve | None = None
    notes: dict = field(default_factory=dict)

    @property
    def auc(self):
        return None if self.roc is None else self.roc.auc


def confusion_and_accuracy(truth, pred, n_classes: int | None = None, class_names=()) -> EvalReport:
    truth = np.asarray(truth, dtype=int)
    pred = np.asarray(pred, dtype=int)
    if truth.shape != pred.shape or truth.ndim != 1:
        raise ShapeError(f"truth and pred must be equal-length 1-D, got {truth.shape} and {pred.shape}")
    if truth.size == 0:
        raise ShapeError("need at least one sample")
    C = n_classes or len(class_names) or int(max(truth.max(), pred.max())) + 1
    matrix = np.zeros((C, C), dtype=np.int64)
    np.add.at(matrix, (truth, pred), 1)
    return EvalReport(float(np.trace(matrix) / matrix.sum()), matrix, tuple(class_names))


def report_from_matrix(matrix, class_names=()) -> EvalReport:
    m = np.asarray(matrix, dtype=np.int64)
    return EvalReport(float(np.trace(m) / m.sum()), m, tuple(class_names))


def stratified_kfold(data: Dataset, k: int = 10, seed: int = 0) -> list:
    """``k`` (train, test) index pairs; test folds partition all indices.

    Indices of each class are shuffled, classes are laid end to end, and the
    resulting sequence is dealt round-robin, so each fold's class counts are
    within one of the global proportion.
    """
    y = data.y
    counts = np.bincount(y, minlength=len(data.class_names))
    present = counts[counts > 0]
    if k < 2:
        raise InvalidSplitError("k must be at least 2")
    if np.any(present < k):
        raise InvalidSplitError(f"every class needs at least k={k} members, got {counts.tolist()}")
    rng = np.random.default_rng(seed)
    order = np.concatenate([rng.permutation(np.nonzero(y == c)[0]) for c in range(len(counts)) if counts[c]])
    fold_of = np.empty(len(y), dtype=int)
    fold_of[order] = np.arange(len(y)) % k
    all_idx = np.arange(len(y))
    return [(all_idx[fold_of != f], all_idx[fold_of == f]) for f in range(k)]


def subject_holdout_split(data: Dataset, holdout_fraction: float = 0.3, seed: int = 0):
    """(train, blind) index arrays with no subject shared between them."""
    subjects = np.unique(data.subjects)
    if subjects.size < 2:
        raise InvalidSplitError("subject holdout needs at least two distinct subjects")
    if not 0.0 < holdout_fraction < 1.0:
        raise InvalidSplitError("holdout_fraction must be in (0, 1)")
    n_blind = int(math.floor(holdout_fraction * subjects.size + 0.5))
    n_blind = min(max(n_blind, 1), subjects.size - 1)
    rng = np.random.default_rng(seed)
    blind_subjects = set(rng.permutation(subjects)[:n_blind].tolist())
    mask = np.array([s in blind_subjects for s in data.subjects])
    idx = np.arange(data.n_samples)
    return idx[~mask], idx[mask]


def one_vs_rest(data: Dataset, positive) -> Dataset:
    """Relabel to {positive: 0, "rest": 1}; features are untouched."""
    names = data.class_names
    if isinstance(positive, str):
        if positive not in names:
            raise InvalidClassError(f"class {positive!r} not in {names}")
        pos = names.index(positive)
    else:
        pos = int(positive)
    if not np.any(data.y == pos):
        raise InvalidClassError(f"class {names[pos]!r} has no samples")
    y = np.where(data.y == pos, 0, 1)
    return Dataset(data.X, y, data.subjects, (names[pos], "rest"), data.feature_names)


def roc_auc(scores, truth) -> RocCurve:
    """ROC of ``scores`` against binary ``truth`` (1 = positive).

    Equal scores form a single threshold step; AUC is the trapezoid area.
    """
    scores = np.asarray(scores, dtype=float)
    truth = np.asarray(truth).astype(bool)
    if scores.shape != truth.shape or scores.ndim != 1:
        raise ShapeError("scores and truth must be equal-length 1-D arrays")
    P, N = int(truth.sum()), int((~truth).sum())
    if P == 0 or N == 0:
        raise InvalidLabelsError("ROC needs both positive and negative samples")
    order = np.argsort(-scores, kind="stable")
    s, t = scores[order], truth[order]
    last_of_group = np.r_[s[1:] != s[:-1], True]
    tp = np.cumsum(t)[last_of_group]
    fp = np.cumsum(~t)[last_of_group]
    tpr = np.r_[0.0, tp / P]
    fpr = np.r_[0.0, fp / N]
    thresholds = np.r_[np.inf, s[last_of_group]]
    auc = float(np.sum((fpr[1:] - fpr[:-1]) * (tpr[1:] + tpr[:-1]) / 2.0))
    return RocCurve(fpr, tpr, thresholds, auc)


# ---------------------------------------------------------------- protocols

def _positive_score(est, X, positive_index=0):
    scores = est.predict_score(X)
    col = np.nonzero(est.classes_ == positive_index)[0]
    if col.size == 0:
        return np.full(X.shape[0], -np.inf)
    return scores[:, col[0]]


def cross_validate(estimator, data: Dataset, k: int = 10, seed: int = 0) -> EvalReport:
    """Pooled confusion matrix plus per-fold accuracies; ROC in the 2-class case."""
    C = len(data.class_names)
    truth, pred, score = [], [], []
    fold_acc = []
    for train_idx, test_idx in stratified_kfold(data, k, seed):
        est = clone(estimator).fit(data.X[train_idx], data.y[train_idx])
        p = est.predict(data.X[test_idx])
        fold_acc.append(float(np.mean(p == data.y[test_idx])))
        truth.append(data.y[test_idx])
        pred.append(p)
        if C == 2:
            score.append(_positive_score(est, data.X[test_idx]))
    report = confusion_and_accuracy(np.concatenate(truth), np.concatenate(pred), C, data.class_names)
    report.fold_accuracies = fold_acc
    if C == 2:
        report.roc = roc_auc(np.concatenate(score), np.concatenate(truth) == 0)
    return report


def blind_test(estimator, data: Dataset, holdout_fraction: float = 0.3, seed: int = 0) -> EvalReport:
    train_idx, blind_idx = subject_holdout_split(data, holdout_fraction, seed)
    overlap = set(data.subjects[train_idx]) & set(data.subjects[blind_idx])
    est = clone(estimator).fit(data.X[train_idx], data.y[train_idx])
    C = len(data.class_names)
    report = confusion_and_accuracy(data.y[blind_idx], est.predict(data.X[blind_idx]), C, data.class_names)
    report.notes = {"train_subjects": len(set(data.subjects[train_idx])),
                    "blind_subjects": len(set(data.subjects[blind_idx])),
                    "subject_overlap": len(overlap)}
    if C == 2 and len(np.unique(data.y[blind_idx])) == 2:
        report.roc = roc_auc(_positive_score(est, data.X[blind_idx]), data.y[blind_idx] == 0)
    return report


def evaluate_all(make_estimator: Callable, data: Dataset, mode: str, folds: int = 10,
                 holdout: float = 0.3, seed: int = 0) -> dict:
    """Multi-class report plus one one-vs-rest report per class.

    Keys are ``"multiclass"`` and ``"<class>-vs-rest"``.
    """
    def run(d):
        est = make_estimator()
        if mode == "cv":
            return cross_validate(est, d, folds, seed)
        if mode == "blind":
            return blind_test(est, d, holdout, seed)
        raise ValueError(f"mode must be 'cv' or 'blind', got {mode!r}")

    out = {"multiclass": run(data)}
    for name in data.class_names:
        if np.any(data.y == data.class_names.index(name)):
            out[f"{name}-vs-rest"] = run(one_vs_rest(data, name))
    return out


# ---------------------------------------------------------------- reports

def report_rows(mode: str, model: str, report: EvalReport) -> list:
    flat = " ".join(str(int(v)) for v in report.matrix.ravel())
    rows = []
    for i, acc in enumerate(report.fold_accuracies):
        rows.append({"mode": mode, "model": model, "fold": str(i), "accuracy": f"{acc:.6f}", "matrix": ""})
    rows.append({"mode": mode, "model": model, "fold": "pooled" if mode == "cv" else "blind",
                 "accuracy": f"{report.accuracy:.6f}", "matrix": flat})
    return rows


def reports_to_csv(mode: str, model: str, reports: dict) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=REPORT_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for problem, rep in reports.items():
        name = model if problem == "multiclass" else f"{model}:{problem}"
        writer.writerows(report_rows(mode, name, rep))
    return buf.getvalue()


def parse_report_csv(text: str) -> list:
    reader = csv.DictReader(io.StringIO(text))
    if tuple(reader.fieldnames or ()) != REPORT_COLUMNS:
        raise ValueError(f"report header must be {','.join(REPORT_COLUMNS)}")
    rows = []
    for row in reader:
        row["accuracy"] = float(row["accuracy"])
        if row["matrix"]:
            vals = [int(v) for v in row["matrix"].split()]
            C = int(round(math.sqrt(len(vals))))
            row["matrix"] = np.array(vals).reshape(C, C)
        rows.append(row)
    return rows


def format_report(title: str, report: EvalReport) -> str:
    names = report.class_names or tuple(str(i) for i in range(len(report.matrix)))
    width = max(8, *(len(n) for n in names)) + 1
    lines = [title, f"  accuracy: {report.accuracy:.4f}"]
    if report.fold_accuracies:
        accs = ", ".join(f"{a:.3f}" for a in report.fold_accuracies)
        lines.append(f"  folds ({len(report.fold_accuracies)}): {accs}")
    for k, v in report.notes.items():
        lines.append(f"  {k.replace('_', ' ')}: {v}")
    if report.roc is not None:
        lines.append(f"  AUC: {report.roc.auc:.4f}")
    lines.append("  " + "true\\pred".ljust(width) + "".join(n.rjust(width) for n in names))
    for name, row in zip(names, report.matrix):
        lines.append("  " + name.ljust(width) + "".join(str(int(v)).rjust(width) for v in row))
    return "\n".join(lines)
