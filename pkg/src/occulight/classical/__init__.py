"""From-scratch classifiers behind one train / predict / score surface."""
from __future__ import annotations

import enum

import numpy as np

from ..dataset import Dataset
from ..validation import check_X
from .bayes import GaussianNB
from .knn import KNeighborsClassifier
from .lda import LDASVMClassifier, LinearDiscriminantAnalysis, lda_transform
from .linear import LinearSVM, LogisticRegression
from .tree import DecisionTreeClassifier, RandomForestClassifier


class ModelKind(enum.Enum):
    SVM = "SVM"
    LR = "LR"
    CART = "CART"
    KNN = "KNN"
    RFC = "RFC"
    GaussianNB = "GaussianNB"
    LDA = "LDA"


ESTIMATORS = {
    ModelKind.SVM: LinearSVM,
    ModelKind.LR: LogisticRegression,
    ModelKind.CART: DecisionTreeClassifier,
    ModelKind.KNN: KNeighborsClassifier,
    ModelKind.RFC: RandomForestClassifier,
    ModelKind.GaussianNB: GaussianNB,
    ModelKind.LDA: LinearDiscriminantAnalysis,
}

# Command-line names; "lda-svm" is the LDA projection + SVM pipeline.
MODEL_NAMES = {
    "svm": LinearSVM, "lr": LogisticRegression, "cart": DecisionTreeClassifier,
    "knn": KNeighborsClassifier, "rfc": RandomForestClassifier, "gnb": GaussianNB,
    "lda": LinearDiscriminantAnalysis, "lda-svm": LDASVMClassifier,
}
KIND_TO_CLASS = {cls.kind: cls for cls in MODEL_NAMES.values()}


def make_estimator(kind, config: dict | None = None, seed: int = 0):
    """Instantiate an estimator from a ModelKind, kind string or CLI name."""
    if isinstance(kind, ModelKind):
        cls = ESTIMATORS[kind]
    elif isinstance(kind, str) and kind.lower() in MODEL_NAMES:
        cls = MODEL_NAMES[kind.lower()]
    elif kind in KIND_TO_CLASS:
        cls = KIND_TO_CLASS[kind]
    else:
        raise ValueError(f"unknown model {kind!r}; valid names: {', '.join(MODEL_NAMES)}")
    est = cls()
    params = dict(config or {})
    if "random_state" in est.get_params():
        params.setdefault("random_state", seed)
    unknown = set(params) - set(est.get_params())
    if unknown:
        raise ValueError(f"unknown {cls.kind} options: {sorted(unknown)}")
    return est.set_params(**params)


def train(kind, data: Dataset, config: dict | None = None, seed: int = 0):
    data.check_trainable()
    return make_estimator(kind, config, seed).fit(data.X, data.y)


def predict(model, x):
    """Label for a single d-vector."""
    x = np.asarray(x, dtype=float)
    return model.predict(check_X(x.reshape(1, -1) if x.ndim == 1 else x))[0]


def predict_score(model, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return model.predict_score(x.reshape(1, -1) if x.ndim == 1 else x)[0]


__all__ = [
    "ModelKind", "ESTIMATORS", "MODEL_NAMES", "make_estimator", "train", "predict", "predict_score",
    "lda_transform", "GaussianNB", "KNeighborsClassifier", "LDASVMClassifier",
    "LinearDiscriminantAnalysis", "LinearSVM", "LogisticRegression", "DecisionTreeClassifier",
    "RandomForestClassifier",
]
