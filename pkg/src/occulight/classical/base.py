from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin

from ..validation import check_fitted, check_X, check_X_y


class ScoringClassifier(ClassifierMixin, BaseEstimator):
    """Shared predict logic: every model exposes per-class scores and predicts
    their argmax, ties going to the lowest class index.

    Subclasses implement ``_fit(X, y_idx)`` on integer-encoded labels,
    ``_scores(X)``, and ``_state()`` / ``_load_state()`` for serialization.
    """

    kind = None
    probabilistic = False

    def fit(self, X, y):
        X, y = check_X_y(X, y)
        self.classes_, y_idx = np.unique(y, return_inverse=True)
        self.n_features_in_ = X.shape[1]
        self._fit(X, y_idx)
        return self

    def predict_score(self, X) -> np.ndarray:
        check_fitted(self)
        return self._scores(check_X(X, self.n_features_in_))

    def predict(self, X) -> np.ndarray:
        scores = self.predict_score(X)
        return self.classes_[np.argmax(scores, axis=1)]

    def predict_proba(self, X) -> np.ndarray:
        if not self.probabilistic:
            raise AttributeError(f"{type(self).__name__} scores are not probabilities")
        return self.predict_score(X)

    # subclass hooks
    def _fit(self, X, y_idx):
        raise NotImplementedError

    def _scores(self, X):
        raise NotImplementedError

    def _state(self) -> dict:
        raise NotImplementedError

    def _load_state(self, state: dict) -> None:
        raise NotImplementedError


def standardizer(X):
    mean = X.mean(axis=0)
    scale = X.std(axis=0)
    scale[scale < 1e-12] = 1.0
    return mean, scale


def softmax(z):
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)
