from __future__ import annotations

import numpy as np

from .base import ScoringClassifier, softmax


class GaussianNB(ScoringClassifier):
    """Per-class independent Gaussians. ``var_smoothing`` times the largest
    feature variance is added to every variance."""

    kind = "GaussianNB"
    probabilistic = True

    def __init__(self, var_smoothing=1e-9):
        self.var_smoothing = var_smoothing

    def _fit(self, X, y_idx):
        C = len(self.classes_)
        eps = self.var_smoothing * max(float(np.var(X, axis=0).max()), 1e-300)
        self.means_ = np.array([X[y_idx == c].mean(axis=0) for c in range(C)])
        self.var_ = np.array([X[y_idx == c].var(axis=0) for c in range(C)]) + eps
        self.class_prior_ = np.bincount(y_idx, minlength=C) / len(y_idx)

    def joint_log_likelihood(self, X):
        ll = -0.5 * (np.sum(np.log(2.0 * np.pi * self.var_), axis=1)[None, :]
                     + np.sum((X[:, None, :] - self.means_[None]) ** 2 / self.var_[None], axis=2))
        return ll + np.log(self.class_prior_)[None, :]

    def _scores(self, X):
        return softmax(self.joint_log_likelihood(X))

    def _state(self):
        return {"means": self.means_, "var": self.var_, "prior": self.class_prior_}

    def _load_state(self, s):
        self.means_, self.var_, self.class_prior_ = s["means"], s["var"], s["prior"]
