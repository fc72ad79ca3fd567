from __future__ import annotations

import warnings

import numpy as np
import scipy.linalg

from ..errors import InvalidModelError
from ..validation import check_fitted, check_X
from .base import ScoringClassifier, softmax
from .linear import LinearSVM


class LinearDiscriminantAnalysis(ScoringClassifier):
    """Gaussian classes with one shared covariance.

    Also a (C-1)-dimensional projection maximizing between-class over
    within-class scatter. Each projection axis is signed so the last class
    mean projects above the first.
    """

    kind = "LDA"
    probabilistic = True

    def __init__(self, ridge=1e-6):
        self.ridge = ridge

    def _fit(self, X, y_idx):
        n, d = X.shape
        C = len(self.classes_)
        self.means_ = np.array([X[y_idx == c].mean(axis=0) for c in range(C)])
        self.priors_ = np.bincount(y_idx, minlength=C) / n
        centered = X - self.means_[y_idx]
        cov = centered.T @ centered / max(n - C, 1)
        if np.linalg.matrix_rank(cov) < d:
            warnings.warn("shared covariance is singular; applying ridge regularization", RuntimeWarning,
                          stacklevel=3)
        cov = cov + self.ridge * np.eye(d)
        self.covariance_ = cov
        prec_means = scipy.linalg.solve(cov, self.means_.T, assume_a="pos")     # (d, C)
        self.coef_ = prec_means.T
        self.intercept_ = -0.5 * np.sum(self.means_ * self.coef_, axis=1) + np.log(self.priors_)

        overall = self.priors_ @ self.means_
        diff = self.means_ - overall
        between = (diff * self.priors_[:, None]).T @ diff
        evals, evecs = scipy.linalg.eigh(between, cov)
        order = np.argsort(evals, kind="stable")[::-1][: C - 1]
        scalings = evecs[:, order]
        proj = self.means_ @ scalings
        flip = np.where(proj[-1] - proj[0] < 0, -1.0, 1.0)
        self.scalings_ = scalings * flip
        self.explained_ratio_ = evals[order]

    def _scores(self, X):
        return softmax(X @ self.coef_.T + self.intercept_)

    def transform(self, X):
        check_fitted(self)
        return check_X(X, self.n_features_in_) @ self.scalings_

    def _state(self):
        return {"means": self.means_, "priors": self.priors_, "covariance": self.covariance_,
                "coef": self.coef_, "intercept": self.intercept_, "scalings": self.scalings_}

    def _load_state(self, s):
        self.means_, self.priors_, self.covariance_ = s["means"], s["priors"], s["covariance"]
        self.coef_, self.intercept_, self.scalings_ = s["coef"], s["intercept"], s["scalings"]


def lda_transform(model, x) -> np.ndarray:
    if not isinstance(model, LinearDiscriminantAnalysis):
        raise InvalidModelError(f"lda_transform needs an LDA model, got {type(model).__name__}")
    out = model.transform(x)
    return out[0] if np.ndim(x) == 1 else out


class LDASVMClassifier(ScoringClassifier):
    """LDA projection to C-1 dimensions followed by a linear SVM."""

    kind = "LDA_SVM"

    def __init__(self, ridge=1e-6, learning_rate=0.1, epochs=500, l2=1e-4):
        self.ridge = ridge
        self.learning_rate = learning_rate
        self.epochs = epochs
        self.l2 = l2

    def _fit(self, X, y_idx):
        self.lda_ = LinearDiscriminantAnalysis(ridge=self.ridge).fit(X, y_idx)
        self.svm_ = LinearSVM(self.learning_rate, self.epochs, self.l2).fit(self.lda_.transform(X), y_idx)

    def _scores(self, X):
        return self.svm_.predict_score(self.lda_.transform(X))

    def _state(self):
        state = {f"lda.{k}": v for k, v in self.lda_._state().items()}
        state.update({f"svm.{k}": v for k, v in self.svm_._state().items()})
        return state

    def _load_state(self, s):
        C = len(self.classes_)
        self.lda_ = LinearDiscriminantAnalysis(self.ridge)
        self.svm_ = LinearSVM(self.learning_rate, self.epochs, self.l2)
        for est, prefix, nfeat in ((self.lda_, "lda.", self.n_features_in_), (self.svm_, "svm.", C - 1)):
            est.classes_ = np.arange(C)
            est.n_features_in_ = nfeat
            est._load_state({k[len(prefix):]: v for k, v in s.items() if k.startswith(prefix)})
