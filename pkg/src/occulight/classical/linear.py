"""Gradient-trained linear models: multinomial logistic regression and a
one-vs-rest linear SVM. Both standardize features internally."""
from __future__ import annotations

import numpy as np

from .base import ScoringClassifier, softmax, standardizer


class LogisticRegression(ScoringClassifier):
    """Multinomial logistic regression, full-batch gradient descent with L2."""

    kind = "LR"
    probabilistic = True

    def __init__(self, learning_rate=0.1, epochs=500, l2=1e-4):
        self.learning_rate = learning_rate
        self.epochs = epochs
        self.l2 = l2

    def _fit(self, X, y_idx):
        self.mean_, self.scale_ = standardizer(X)
        Z = (X - self.mean_) / self.scale_
        n, d = Z.shape
        C = len(self.classes_)
        Y = np.eye(C)[y_idx]
        W, b = np.zeros((d, C)), np.zeros(C)
        self.loss_history_ = []
        for _ in range(self.epochs):
            P = softmax(Z @ W + b)
            self.loss_history_.append(float(-np.mean(np.log(P[np.arange(n), y_idx] + 1e-300))
                                            + 0.5 * self.l2 * np.sum(W * W)))
            G = (P - Y) / n
            W -= self.learning_rate * (Z.T @ G + self.l2 * W)
            b -= self.learning_rate * G.sum(axis=0)
        self.coef_, self.intercept_ = W, b

    def _scores(self, X):
        return softmax(((X - self.mean_) / self.scale_) @ self.coef_ + self.intercept_)

    def _state(self):
        return {"mean": self.mean_, "scale": self.scale_, "coef": self.coef_, "intercept": self.intercept_}

    def _load_state(self, s):
        self.mean_, self.scale_, self.coef_, self.intercept_ = s["mean"], s["scale"], s["coef"], s["intercept"]


class LinearSVM(ScoringClassifier):
    """One-vs-rest linear SVM, hinge loss + L2, full-batch subgradient descent.

    Scores are signed margins, one per class.
    """

    kind = "SVM"

    def __init__(self, learning_rate=0.1, epochs=500, l2=1e-4):
        self.learning_rate = learning_rate
        self.epochs = epochs
        self.l2 = l2

    def _fit(self, X, y_idx):
        self.mean_, self.scale_ = standardizer(X)
        Z = (X - self.mean_) / self.scale_
        n, d = Z.shape
        C = len(self.classes_)
        T = np.where(np.eye(C)[y_idx] > 0, 1.0, -1.0)   # (n, C) +-1 targets
        W, b = np.zeros((d, C)), np.zeros(C)
        for _ in range(self.epochs):
            active = (T * (Z @ W + b)) < 1.0
            G = -(T * active) / n
            W -= self.learning_rate * (Z.T @ G + self.l2 * W)
            b -= self.learning_rate * G.sum(axis=0)
        self.coef_, self.intercept_ = W, b

    def decision_function(self, X):
        return self.predict_score(X)

    def _scores(self, X):
        return ((X - self.mean_) / self.scale_) @ self.coef_ + self.intercept_

    def _state(self):
        return {"mean": self.mean_, "scale": self.scale_, "coef": self.coef_, "intercept": self.intercept_}

    def _load_state(self, s):
        self.mean_, self.scale_, self.coef_, self.intercept_ = s["mean"], s["scale"], s["coef"], s["intercept"]
