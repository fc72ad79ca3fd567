from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin

from ..classical.base import standardizer
from ..validation import check_fitted, check_X, check_X_y
from .architectures import EMOTION_LAYERS, build_from_layers, build_mlp
from .graph import NetworkGraph, forward
from .train import dataset_loss, fit


class NeuralNetClassifier(ClassifierMixin, BaseEstimator):
    """Feedforward classifier over a layer DAG.

    ``architecture`` is ``"emotion"`` (the 14-hidden-layer merge network),
    ``"posture"`` (32-16-8), or a tuple of hidden widths. Inputs are
    standardized with training-set statistics when ``standardize`` is set.
    """

    kind = "NN"
    probabilistic = True

    def __init__(self, architecture="posture", optimizer="adadelta", optimizer_params=None, epochs=200,
                 batch_size=32, random_state=0, standardize=True):
        self.architecture = architecture
        self.optimizer = optimizer
        self.optimizer_params = optimizer_params
        self.epochs = epochs
        self.batch_size = batch_size
        self.random_state = random_state
        self.standardize = standardize

    def _build(self, d, C):
        if self.architecture == "emotion":
            return build_from_layers(EMOTION_LAYERS, d, C)
        hidden = (32, 16, 8) if self.architecture == "posture" else tuple(int(h) for h in self.architecture)
        return build_mlp(d, hidden, C, seed=None)

    def fit(self, X, y):
        X, y = check_X_y(X, y)
        self.classes_, y_idx = np.unique(y, return_inverse=True)
        self.n_features_in_ = X.shape[1]
        if self.standardize:
            self.mean_, self.scale_ = standardizer(X)
        else:
            self.mean_, self.scale_ = np.zeros(X.shape[1]), np.ones(X.shape[1])
        Z = (X - self.mean_) / self.scale_
        seeds = np.random.SeedSequence(self.random_state).spawn(2)
        net = self._build(X.shape[1], len(self.classes_))
        net.init_weights(int(seeds[0].generate_state(1)[0]))
        self.initial_loss_ = dataset_loss(net, Z, y_idx)
        self.network_, self.loss_history_ = fit(
            net, (Z, y_idx), self.optimizer, self.epochs, self.batch_size,
            int(seeds[1].generate_state(1)[0]), self.optimizer_params)
        return self

    def predict_score(self, X):
        check_fitted(self)
        Z = (check_X(X, self.n_features_in_) - self.mean_) / self.scale_
        out, _ = forward(self.network_, Z, "infer")
        if self.network_.head == "sigmoid":
            return np.hstack([1.0 - out, out])
        return out

    predict_proba = predict_score

    def predict(self, X):
        scores = self.predict_score(X)
        return self.classes_[np.argmax(scores, axis=1)]

    def _state(self):
        state = {"mean": self.mean_, "scale": self.scale_,
                 "loss_history": np.array([self.initial_loss_, *self.loss_history_])}
        for i in self.network_.dense_nodes:
            W, b = self.network_.params[i]
            state[f"W{i}"], state[f"b{i}"] = W, b
        return state

    def _load_state(self, s, topology):
        self.mean_, self.scale_ = s["mean"], s["scale"]
        if "loss_history" in s:
            self.initial_loss_ = float(s["loss_history"][0])
            self.loss_history_ = s["loss_history"][1:].tolist()
        net = NetworkGraph.from_topology(topology)
        net.params = {i: (s[f"W{i}"], s[f"b{i}"]) for i in net.dense_nodes}
        self.network_ = net
