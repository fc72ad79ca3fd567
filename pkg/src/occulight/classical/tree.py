"""Gini CART and a bagged random forest built from it."""
from __future__ import annotations

import math

import numpy as np

from .base import ScoringClassifier


def gini(counts: np.ndarray) -> float:
    n = counts.sum()
    if n == 0:
        return 0.0
    p = counts / n
    return 1.0 - float(np.dot(p, p))


class _TreeBuilder:
    """Grows one tree into flat arrays.

    Node ``i`` is a leaf when ``feature[i] == -1``; otherwise samples with
    ``x[feature] <= threshold`` go to ``left[i]``.
    """

    def __init__(self, n_classes, max_depth, min_samples_leaf, max_features, rng):
        self.n_classes = n_classes
        self.max_depth = max_depth
        self.min_leaf = min_samples_leaf
        self.max_features = max_features
        self.rng = rng
        self.feature, self.threshold, self.left, self.right, self.value = [], [], [], [], []

    def _new_node(self, counts):
        self.feature.append(-1)
        self.threshold.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        self.value.append(counts)
        return len(self.feature) - 1

    def _best_split(self, X, y, idx):
        n, d = len(idx), X.shape[1]
        if self.max_features is None or self.max_features >= d:
            features = range(d)
        else:
            features = np.sort(self.rng.choice(d, self.max_features, replace=False))
        best = (math.inf, -1, 0.0)
        eye = np.eye(self.n_classes)
        for f in features:
            xs = X[idx, f]
            order = np.argsort(xs, kind="stable")
            xs = xs[order]
            left_counts = np.cumsum(eye[y[idx][order]], axis=0)[:-1]
            n_left = np.arange(1, n)
            valid = (xs[:-1] < xs[1:]) & (n_left >= self.min_leaf) & (n - n_left >= self.min_leaf)
            if not valid.any():
                continue
            right_counts = left_counts[-1] + eye[y[idx][order][-1]] - left_counts
            nl = n_left[:, None].astype(float)
            nr = (n - n_left)[:, None].astype(float)
            g_left = 1.0 - np.sum((left_counts / nl) ** 2, axis=1)
            g_right = 1.0 - np.sum((right_counts / nr) ** 2, axis=1)
            score = (n_left * g_left + (n - n_left) * g_right) / n
            score[~valid] = math.inf
            i = int(np.argmin(score))
            if score[i] < best[0] - 1e-12:
                a, b = xs[i], xs[i + 1]
                t = 0.5 * (a + b)
                if not a <= t < b:
                    t = a
                best = (score[i], int(f), float(t))
        return best

    def build(self, X, y):
        root_counts = np.bincount(y, minlength=self.n_classes).astype(float)
        root = self._new_node(root_counts)
        stack = [(root, np.arange(len(y)), 0)]
        while stack:
            node, idx, depth = stack.pop()
            counts = self.value[node]
            if (np.count_nonzero(counts) <= 1 or len(idx) < 2 * self.min_leaf
                    or (self.max_depth is not None and depth >= self.max_depth)):
                continue
            _, f, t = self._best_split(X, y, idx)
            if f < 0:
                continue
            go_left = X[idx, f] <= t
            li, ri = idx[go_left], idx[~go_left]
            self.feature[node], self.threshold[node] = f, t
            lnode = self._new_node(np.bincount(y[li], minlength=self.n_classes).astype(float))
            rnode = self._new_node(np.bincount(y[ri], minlength=self.n_classes).astype(float))
            self.left[node], self.right[node] = lnode, rnode
            stack.append((rnode, ri, depth + 1))
            stack.append((lnode, li, depth + 1))
        return _Tree(np.array(self.feature, dtype=np.int64), np.array(self.threshold),
                     np.array(self.left, dtype=np.int64), np.array(self.right, dtype=np.int64),
                     np.array(self.value).reshape(-1, self.n_classes))


class _Tree:
    def __init__(self, feature, threshold, left, right, value):
        self.feature, self.threshold, self.left, self.right, self.value = feature, threshold, left, right, value

    def apply(self, X) -> np.ndarray:
        """Leaf index reached by each row of X."""
        node = np.zeros(X.shape[0], dtype=np.int64)
        active = self.feature[node] >= 0
        while active.any():
            rows = np.nonzero(active)[0]
            nd = node[rows]
            go_left = X[rows, self.feature[nd]] <= self.threshold[nd]
            node[rows] = np.where(go_left, self.left[nd], self.right[nd])
            active = self.feature[node] >= 0
        return node

    def leaf_fractions(self, X) -> np.ndarray:
        v = self.value[self.apply(X)]
        return v / v.sum(axis=1, keepdims=True)

    @property
    def depth(self) -> int:
        depths = np.zeros(len(self.feature), dtype=np.int64)
        for i in range(len(self.feature)):
            if self.feature[i] >= 0:
                depths[self.left[i]] = depths[self.right[i]] = depths[i] + 1
        return int(depths.max())

    @property
    def n_leaves(self) -> int:
        return int(np.sum(self.feature < 0))

    def arrays(self):
        return self.feature, self.threshold, self.left, self.right, self.value


def _resolve_max_features(max_features, d):
    if max_features is None:
        return None
    if max_features == "sqrt":
        return max(1, int(math.sqrt(d)))
    if max_features == "log2":
        return max(1, int(math.log2(d)))
    if isinstance(max_features, float):
        return max(1, int(max_features * d))
    return int(max_features)


class DecisionTreeClassifier(ScoringClassifier):
    """Binary CART on Gini impurity; thresholds at midpoints of adjacent values.

    Scores are the class fractions of the training samples in the reached leaf.
    """

    kind = "CART"
    probabilistic = True

    def __init__(self, max_depth=None, min_samples_leaf=1, max_features=None, random_state=0):
        self.max_depth = max_depth
        self.min_samples_leaf = min_samples_leaf
        self.max_features = max_features
        self.random_state = random_state

    def _fit(self, X, y_idx):
        rng = np.random.default_rng(self.random_state)
        builder = _TreeBuilder(len(self.classes_), self.max_depth, self.min_samples_leaf,
                               _resolve_max_features(self.max_features, X.shape[1]), rng)
        self.tree_ = builder.build(X, y_idx)

    def _scores(self, X):
        return self.tree_.leaf_fractions(X)

    def get_depth(self) -> int:
        return self.tree_.depth

    def apply(self, X):
        return self.tree_.apply(np.asarray(X, dtype=float))

    def _state(self):
        f, t, l, r, v = self.tree_.arrays()
        return {"feature": f, "threshold": t, "left": l, "right": r, "value": v}

    def _load_state(self, s):
        self.tree_ = _Tree(s["feature"], s["threshold"], s["left"], s["right"], s["value"])


class RandomForestClassifier(ScoringClassifier):
    """Bagged CART ensemble with per-split feature subsampling.

    ``predict_score`` returns the fraction of trees voting for each class;
    each tree votes the argmax of its leaf fractions.
    """

    kind = "RFC"
    probabilistic = True

    def __init__(self, n_trees=100, max_depth=None, min_samples_leaf=1, max_features="sqrt",
                 bootstrap=True, random_state=0):
        self.n_trees = n_trees
        self.max_depth = max_depth
        self.min_samples_leaf = min_samples_leaf
        self.max_features = max_features
        self.bootstrap = bootstrap
        self.random_state = random_state

    def _fit(self, X, y_idx):
        n = X.shape[0]
        rng = np.random.default_rng(self.random_state)
        m = _resolve_max_features(self.max_features, X.shape[1])
        self.trees_ = []
        for seed in rng.integers(0, 2**63 - 1, size=self.n_trees):
            tree_rng = np.random.default_rng(int(seed))
            rows = tree_rng.integers(0, n, n) if self.bootstrap else np.arange(n)
            builder = _TreeBuilder(len(self.classes_), self.max_depth, self.min_samples_leaf, m, tree_rng)
            self.trees_.append(builder.build(X[rows], y_idx[rows]))

    def tree_votes(self, X) -> np.ndarray:
        """(n_trees, n_samples) class index voted by each tree."""
        return np.array([np.argmax(t.leaf_fractions(X), axis=1) for t in self.trees_])

    def _scores(self, X):
        votes = self.tree_votes(X)
        C = len(self.classes_)
        counts = np.stack([(votes == c).sum(axis=0) for c in range(C)], axis=1)
        return counts / len(self.trees_)

    def _state(self):
        sizes = np.array([len(t.feature) for t in self.trees_], dtype=np.int64)
        cat = [np.concatenate(parts) for parts in zip(*(t.arrays() for t in self.trees_))]
        return {"tree_sizes": sizes, "feature": cat[0], "threshold": cat[1], "left": cat[2],
                "right": cat[3], "value": cat[4]}

    def _load_state(self, s):
        self.trees_ = []
        start = 0
        for size in s["tree_sizes"]:
            sl = slice(start, start + int(size))
            self.trees_.append(_Tree(s["feature"][sl], s["threshold"][sl], s["left"][sl],
                                     s["right"][sl], s["value"][sl]))
            start += int(size)
