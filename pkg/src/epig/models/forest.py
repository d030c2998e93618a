"""Random forest whose trees act as posterior samples.

Defaults mirror the common library defaults: 100 trees, bootstrap resampling,
``sqrt(D)`` candidate features per split, unlimited depth.
"""

from __future__ import annotations

import math

import numpy as np

from ..kernels import tree as tree_kernel
from .base import as_inputs


class RandomForestClassifier:
    def __init__(self, num_classes: int, n_trees: int = 100, smoothing: float = 1e-3, max_features: int | None = None):
        self.num_classes = int(num_classes)
        self.n_trees = int(n_trees)
        self.smoothing = float(smoothing)
        self.max_features = max_features
        self.trees: list[tuple[np.ndarray, ...]] = []
        self.leaf_probs: list[np.ndarray] = []

    @property
    def default_k(self) -> int:
        return self.n_trees

    def fit(self, data, seed=None, validation=None) -> "RandomForestClassifier":
        if len(data) == 0:
            raise ValueError("cannot fit a forest to an empty training set")
        rng = np.random.default_rng(seed)
        x = np.ascontiguousarray(data.inputs, dtype=np.float64)
        y = np.ascontiguousarray(data.labels, dtype=np.int64)
        n, d = x.shape
        max_features = self.max_features or max(1, int(math.sqrt(d)))
        # smoothing mass only goes to classes seen in training, so a
        # single-class training set still yields one-hot leaves
        seen = (np.bincount(y, minlength=self.num_classes) > 0).astype(np.float64)
        self.trees, self.leaf_probs = [], []
        for _ in range(self.n_trees):
            rows = rng.integers(0, n, size=n)
            keys = rng.random((2 * n + 1, d))
            feature, threshold, left, right, counts = tree_kernel.grow_tree(x, y, self.num_classes, rows, keys, max_features)
            probs = counts + self.smoothing * seen
            probs /= probs.sum(axis=1, keepdims=True)
            self.trees.append((feature, threshold, left, right))
            self.leaf_probs.append(probs)
        return self

    def tree_predictions(self, inputs) -> np.ndarray:
        """``(n, T, C)``: row ``t`` is the leaf distribution of tree ``t``."""
        x = np.ascontiguousarray(as_inputs(inputs), dtype=np.float64)
        out = np.empty((x.shape[0], self.n_trees, self.num_classes))
        for t, (tree, probs) in enumerate(zip(self.trees, self.leaf_probs)):
            out[:, t] = probs[tree_kernel.apply_tree(x, *tree)]
        return out

    def posterior_draws(self, k: int | None, seed, anchors=None) -> "ForestDraws":
        """Tree ``i`` is draw ``i`` when ``k`` is None or equals the tree count.

        Any other ``k`` resamples trees uniformly with replacement.
        """
        if k is None or k == self.n_trees:
            index = np.arange(self.n_trees)
        else:
            index = np.random.default_rng(seed).integers(0, self.n_trees, size=int(k))
        return ForestDraws(self, index)

    def predict_samples(self, inputs, k: int | None = None, seed=0) -> np.ndarray:
        return self.posterior_draws(k, seed).predict(inputs)

    def predict_proba(self, inputs, seed=0) -> np.ndarray:
        return self.tree_predictions(inputs).mean(axis=1)


class ForestDraws:
    def __init__(self, forest: RandomForestClassifier, index: np.ndarray):
        self.forest = forest
        self.index = index
        self.num_samples = int(index.size)

    def predict(self, inputs) -> np.ndarray:
        return self.forest.tree_predictions(inputs)[:, self.index]
