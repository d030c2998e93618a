"""Exact Bayesian classifier over a finite set of hypotheses.

Inputs are integer indices into a hypothesis table ``table[h, x, c] =
p(y=c | x, h)``.  Because the posterior is computed exactly, this model is
the reference against which the sample-based estimators are checked.
"""

from __future__ import annotations

import numpy as np

from ..errors import ImpossibleObservationError
from ..prob_core import check_prob_vector


def _index(x) -> np.ndarray:
    return np.asarray(x, dtype=np.int64).reshape(-1)


class DiscreteBayesClassifier:
    def __init__(self, table, weights=None, default_k: int = 1000):
        self.table = np.asarray(table, dtype=np.float64)
        if self.table.ndim != 3:
            raise ValueError("hypothesis table must have shape (H, X, C)")
        if np.any(self.table < 0) or not np.allclose(self.table.sum(-1), 1.0, atol=1e-9):
            raise ValueError("every table row must be a probability vector")
        h = self.table.shape[0]
        self.weights = np.full(h, 1.0 / h) if weights is None else check_prob_vector(weights, "weights").copy()
        self.prior = self.weights.copy()
        self.default_k = int(default_k)

    @property
    def num_classes(self) -> int:
        return self.table.shape[2]

    @property
    def num_hypotheses(self) -> int:
        return self.table.shape[0]

    def update(self, x: int, y: int) -> "DiscreteBayesClassifier":
        """Exact Bayes update on one observation; returns a new classifier."""
        w = self.weights * self.table[:, int(x), int(y)]
        total = w.sum()
        if not total > 0:
            raise ImpossibleObservationError(f"observation (x={x}, y={y}) has zero probability under every hypothesis")
        out = DiscreteBayesClassifier(self.table, w / total, self.default_k)
        out.prior = self.prior
        return out

    def fit(self, data, seed=None, validation=None) -> "DiscreteBayesClassifier":
        """Posterior of the prior this model was built with, given ``data``."""
        model = DiscreteBayesClassifier(self.table, self.prior, self.default_k)
        for x, y in zip(_index(data.inputs), data.labels):
            model = model.update(x, y)
        self.weights = model.weights
        return self

    def predict(self, x: int) -> np.ndarray:
        return self.weights @ self.table[:, int(x)]

    def predict_proba(self, inputs, seed=0) -> np.ndarray:
        return np.einsum("h,hnc->nc", self.weights, self.table[:, _index(inputs)])

    def exact_samples(self, x: int) -> tuple[np.ndarray, np.ndarray]:
        """All hypothesis rows at ``x`` with their posterior weights."""
        return self.table[:, int(x)], self.weights.copy()

    def posterior_draws(self, k: int | None, seed, anchors=None) -> "DiscreteDraws":
        k = self.default_k if k is None else int(k)
        rng = np.random.default_rng(seed)
        return DiscreteDraws(self, rng.choice(self.num_hypotheses, size=k, p=self.weights))

    def predict_samples(self, inputs, k: int | None = None, seed=0) -> np.ndarray:
        return self.posterior_draws(k, seed).predict(inputs)


class DiscreteDraws:
    def __init__(self, model: DiscreteBayesClassifier, hypotheses: np.ndarray):
        self.model = model
        self.hypotheses = hypotheses
        self.num_samples = int(hypotheses.size)

    def predict(self, inputs) -> np.ndarray:
        return self.model.table[self.hypotheses][:, _index(inputs)].transpose(1, 0, 2)


def discrete_update(model: DiscreteBayesClassifier, x: int, y: int) -> DiscreteBayesClassifier:
    return model.update(x, y)


def discrete_predict(model: DiscreteBayesClassifier, x: int) -> np.ndarray:
    return model.predict(x)


def discrete_predict_samples(model: DiscreteBayesClassifier, inputs, k: int, seed) -> np.ndarray:
    return model.predict_samples(inputs, k, seed)


def random_discrete_model(num_hypotheses: int, num_inputs: int, num_classes: int, seed, concentration: float = 1.0):
    """Hypothesis table with Dirichlet rows and Dirichlet prior weights."""
    rng = np.random.default_rng(seed)
    table = rng.dirichlet(np.full(num_classes, concentration), size=(num_hypotheses, num_inputs))
    weights = rng.dirichlet(np.ones(num_hypotheses))
    return DiscreteBayesClassifier(table, weights)
