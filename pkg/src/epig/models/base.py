"""The interface every stochastic classifier provides to the acquisition code."""

from __future__ import annotations

from typing import Protocol

import numpy as np


class PosteriorDraws(Protocol):
    """A fixed set of K posterior draws, evaluable on any inputs.

    ``predict`` returns ``(n, K, C)``; row ``k`` of every input uses draw ``k``,
    so calls on different input batches stay aligned.
    """

    num_samples: int

    def predict(self, inputs) -> np.ndarray: ...


class StochasticClassifier(Protocol):
    num_classes: int
    default_k: int

    def fit(self, data, seed=None, validation=None) -> "StochasticClassifier": ...

    def posterior_draws(self, k: int | None, seed, anchors=None) -> PosteriorDraws: ...

    def predict_samples(self, inputs, k: int | None = None, seed=0) -> np.ndarray: ...

    def predict_proba(self, inputs, seed=0) -> np.ndarray: ...


def as_inputs(inputs) -> np.ndarray:
    x = np.asarray(inputs, dtype=np.float64)
    if x.ndim == 1:
        x = x[None, :]
    return x
