"""Where target inputs come from: an exact sample set or sampler, the pool
itself, or the pool resampled so its class mix matches a desired one."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .acquisition import TargetMode
from .errors import UnsupportedClassError
from .prob_core import EPS, check_prob_vector, check_samples


def compute_weights(pool_probs, target_class_probs) -> np.ndarray:
    """Importance weights over the pool that shift its class marginal.

    ``w(x) = sum_c p_targ(c) p(c|x) / mean_pool p(c|.)``; the weights average
    exactly one over the pool.
    """
    probs = np.asarray(pool_probs, dtype=np.float64)
    if probs.ndim != 2 or probs.shape[0] == 0:
        raise ValueError("pool predictions must be a non-empty (N, C) array")
    check_samples(probs, "pool predictions")
    p_targ = check_prob_vector(target_class_probs, "target class distribution")
    if p_targ.size != probs.shape[1]:
        raise ValueError(f"target class distribution has {p_targ.size} classes, predictions have {probs.shape[1]}")
    pool_marginal = probs.mean(axis=0)
    missing = np.flatnonzero((pool_marginal < EPS) & (p_targ > 0))
    if missing.size:
        raise UnsupportedClassError(f"classes {missing.tolist()} have target mass but (near) zero pool probability")
    used = p_targ > 0
    return probs[:, used] @ (p_targ[used] / pool_marginal[used])


InputSampler = Callable[[int, np.random.Generator], np.ndarray]


@dataclass
class TargetSampler:
    """Draws target inputs.

    ``source`` is either an ``(N, D)`` array, sampled uniformly with
    replacement (or by ``weights`` in class-reweighted mode), or, in
    exact-target mode only, a callable ``(n, rng) -> (n, D)`` that samples
    the target input distribution directly.
    """

    mode: TargetMode
    source: np.ndarray | InputSampler
    target_class_probs: np.ndarray | None = None
    weights: np.ndarray | None = None

    def __post_init__(self):
        self.mode = TargetMode(self.mode)
        if callable(self.source):
            if self.mode is not TargetMode.EXACT:
                raise ValueError("only exact-target mode accepts a sampling function as source")
        else:
            self.source = np.asarray(self.source, dtype=np.float64)
            if self.source.ndim == 1:
                self.source = self.source[:, None]
            if self.source.shape[0] == 0:
                raise ValueError("target source is empty")
        if self.mode is TargetMode.REWEIGHTED:
            if self.target_class_probs is None:
                raise ValueError("class-reweighted mode needs a target class distribution")
            if self.weights is None:
                raise ValueError("class-reweighted mode needs weights from a fitted model (see with_model)")
            self.weights = np.asarray(self.weights, dtype=np.float64)
            if self.weights.shape != (self.source.shape[0],) or np.any(self.weights < 0):
                raise ValueError("weights must be one non-negative number per source input")

    @classmethod
    def with_model(cls, pool_inputs, target_class_probs, model, seed=0) -> "TargetSampler":
        """Class-reweighted sampler using ``model``'s current predictions on the pool."""
        weights = compute_weights(model.predict_proba(pool_inputs, seed), target_class_probs)
        return cls(TargetMode.REWEIGHTED, pool_inputs, np.asarray(target_class_probs, dtype=np.float64), weights)

    def sample_indices(self, m: int, seed) -> np.ndarray:
        if callable(self.source):
            raise TypeError("a sampling-function source has no indices")
        if m < 1:
            raise ValueError("need at least one target sample")
        rng = np.random.default_rng(seed)
        n = self.source.shape[0]
        if self.mode is TargetMode.REWEIGHTED:
            return rng.choice(n, size=m, p=self.weights / self.weights.sum())
        return rng.integers(0, n, size=m)


def sample_targets(sampler: TargetSampler, m: int, seed) -> np.ndarray:
    """``(m, D)`` target inputs."""
    if callable(sampler.source):
        if m < 1:
            raise ValueError("need at least one target sample")
        return np.asarray(sampler.source(m, np.random.default_rng(seed)), dtype=np.float64)
    return sampler.source[sampler.sample_indices(m, seed)]
