"""Acquisition functions: random, predictive entropy, BALD and EPIG.

All information quantities are in nats.  A prediction tensor has shape
``(K, C)``; its rows are the predictive distributions under K posterior draws
(optionally weighted, for exact finite-hypothesis models).  Candidate and
target tensors scored together must share those draws row for row.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .errors import AlignmentError
from .kernels import scoring
from .prob_core import EPS, check_samples, entropy, joint_from_samples, kl_divergence, marginal_from_samples


class Method(str, enum.Enum):
    RANDOM = "random"
    ENTROPY = "entropy"
    BALD = "bald"
    EPIG = "epig"
    EPIG_MC = "epig-mc"

    @property
    def needs_targets(self) -> bool:
        return self in (Method.EPIG, Method.EPIG_MC)


class TargetMode(str, enum.Enum):
    EXACT = "exact-target"
    POOL = "pool-proxy"
    REWEIGHTED = "class-reweighted"


@dataclass(frozen=True)
class AcquisitionScore:
    candidate_index: int
    score: float
    estimator_id: Method


@dataclass
class TargetBatch:
    """Predictions at M sampled target inputs, shape ``(M, K, C)``."""

    tensors: np.ndarray
    source_mode: TargetMode = TargetMode.EXACT

    def __post_init__(self):
        t = np.asarray(self.tensors, dtype=np.float64)
        if t.ndim == 2:
            t = t[None]
        if t.ndim != 3 or t.shape[0] < 1:
            raise ValueError(f"target tensors must have shape (M, K, C), got {t.shape}")
        self.tensors = t
        self.source_mode = TargetMode(self.source_mode)

    def __len__(self) -> int:
        return self.tensors.shape[0]

    @property
    def num_samples(self) -> int:
        return self.tensors.shape[1]


class McEstimate(NamedTuple):
    value: float
    stderr: float


def _targets_array(targets) -> np.ndarray:
    if isinstance(targets, TargetBatch):
        return targets.tensors
    t = np.asarray(targets, dtype=np.float64)
    return t[None] if t.ndim == 2 else t


# ------------------------------------------------------------ single candidate


def predictive_entropy(t, weights=None) -> float:
    return entropy(marginal_from_samples(check_samples(t), weights))


def bald_categorical(t, weights=None) -> float:
    """Entropy of the mean prediction minus the mean entropy of the predictions."""
    t = check_samples(t)
    if weights is None:
        cond = float(np.mean(entropy(t)))
    else:
        cond = float(np.asarray(weights) @ entropy(t))
    return max(entropy(marginal_from_samples(t, weights)) - cond, 0.0)


def epig_categorical(t_x, targets, weights=None) -> float:
    """Mean over targets of ``KL(p(y, y*) || p(y) p(y*))`` from shared draws."""
    t_x = check_samples(t_x)
    tensors = _targets_array(targets)
    if tensors.shape[1] != t_x.shape[0]:
        raise AlignmentError(f"candidate has K={t_x.shape[0]} draws, targets have K={tensors.shape[1]}")
    p_x = marginal_from_samples(t_x, weights)
    total = 0.0
    for t_star in tensors:
        joint = joint_from_samples(t_x, t_star, weights)
        total += kl_divergence(joint, p_x, marginal_from_samples(t_star, weights))
    return max(total / tensors.shape[0], 0.0)


def _inner_weights(weights, k):
    return np.full(k, 1.0 / k) if weights is None else np.asarray(weights, dtype=np.float64)


def _sample_rows(rng, probs: np.ndarray) -> np.ndarray:
    """One categorical draw per row of ``probs`` by inverse CDF."""
    cdf = np.cumsum(probs, axis=-1)
    u = rng.random(probs.shape[:-1])[..., None] * cdf[..., -1:]
    return np.minimum((u > cdf).sum(axis=-1), probs.shape[-1] - 1)


def bald_nested_mc(t, n_outer: int, seed, weights=None) -> McEstimate:
    """Nested Monte Carlo BALD for a model whose parameter draws are the rows of ``t``.

    Each outer sample draws a row ``theta_j`` (by ``weights``) and a label
    ``y_j ~ p(y | theta_j)``; the inner average runs over all rows.
    """
    t = check_samples(t)
    w = _inner_weights(weights, t.shape[0])
    rng = np.random.default_rng(seed)
    theta = rng.choice(t.shape[0], size=n_outer, p=w)
    y = _sample_rows(rng, t[theta])
    marginal = w @ t
    terms = -np.log(np.maximum(marginal[y], EPS)) + np.log(np.maximum(t[theta, y], EPS))
    return McEstimate(float(terms.mean()), float(terms.std(ddof=1) / np.sqrt(n_outer)) if n_outer > 1 else np.nan)


def epig_nested_mc(t_x, targets, n_outer: int, seed, weights=None) -> McEstimate:
    """Nested Monte Carlo EPIG.

    Each outer sample picks a target uniformly from ``targets`` (which are
    themselves draws from the target distribution), a row ``theta_j`` and then
    ``y_j``, ``y*_j`` given that single row.
    """
    t_x = check_samples(t_x)
    tensors = _targets_array(targets)
    if tensors.shape[1] != t_x.shape[0]:
        raise AlignmentError(f"candidate has K={t_x.shape[0]} draws, targets have K={tensors.shape[1]}")
    w = _inner_weights(weights, t_x.shape[0])
    rng = np.random.default_rng(seed)
    j = rng.integers(0, tensors.shape[0], size=n_outer)
    theta = rng.choice(t_x.shape[0], size=n_outer, p=w)
    y = _sample_rows(rng, t_x[theta])
    y_star = _sample_rows(rng, tensors[j, theta])
    p_y = t_x[:, y].T  # [n_outer, K]
    p_star = tensors[j, :, y_star]  # [n_outer, K]
    num = (p_y * p_star) @ w
    den = (p_y @ w) * (p_star @ w)
    terms = np.log(np.maximum(num, EPS)) - np.log(np.maximum(den, EPS))
    return McEstimate(float(terms.mean()), float(terms.std(ddof=1) / np.sqrt(n_outer)) if n_outer > 1 else np.nan)


# ------------------------------------------------------------------ pool level


def _epig_mc_batch(P: np.ndarray, Q: np.ndarray, rng) -> np.ndarray:
    """One nested-MC EPIG estimate per candidate, with M outer samples each.

    Outer sample ``j`` uses target ``j``; the parameter draw and the two
    uniforms used to sample labels are shared across candidates.
    """
    n, k, c = P.shape
    m = Q.shape[0]
    theta = rng.integers(0, k, size=m)
    u = rng.random(m)
    u_star = rng.random(m)
    cdf_x = np.cumsum(P[:, theta], axis=-1)  # [n, m, c]
    y = np.minimum((u[None, :, None] * cdf_x[..., -1:] > cdf_x).sum(-1), c - 1)
    cdf_t = np.cumsum(Q[np.arange(m), theta], axis=-1)  # [m, c]
    y_star = np.minimum((u_star[:, None] * cdf_t[:, -1:] > cdf_t).sum(-1), Q.shape[2] - 1)
    p_star = Q[np.arange(m), :, y_star]  # [m, k]
    out = np.empty(n)
    step = max(1, 2_000_000 // max(1, m * k))
    for lo in range(0, n, step):
        hi = min(n, lo + step)
        p_y = np.take_along_axis(P[lo:hi], y[lo:hi, None, :], axis=2)  # [b, k, m]
        p_y = p_y.transpose(0, 2, 1)  # [b, m, k]
        num = (p_y * p_star[None]).mean(-1)
        den = p_y.mean(-1) * p_star.mean(-1)[None]
        out[lo:hi] = (np.log(np.maximum(num, EPS)) - np.log(np.maximum(den, EPS))).mean(-1)
    return out


def pool_scores(P, Q=None, method=Method.BALD, seed=None) -> np.ndarray:
    """Scores for every candidate in ``P`` of shape ``(N, K, C)``.

    ``Q`` holds the target predictions ``(M, K, C)`` for the EPIG methods.
    ``random`` returns a seeded random permutation of ranks.
    """
    method = Method(method)
    P = np.asarray(P, dtype=np.float64)
    if P.ndim != 3 or P.shape[0] == 0:
        raise ValueError("pool predictions must be a non-empty (N, K, C) array")
    if method is Method.RANDOM:
        return np.random.default_rng(seed).permutation(P.shape[0]).astype(np.float64)
    if method is Method.ENTROPY:
        return scoring.entropy_batch(P)
    if method is Method.BALD:
        return scoring.bald_batch(P)
    if Q is None:
        raise ValueError(f"{method.value} needs target predictions")
    Q = _targets_array(Q)
    if Q.shape[1] != P.shape[1]:
        raise AlignmentError(f"candidates have K={P.shape[1]} draws, targets have K={Q.shape[1]}")
    if method is Method.EPIG:
        return scoring.epig_batch(P, Q)
    return _epig_mc_batch(P, Q, np.random.default_rng(seed))


def binary_pool_scores(p1, q1=None, method=Method.BALD) -> np.ndarray:
    """Entropy, BALD or EPIG scores from positive-class probabilities alone.

    ``p1`` is ``(N, K)`` and ``q1`` is ``(M, K)``; equivalent to ``pool_scores``
    on the stacked two-class tensors but much cheaper for large pools.
    """
    method = Method(method)
    if method is Method.ENTROPY:
        return scoring.entropy_binary(p1)
    if method is Method.BALD:
        return scoring.bald_binary(p1)
    if method is Method.EPIG:
        if q1 is None:
            raise ValueError("epig needs target predictions")
        return scoring.epig_binary(p1, q1)
    raise ValueError(f"no binary fast path for {method.value}")


def score_pool(predictions, targets=None, method=Method.BALD, seed=None) -> list[AcquisitionScore]:
    """One ``AcquisitionScore`` per candidate; ``predictions`` is ``(N, K, C)`` or a list of tensors."""
    method = Method(method)
    if len(predictions) == 0:
        raise ValueError("cannot score an empty pool")
    P = np.stack([np.asarray(p, dtype=np.float64) for p in predictions]) if isinstance(predictions, Sequence) else predictions
    values = pool_scores(P, targets, method, seed)
    return [AcquisitionScore(i, float(v), method) for i, v in enumerate(values)]


def select_argmax(scores, seed) -> int:
    """Index of the best score, breaking exact ties uniformly at random."""
    if len(scores) == 0:
        raise ValueError("no scores to select from")
    if isinstance(scores[0], AcquisitionScore):
        values = np.array([s.score for s in scores])
        ids = np.array([s.candidate_index for s in scores])
    else:
        values = np.asarray(scores, dtype=np.float64)
        ids = np.arange(values.size)
    best = np.flatnonzero(values == values.max())
    if best.size == 1:
        return int(ids[best[0]])
    return int(ids[np.random.default_rng(seed).choice(best)])
