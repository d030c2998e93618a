"""Probability primitives over categorical distributions (natural logs).

Conventions used throughout the package:

* a probability vector is a 1-D array of ``C`` non-negative entries summing to 1;
* a joint matrix is ``C x C`` with rows indexing ``y`` and columns ``y*``;
* a prediction tensor is ``K x C``: row ``i`` is ``p(y | x, theta_i)``.

Logarithms clamp their argument at ``EPS`` so that ``0 log 0`` evaluates to 0.
"""

from __future__ import annotations

import numpy as np

from .errors import AlignmentError, DegenerateSupportError, InvalidDistributionError

EPS = 1e-12
SUM_TOL = 1e-9


def _as_float(a) -> np.ndarray:
    return np.asarray(a, dtype=np.float64)


def check_prob_vector(p, name: str = "p") -> np.ndarray:
    p = _as_float(p)
    if p.ndim != 1 or p.size == 0:
        raise InvalidDistributionError(f"{name} must be a non-empty 1-D array, got shape {p.shape}")
    if np.any(~np.isfinite(p)) or np.any(p < 0):
        raise InvalidDistributionError(f"{name} has negative or non-finite entries")
    if abs(p.sum() - 1.0) > SUM_TOL:
        raise InvalidDistributionError(f"{name} sums to {p.sum()!r}, not 1")
    return p


def check_joint(p, name: str = "joint") -> np.ndarray:
    p = _as_float(p)
    if p.ndim != 2:
        raise InvalidDistributionError(f"{name} must be 2-D, got shape {p.shape}")
    if np.any(~np.isfinite(p)) or np.any(p < 0):
        raise InvalidDistributionError(f"{name} has negative or non-finite entries")
    if abs(p.sum() - 1.0) > SUM_TOL:
        raise InvalidDistributionError(f"{name} sums to {p.sum()!r}, not 1")
    return p


def check_samples(t, name: str = "samples") -> np.ndarray:
    """Validate a ``K x C`` prediction tensor; every row must be a distribution."""
    t = _as_float(t)
    if t.ndim != 2 or t.shape[0] < 1 or t.shape[1] < 1:
        raise InvalidDistributionError(f"{name} must have shape (K, C) with K >= 1, got {t.shape}")
    if np.any(~np.isfinite(t)) or np.any(t < 0):
        raise InvalidDistributionError(f"{name} has negative or non-finite entries")
    bad = np.abs(t.sum(axis=1) - 1.0) > SUM_TOL
    if np.any(bad):
        raise InvalidDistributionError(f"{name} row {int(np.argmax(bad))} does not sum to 1")
    return t


def _check_weights(weights, k: int) -> np.ndarray | None:
    if weights is None:
        return None
    w = check_prob_vector(weights, "weights")
    if w.size != k:
        raise AlignmentError(f"got {w.size} weights for {k} posterior samples")
    return w


def entropy(p, axis: int = -1) -> np.ndarray | float:
    """Shannon entropy in nats, ``-sum p log p`` with ``0 log 0 = 0``.

    Works over the last axis by default, so a ``K x C`` tensor gives ``K``
    row entropies.
    """
    p = _as_float(p)
    out = -np.sum(p * np.log(np.maximum(p, EPS)), axis=axis)
    return float(out) if np.ndim(out) == 0 else out


def marginal_from_samples(t, weights=None) -> np.ndarray:
    """Monte Carlo marginal predictive: the (weighted) mean of the rows."""
    t = _as_float(t)
    if t.ndim != 2 or t.shape[0] < 1:
        raise InvalidDistributionError(f"samples must have shape (K, C) with K >= 1, got {t.shape}")
    w = _check_weights(weights, t.shape[0])
    if w is None:
        return t.mean(axis=0)
    return w @ t


def joint_from_samples(t_x, t_xstar, weights=None) -> np.ndarray:
    """Joint predictive of two inputs under shared posterior draws.

    ``p(y, y*) = mean_i p(y | x, theta_i) p(y* | x*, theta_i)``; the rows of
    both tensors must come from the same draws, in the same order.
    """
    t_x = _as_float(t_x)
    t_xstar = _as_float(t_xstar)
    if t_x.ndim != 2 or t_xstar.ndim != 2:
        raise InvalidDistributionError("joint_from_samples expects two (K, C) tensors")
    if t_x.shape[0] != t_xstar.shape[0]:
        raise AlignmentError(f"tensors have K={t_x.shape[0]} and K={t_xstar.shape[0]} posterior samples")
    w = _check_weights(weights, t_x.shape[0])
    if w is None:
        return t_x.T @ t_xstar / t_x.shape[0]
    return (t_x * w[:, None]).T @ t_xstar


def kl_divergence(p_joint, q_y, q_ystar) -> float:
    """``KL(p(y, y*) || q(y) q(y*))`` in nats.

    With ``q_y`` and ``q_ystar`` equal to the marginals of ``p_joint`` this is
    the mutual information between ``y`` and ``y*``.
    """
    p = _as_float(p_joint)
    q_y, q_ystar = _as_float(q_y), _as_float(q_ystar)
    if p.shape != (q_y.size, q_ystar.size):
        raise AlignmentError(f"joint shape {p.shape} does not match marginals {(q_y.size, q_ystar.size)}")
    # entries with at most SUM_TOL of mass cannot move the result beyond float
    # noise, so only material mass on a (near) zero product counts as degenerate
    if np.any((p > SUM_TOL) & (np.outer(q_y, q_ystar) < EPS)):
        raise DegenerateSupportError("joint has mass where the product of marginals is below the log floor")
    log_q = np.log(np.maximum(q_y, EPS))[:, None] + np.log(np.maximum(q_ystar, EPS))[None, :]
    terms = p * (np.log(np.maximum(p, EPS)) - log_q)
    return float(np.sum(terms))


def mutual_information(p_joint) -> float:
    """Mutual information of a joint matrix, via its own marginals."""
    p = _as_float(p_joint)
    return kl_divergence(p, p.sum(axis=1), p.sum(axis=0))
