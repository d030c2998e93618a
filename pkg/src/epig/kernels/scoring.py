"""Batched BALD / EPIG / predictive-entropy reductions over a whole pool.

Inputs are ``P`` with shape ``(N, K, C)`` (candidate predictions) and, for
EPIG, ``Q`` with shape ``(M, K, C)`` (target predictions under the same K
posterior draws).  Both implementations use the entropy decomposition

    EPIG_j = H[y] + H[y*_j] - H[y, y*_j]

which is algebraically equal to the KL form but needs a single pass over the
joint.
"""

from __future__ import annotations

import math

import numpy as np

from .._accel import njit, select
from ..errors import AlignmentError

EPS = 1e-12
# bounds the (chunk, M, C, C) joint array of the numpy path
_JOINT_BUDGET = 4_000_000


def _xlogx(a: np.ndarray) -> np.ndarray:
    return a * np.log(np.maximum(a, EPS))


def bald_batch_numpy(P: np.ndarray) -> np.ndarray:
    marg = P.mean(axis=1)
    h_marg = -_xlogx(marg).sum(axis=-1)
    h_cond = -_xlogx(P).sum(axis=-1).mean(axis=1)
    return np.maximum(h_marg - h_cond, 0.0)


def entropy_batch_numpy(P: np.ndarray) -> np.ndarray:
    return -_xlogx(P.mean(axis=1)).sum(axis=-1)


def epig_batch_numpy(P: np.ndarray, Q: np.ndarray) -> np.ndarray:
    n, k, c = P.shape
    m, _, d = Q.shape
    h_x = -_xlogx(P.mean(axis=1)).sum(axis=-1)
    h_t = float(np.mean(-_xlogx(Q.mean(axis=1)).sum(axis=-1)))
    q_flat = Q.transpose(1, 0, 2).reshape(k, m * d)
    out = np.empty(n)
    step = max(1, _JOINT_BUDGET // max(1, m * c * d))
    for lo in range(0, n, step):
        hi = min(n, lo + step)
        p_flat = P[lo:hi].transpose(0, 2, 1).reshape((hi - lo) * c, k)
        joint = (p_flat @ q_flat) / k  # [(b*c), (m*d)]
        h_joint = -_xlogx(joint).reshape(hi - lo, c, m, d).sum(axis=(1, 3)).mean(axis=1)
        out[lo:hi] = h_x[lo:hi] + h_t - h_joint
    return np.maximum(out, 0.0)


@njit
def _xlogx_s(a):
    return a * math.log(a if a > EPS else EPS)


@njit
def bald_batch_numba(P):
    n, k, c = P.shape
    out = np.empty(n)
    marg = np.empty(c)
    for i in range(n):
        marg[:] = 0.0
        h_cond = 0.0
        for s in range(k):
            for j in range(c):
                v = P[i, s, j]
                marg[j] += v
                h_cond -= _xlogx_s(v)
        h_marg = 0.0
        for j in range(c):
            h_marg -= _xlogx_s(marg[j] / k)
        val = h_marg - h_cond / k
        out[i] = val if val > 0.0 else 0.0
    return out


@njit
def entropy_batch_numba(P):
    n, k, c = P.shape
    out = np.empty(n)
    for i in range(n):
        h = 0.0
        for j in range(c):
            acc = 0.0
            for s in range(k):
                acc += P[i, s, j]
            h -= _xlogx_s(acc / k)
        out[i] = h
    return out


@njit
def epig_batch_numba(P, Q):
    n, k, c = P.shape
    m, _, d = Q.shape
    q_flat = np.ascontiguousarray(Q.transpose(1, 0, 2)).reshape(k, m * d)
    h_t = 0.0
    for t in range(m):
        for b in range(d):
            acc = 0.0
            for s in range(k):
                acc += Q[t, s, b]
            h_t -= _xlogx_s(acc / k)
    h_t /= m
    out = np.empty(n)
    for i in range(n):
        p_t = np.ascontiguousarray(P[i].T)  # [c, k]
        joint = np.dot(p_t, q_flat)  # [c, m*d]
        h_x = 0.0
        for a in range(c):
            acc = 0.0
            for s in range(k):
                acc += p_t[a, s]
            h_x -= _xlogx_s(acc / k)
        h_joint = 0.0
        for a in range(c):
            for b in range(m * d):
                h_joint -= _xlogx_s(joint[a, b] / k)
        val = h_x + h_t - h_joint / m
        out[i] = val if val > 0.0 else 0.0
    return out


# ---------------------------------------------------------------- binary case
# With two classes a prediction is fully described by p(y=1), so the joint of
# (y, y*) follows from the single moment mean_k p_k q_k, one matrix product.


def _h2(p: np.ndarray) -> np.ndarray:
    return -(_xlogx(p) + _xlogx(1.0 - p))


def bald_binary_numpy(p1: np.ndarray) -> np.ndarray:
    return np.maximum(_h2(p1.mean(axis=1)) - _h2(p1).mean(axis=1), 0.0)


@njit
def bald_binary_numba(p1):
    n, k = p1.shape
    out = np.empty(n)
    for i in range(n):
        mean = 0.0
        cond = 0.0
        for s in range(k):
            p = p1[i, s]
            mean += p
            cond -= _xlogx_s(p) + _xlogx_s(1.0 - p)
        mean /= k
        val = -(_xlogx_s(mean) + _xlogx_s(1.0 - mean)) - cond / k
        out[i] = val if val > 0.0 else 0.0
    return out


def epig_binary(p1, q1) -> np.ndarray:
    """EPIG from positive-class probabilities ``p1 (N, K)`` and ``q1 (M, K)``.

    The cost is dominated by one BLAS matrix product, so there is no separate
    compiled variant.
    """
    p1 = np.ascontiguousarray(p1, dtype=np.float64)
    q1 = np.ascontiguousarray(q1, dtype=np.float64)
    if p1.shape[1] != q1.shape[1]:
        raise AlignmentError(f"candidates have K={p1.shape[1]}, targets have K={q1.shape[1]}")
    n, k = p1.shape
    m = q1.shape[0]
    pm = p1.mean(axis=1)
    qm = q1.mean(axis=1)
    h_t = float(_h2(qm).mean())
    out = np.empty(n)
    step = max(1, _JOINT_BUDGET // max(1, 4 * m))
    for lo in range(0, n, step):
        hi = min(n, lo + step)
        both = (p1[lo:hi] @ q1.T) / k
        a = pm[lo:hi, None]
        h_joint = -(_xlogx(both) + _xlogx(a - both) + _xlogx(qm[None, :] - both) + _xlogx(1.0 - a - qm[None, :] + both))
        out[lo:hi] = _h2(pm[lo:hi]) + h_t - h_joint.mean(axis=1)
    return np.maximum(out, 0.0)


_bald2 = select(bald_binary_numba, bald_binary_numpy)


def bald_binary(p1) -> np.ndarray:
    """BALD from positive-class probabilities of shape ``(N, K)``."""
    return _bald2(np.ascontiguousarray(p1, dtype=np.float64))


def entropy_binary(p1) -> np.ndarray:
    return _h2(np.asarray(p1, dtype=np.float64).mean(axis=1))


_bald = select(bald_batch_numba, bald_batch_numpy)
_entropy = select(entropy_batch_numba, entropy_batch_numpy)
_epig = select(epig_batch_numba, epig_batch_numpy)


def bald_batch(P) -> np.ndarray:
    """BALD score for every candidate in ``P`` of shape ``(N, K, C)``."""
    return _bald(np.ascontiguousarray(P, dtype=np.float64))


def entropy_batch(P) -> np.ndarray:
    """Entropy of the marginal predictive for every candidate."""
    return _entropy(np.ascontiguousarray(P, dtype=np.float64))


def epig_batch(P, Q) -> np.ndarray:
    """Mean over targets of the mutual information between ``y`` and ``y*``."""
    P = np.ascontiguousarray(P, dtype=np.float64)
    Q = np.ascontiguousarray(Q, dtype=np.float64)
    if P.shape[1] != Q.shape[1]:
        raise AlignmentError(f"candidates have K={P.shape[1]}, targets have K={Q.shape[1]}")
    return _epig(P, Q)
