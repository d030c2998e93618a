"""ELBO, gradient and momentum gradient ascent for whitened probit-GP VI.

Latent values at the training inputs are ``f = L v`` with ``L`` the Cholesky
factor of the (jittered) kernel matrix and ``v ~ N(mu, S S^T)``.  ``raw`` is
an ``n x n`` array whose strict lower triangle holds the off-diagonal entries
of ``S`` and whose diagonal holds ``log diag(S)``; the upper triangle is
ignored.  The objective is the ELBO divided by ``n``:

    (sum_i E_q[log Phi(s_i f_i)] - KL(N(mu, S S^T) || N(0, I))) / n

with the expectation taken by Gauss-Hermite quadrature, so the gradient
returned is exact for the quadrature-approximated objective.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import log_ndtr

from .._accel import njit, select

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)
_SQRT2 = math.sqrt(2.0)
_SQRT_PI = math.sqrt(math.pi)


def gauss_hermite(n_nodes: int = 32) -> tuple[np.ndarray, np.ndarray]:
    return np.polynomial.hermite.hermgauss(n_nodes)


def scale_factor(raw: np.ndarray) -> np.ndarray:
    s = np.tril(raw, -1)
    s[np.diag_indices_from(s)] = np.exp(np.diag(raw))
    return s


# ---------------------------------------------------------------- numpy path


def _log_phi_and_mills_np(z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    lp = log_ndtr(z)
    mills = np.exp(-0.5 * z * z - _LOG_SQRT_2PI - lp)
    return lp, mills


def elbo_grad_numpy(mu, raw, chol_k, signs, gh_x, gh_w):
    n = mu.shape[0]
    s = scale_factor(raw)
    b = chol_k @ s
    mean = chol_k @ mu
    var = np.sum(b * b, axis=1)
    sd2 = np.sqrt(2.0 * var)
    f = mean[:, None] + sd2[:, None] * gh_x[None, :]
    lp, mills = _log_phi_and_mills_np(signs[:, None] * f)
    w = gh_w / _SQRT_PI
    ell = lp @ w
    g_mean = (signs[:, None] * mills) @ w
    g_var = ((signs[:, None] * mills) * gh_x[None, :]) @ w / sd2
    diag = np.diag(raw)
    kl = 0.5 * (np.sum(s * s) + mu @ mu - n - 2.0 * np.sum(diag))
    value = (np.sum(ell) - kl) / n
    g_mu = chol_k.T @ g_mean - mu
    g_s = 2.0 * chol_k.T @ (g_var[:, None] * b) - s
    g_raw = np.tril(g_s, -1)
    g_raw[np.diag_indices(n)] = np.diag(g_s) * np.exp(diag) + 1.0
    return value, g_mu / n, g_raw / n


def train_numpy(mu, raw, chol_k, signs, gh_x, gh_w, steps, lr, momentum):
    mu = mu.copy()
    raw = raw.copy()
    buf_mu = np.zeros_like(mu)
    buf_raw = np.zeros_like(raw)
    first = elbo_grad_numpy(mu, raw, chol_k, signs, gh_x, gh_w)[0]
    for _ in range(steps):
        _, g_mu, g_raw = elbo_grad_numpy(mu, raw, chol_k, signs, gh_x, gh_w)
        if not np.isfinite(g_mu.sum()):
            return mu, raw, first, np.nan
        buf_mu = momentum * buf_mu + g_mu
        buf_raw = momentum * buf_raw + g_raw
        mu += lr * buf_mu
        raw += lr * buf_raw
    last = elbo_grad_numpy(mu, raw, chol_k, signs, gh_x, gh_w)[0]
    return mu, raw, first, last


# ---------------------------------------------------------------- numba path


@njit
def _log_phi_s(z):
    if z > 0.0:
        return math.log1p(-0.5 * math.erfc(z / _SQRT2))
    if z > -30.0:
        return math.log(0.5 * math.erfc(-z / _SQRT2))
    z2 = z * z
    return -0.5 * z2 - math.log(-z) - _LOG_SQRT_2PI + math.log1p(-1.0 / z2 + 3.0 / (z2 * z2) - 15.0 / (z2 * z2 * z2))


@njit
def _mills_s(z):
    # phi(z) / Phi(z), the derivative of log Phi
    if z > -30.0:
        return math.exp(-0.5 * z * z - _LOG_SQRT_2PI) / (0.5 * math.erfc(-z / _SQRT2))
    z2 = z * z
    return -z / (1.0 - 1.0 / z2 + 3.0 / (z2 * z2) - 15.0 / (z2 * z2 * z2))


@njit
def _elbo_grad_core(mu, raw, chol_k, signs, gh_x, gh_w, with_value):
    n = mu.shape[0]
    q = gh_x.shape[0]
    s = np.zeros((n, n))
    for i in range(n):
        for j in range(i):
            s[i, j] = raw[i, j]
        s[i, i] = math.exp(raw[i, i])
    b = np.dot(chol_k, s)
    mean = np.dot(chol_k, mu)
    ell = 0.0
    g_mean = np.empty(n)
    for i in range(n):
        var = 0.0
        for j in range(n):
            var += b[i, j] * b[i, j]
        sd2 = math.sqrt(2.0 * var)
        gm = 0.0
        gv = 0.0
        for t in range(q):
            z = signs[i] * (mean[i] + sd2 * gh_x[t])
            w = gh_w[t] / _SQRT_PI
            if with_value:
                ell += w * _log_phi_s(z)
            m = w * signs[i] * _mills_s(z)
            gm += m
            gv += m * gh_x[t]
        g_mean[i] = gm
        gv /= sd2
        # fold d(ell)/d(var_i) into row i of b for the scale-factor gradient
        for j in range(n):
            b[i, j] *= gv
    value = np.nan
    if with_value:
        kl = -float(n)
        for i in range(n):
            kl += mu[i] * mu[i] - 2.0 * raw[i, i]
            for j in range(i + 1):
                kl += s[i, j] * s[i, j]
        value = (ell - 0.5 * kl) / n
    g_mu = (np.dot(chol_k.T, g_mean) - mu) / n
    g_s = np.dot(chol_k.T, b)
    g_raw = np.zeros((n, n))
    for i in range(n):
        for j in range(i):
            g_raw[i, j] = (2.0 * g_s[i, j] - s[i, j]) / n
        g_raw[i, i] = ((2.0 * g_s[i, i] - s[i, i]) * s[i, i] + 1.0) / n
    return value, g_mu, g_raw


@njit
def elbo_grad_numba(mu, raw, chol_k, signs, gh_x, gh_w):
    return _elbo_grad_core(mu, raw, chol_k, signs, gh_x, gh_w, True)


@njit
def train_numba(mu, raw, chol_k, signs, gh_x, gh_w, steps, lr, momentum):
    mu = mu.copy()
    raw = raw.copy()
    buf_mu = np.zeros_like(mu)
    buf_raw = np.zeros_like(raw)
    first = _elbo_grad_core(mu, raw, chol_k, signs, gh_x, gh_w, True)[0]
    for _ in range(steps):
        _, g_mu, g_raw = _elbo_grad_core(mu, raw, chol_k, signs, gh_x, gh_w, False)
        if not np.isfinite(g_mu.sum()):
            return mu, raw, first, np.nan
        buf_mu = momentum * buf_mu + g_mu
        buf_raw = momentum * buf_raw + g_raw
        mu += lr * buf_mu
        raw += lr * buf_raw
    last = _elbo_grad_core(mu, raw, chol_k, signs, gh_x, gh_w, True)[0]
    return mu, raw, first, last


elbo_grad = select(elbo_grad_numba, elbo_grad_numpy)
train = select(train_numba, train_numpy)
