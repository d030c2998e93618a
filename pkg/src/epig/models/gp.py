"""Gaussian-process binary classifier with a probit likelihood.

The posterior over latent values at the training inputs is a full-rank
Gaussian fitted by variational inference (whitened parameterisation, see
``kernels.gp``).  Predictions at new inputs combine that Gaussian with the
prior conditional of the GP.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import solve_triangular
from scipy.special import ndtr

from ..errors import IllConditionedKernelError, TrainingError
from ..kernels import gp as gp_kernel
from .base import as_inputs


def se_kernel(a: np.ndarray, b: np.ndarray, amplitude: float, lengthscale: float) -> np.ndarray:
    """``amplitude * exp(-|a - b|^2 / (2 lengthscale^2))``."""
    sq = (a * a).sum(1)[:, None] + (b * b).sum(1)[None, :] - 2.0 * a @ b.T
    return amplitude * np.exp(-0.5 * np.maximum(sq, 0.0) / lengthscale**2)


def jittered_cholesky(mat: np.ndarray, amplitude: float) -> np.ndarray:
    """Cholesky factor with diagonal jitter 1e-6·a, escalated x10 up to 1e-2·a."""
    if mat.shape[0] == 0:
        return np.zeros((0, 0))
    eye = np.eye(mat.shape[0])
    jitter = 1e-6 * amplitude
    while jitter <= 1e-2 * amplitude * (1 + 1e-9):
        try:
            return np.linalg.cholesky(mat + jitter * eye)
        except np.linalg.LinAlgError:
            jitter *= 10.0
    raise IllConditionedKernelError(f"Cholesky failed with jitter up to {1e-2 * amplitude:g}")


class GPProbitClassifier:
    num_classes = 2

    def __init__(
        self,
        amplitude: float = 10.0,
        lengthscale: float = 1.0,
        steps: int = 10_000,
        lr: float = 0.005,
        momentum: float = 0.95,
        n_quadrature: int = 32,
        default_k: int = 5000,
    ):
        self.amplitude = float(amplitude)
        self.lengthscale = float(lengthscale)
        self.steps = int(steps)
        self.lr = float(lr)
        self.momentum = float(momentum)
        self.n_quadrature = int(n_quadrature)
        self.default_k = int(default_k)
        self.train_x = np.empty((0, 0))
        self.chol = np.zeros((0, 0))
        self.mean = np.zeros(0)
        self.raw = np.zeros((0, 0))
        self.elbo_initial = np.nan
        self.elbo_final = np.nan

    def kernel(self, a, b) -> np.ndarray:
        return se_kernel(a, b, self.amplitude, self.lengthscale)

    @property
    def scale(self) -> np.ndarray:
        return gp_kernel.scale_factor(self.raw)

    def fit(self, data, seed=None, validation=None) -> "GPProbitClassifier":
        """Maximise the ELBO by momentum gradient ascent; ``seed`` is unused (init is fixed)."""
        if len(data) == 0:
            raise ValueError("cannot fit a GP to an empty training set")
        if data.num_classes != 2:
            raise ValueError("the probit GP classifier is binary")
        x = np.asarray(data.inputs, dtype=np.float64)
        n = x.shape[0]
        self.train_x = x
        self.chol = jittered_cholesky(self.kernel(x, x), self.amplitude)
        signs = 2.0 * data.labels.astype(np.float64) - 1.0
        gh_x, gh_w = gp_kernel.gauss_hermite(self.n_quadrature)
        mean, raw, first, last = gp_kernel.train(
            np.zeros(n), np.zeros((n, n)), self.chol, signs, gh_x, gh_w, self.steps, self.lr, self.momentum
        )
        if not np.isfinite(last):
            raise TrainingError("ELBO became non-finite during GP training")
        self.mean, self.raw = mean, np.tril(raw)
        self.elbo_initial, self.elbo_final = float(first), float(last)
        self._signs = signs
        return self

    def elbo(self) -> float:
        gh_x, gh_w = gp_kernel.gauss_hermite(self.n_quadrature)
        return float(gp_kernel.elbo_grad(self.mean, self.raw, self.chol, self._signs, gh_x, gh_w)[0])

    def latent_moments(self, inputs) -> tuple[np.ndarray, np.ndarray]:
        """Mean and variance of the approximate posterior latent at each input."""
        x = as_inputs(inputs)
        prior_var = np.full(x.shape[0], self.amplitude)
        if self.mean.size == 0:
            return np.zeros(x.shape[0]), prior_var
        a = solve_triangular(self.chol, self.kernel(self.train_x, x), lower=True)
        sa = self.scale.T @ a
        var = prior_var - (a * a).sum(0) + (sa * sa).sum(0)
        return a.T @ self.mean, np.maximum(var, 0.0)

    def predict_proba(self, inputs, seed=0) -> np.ndarray:
        """Exact marginal predictive, ``Phi(m / sqrt(1 + v))``."""
        m, v = self.latent_moments(inputs)
        p1 = ndtr(m / np.sqrt(1.0 + v))
        return np.stack([1.0 - p1, p1], axis=-1)

    def posterior_draws(self, k: int | None, seed, anchors=None) -> "GPDraws":
        return GPDraws(self, self.default_k if k is None else int(k), seed, anchors)

    def predict_samples(self, inputs, k: int | None = None, seed=0) -> np.ndarray:
        """``(n, K, 2)`` class probabilities from K joint latent draws at ``inputs``."""
        x = as_inputs(inputs)
        return self.posterior_draws(k, seed, anchors=x).predict(x)


class GPDraws:
    """K draws of the latent function, exact jointly over the anchors.

    The latent values at the training inputs and at the (deduplicated) anchor
    inputs are sampled jointly.  Any other input gets its conditional mean
    given those values plus ``sqrt(residual variance)`` times one standard
    normal per draw, shared by all non-anchor inputs.  Every pair
    (input, anchor) therefore has the exact joint distribution, which is all
    the acquisition estimators use; correlations between two non-anchor inputs
    are not modelled.  Identical inputs always receive identical rows.
    """

    def __init__(self, model: GPProbitClassifier, k: int, seed, anchors=None):
        if k < 1:
            raise ValueError("need at least one posterior draw")
        self.model = model
        self.num_samples = k
        rng = np.random.default_rng(seed)
        n = model.mean.size
        self.v = model.mean[:, None] + model.scale @ rng.standard_normal((n, k))
        if anchors is None or len(anchors) == 0:
            self.anchors = np.empty((0, model.train_x.shape[1] if n else 0))
        else:
            self.anchors = np.unique(as_inputs(anchors), axis=0)
        m = self.anchors.shape[0]
        if m:
            k_aa = model.kernel(self.anchors, self.anchors)
            if n:
                self.a_anchor = solve_triangular(model.chol, model.kernel(model.train_x, self.anchors), lower=True)
                cond = k_aa - self.a_anchor.T @ self.a_anchor
            else:
                self.a_anchor = np.zeros((0, m))
                cond = k_aa
            self.chol_anchor = jittered_cholesky(0.5 * (cond + cond.T), model.amplitude)
        self.eta = rng.standard_normal((m, k))
        self.eps = rng.standard_normal(k)

    def latents(self, inputs) -> np.ndarray:
        x = as_inputs(inputs)
        model = self.model
        resid = np.full(x.shape[0], model.amplitude)
        mean = np.zeros((x.shape[0], self.num_samples))
        if model.mean.size:
            b_train = solve_triangular(model.chol, model.kernel(model.train_x, x), lower=True)
            mean += b_train.T @ self.v
            resid -= (b_train * b_train).sum(0)
        else:
            b_train = np.zeros((0, x.shape[0]))
        if self.anchors.shape[0]:
            rhs = model.kernel(self.anchors, x) - self.a_anchor.T @ b_train
            b_anchor = solve_triangular(self.chol_anchor, rhs, lower=True)
            mean += b_anchor.T @ self.eta
            resid -= (b_anchor * b_anchor).sum(0)
        return mean + np.sqrt(np.maximum(resid, 0.0))[:, None] * self.eps[None, :]

    def predict_positive(self, inputs) -> np.ndarray:
        """``(n, K)`` probabilities of class 1."""
        return ndtr(self.latents(inputs))

    def predict(self, inputs) -> np.ndarray:
        p1 = self.predict_positive(inputs)
        return np.stack([1.0 - p1, p1], axis=-1)
