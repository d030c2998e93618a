"""Closed-form BALD/EPIG for Gaussian predictions and the growing-design example
where BALD diverges while information about a fixed target vanishes."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidDistributionError

SINGULAR_REL_TOL = 1e-15
MAX_DESIGN_SIZE = 200


def bald_gaussian(marginal_var: float, conditional_vars, weights=None) -> float:
    """Half the gap between the log marginal variance and the mean log conditional variance."""
    cond = np.atleast_1d(np.asarray(conditional_vars, dtype=np.float64))
    if marginal_var <= 0 or np.any(cond <= 0):
        raise InvalidDistributionError("variances must be positive")
    w = np.full(cond.size, 1.0 / cond.size) if weights is None else np.asarray(weights, dtype=np.float64)
    if w.shape != cond.shape or np.any(w < 0) or abs(w.sum() - 1.0) > 1e-9:
        raise InvalidDistributionError("weights must be a probability vector matching the conditional variances")
    return 0.5 * (math.log(marginal_var) - float(w @ np.log(cond)))


def epig_gaussian(var_y: float, var_ystar: float, cov_y_ystar: float) -> float:
    """Mutual information of a bivariate Gaussian; ``inf`` when numerically singular."""
    if var_y <= 0 or var_ystar <= 0:
        raise InvalidDistributionError("variances must be positive")
    prod = var_y * var_ystar
    rel_det = (prod - cov_y_ystar**2) / prod
    if rel_det < -1e-12:
        raise InvalidDistributionError("covariance exceeds the Cauchy-Schwarz bound")
    if rel_det < SINGULAR_REL_TOL:
        return math.inf
    return -0.5 * math.log1p(-(cov_y_ystar**2) / prod)


@dataclass
class GaussianJoint:
    mean: np.ndarray
    cov: np.ndarray
    noise_var: float = 1.0

    def __post_init__(self):
        self.mean = np.asarray(self.mean, dtype=np.float64).reshape(-1)
        self.cov = np.asarray(self.cov, dtype=np.float64)
        n = self.mean.size
        if self.cov.shape != (n, n):
            raise InvalidDistributionError(f"covariance must be {n}x{n}")
        if np.max(np.abs(self.cov - self.cov.T), initial=0.0) > 1e-12:
            raise InvalidDistributionError("covariance is not symmetric")
        if n and np.linalg.eigvalsh(self.cov).min() < -1e-9:
            raise InvalidDistributionError("covariance is not positive semi-definite")

    @property
    def observed_cov(self) -> np.ndarray:
        return self.cov + self.noise_var * np.eye(self.mean.size)

    def pair_information(self, i: int, j: int) -> float:
        """Mutual information between noisy observations at outputs ``i`` and ``j``."""
        c = self.observed_cov
        return epig_gaussian(c[i, i], c[j, j], c[i, j])


def gershgorin_bound(matrix) -> tuple[float, float]:
    a = np.asarray(matrix, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("matrix must be square")
    diag = np.diag(a)
    radius = np.abs(a).sum(axis=1) - np.abs(diag)
    return float((diag - radius).min()), float((diag + radius).max())


def _half_logdet(mat: np.ndarray) -> float:
    chol = np.linalg.cholesky(0.5 * (mat + mat.T))
    return float(np.log(np.diag(chol)).sum())


@dataclass(frozen=True)
class PathologyDesign:
    """Observations at M, 2M, ..., M^2 with unit noise and kernel exp(-(x - x')^2)."""

    m: int
    x_star: float = 0.5

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("design size must be at least 1")

    @property
    def locations(self) -> np.ndarray:
        return self.m * np.arange(1, self.m + 1, dtype=np.float64)

    def omega(self) -> np.ndarray:
        """Covariance of the noisy observations: 2 on the diagonal."""
        x = self.locations
        return np.exp(-((x[:, None] - x[None, :]) ** 2)) + np.eye(self.m)

    def cross_cov(self) -> np.ndarray:
        return np.exp(-((self.x_star - self.locations) ** 2))


def pathology_bald(design: PathologyDesign) -> float:
    """Information about the function from all M observations: half log det of their covariance."""
    return _half_logdet(design.omega())


def pathology_eig_target(design: PathologyDesign) -> float:
    """Information the M observations carry about the latent value at ``x_star``.

    Equals half the log-ratio of the determinant of the independence-structured
    block matrix to that of the full joint; computed through the Schur
    complement ``1 - k' Omega^-1 k`` to stay accurate when it is tiny.
    """
    omega = design.omega()
    k = design.cross_cov()
    chol = np.linalg.cholesky(omega)
    z = np.linalg.solve(chol, k)
    explained = float(z @ z)
    if explained >= 1.0:
        return math.inf
    return -0.5 * math.log1p(-explained)


def pathology_sweep(m_max: int, x_star: float = 0.5) -> list[dict]:
    """Rows of ``M, bald, eig_target, gershgorin_lo, gershgorin_hi`` for M = 1..m_max (capped at 200)."""
    if m_max < 1:
        raise ValueError("m_max must be at least 1")
    rows = []
    for m in range(1, min(int(m_max), MAX_DESIGN_SIZE) + 1):
        design = PathologyDesign(m, x_star)
        lo, hi = gershgorin_bound(design.omega())
        rows.append(
            {
                "M": m,
                "bald": pathology_bald(design),
                "eig_target": pathology_eig_target(design),
                "gershgorin_lo": lo,
                "gershgorin_hi": hi,
            }
        )
    return rows
