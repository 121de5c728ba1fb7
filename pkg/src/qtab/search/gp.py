"""Matern-5/2 Gaussian process surrogate with expected improvement.

Deliberately small: inputs are table vectors scaled into [0,1]^64 by the
search bounds, hyperparameters are refit by log-marginal likelihood over
a fixed grid (deterministic, no optimizer state), and the Cholesky gets
jitter escalation before giving up.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from scipy.special import ndtr

__all__ = ["Matern52GP", "GPFitError", "expected_improvement"]

_JITTERS = (0.0, 1e-10, 1e-8, 1e-6, 1e-4, 1e-2)


class GPFitError(RuntimeError):
    """Covariance stayed non-positive-definite through jitter escalation."""


def _matern52(sq_dists: np.ndarray, lengthscale: float) -> np.ndarray:
    a = np.sqrt(5.0 * np.maximum(sq_dists, 0.0)) / lengthscale
    return (1.0 + a + a * a / 3.0) * np.exp(-a)


def _cross_sq_dists(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return (
        np.sum(a * a, axis=1)[:, None]
        - 2.0 * (a @ b.T)
        + np.sum(b * b, axis=1)[None, :]
    )


class Matern52GP:
    """GP regressor over [0,1]^d inputs; maximization-friendly posterior."""

    def __init__(self, lengthscale: float = 2.0, signal_var: float = 1.0,
                 noise: float = 1e-6):
        self.lengthscale = lengthscale
        self.signal_var = signal_var
        self.noise = noise
        self._x = None
        self._y_mean = 0.0
        self._alpha = None
        self._chol = None

    @property
    def n_observations(self) -> int:
        return 0 if self._x is None else self._x.shape[0]

    def fit(self, x: np.ndarray, y: np.ndarray) -> None:
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        y = np.asarray(y, dtype=np.float64)
        self._x = x
        self._y_mean = float(y.mean())
        resid = y - self._y_mean
        k = self.signal_var * _matern52(_cross_sq_dists(x, x), self.lengthscale)
        n = x.shape[0]
        base = self.noise * np.eye(n)
        for jitter in _JITTERS:
            try:
                self._chol = cho_factor(k + base + jitter * np.eye(n), lower=True)
                break
            except np.linalg.LinAlgError:
                continue
        else:
            raise GPFitError(
                f"covariance not positive definite after jitter {_JITTERS[-1]}"
            )
        self._alpha = cho_solve(self._chol, resid)
        self._kinv = cho_solve(self._chol, np.eye(n))
        self._resid = resid

    def posterior(self, xq: np.ndarray):
        """Mean and variance at query points (m, d)."""
        xq = np.atleast_2d(np.asarray(xq, dtype=np.float64))
        kq = self.signal_var * _matern52(
            _cross_sq_dists(xq, self._x), self.lengthscale
        )
        mean = self._y_mean + kq @ self._alpha
        var = self.signal_var - np.sum((kq @ self._kinv) * kq, axis=1)
        return mean, np.maximum(var, 0.0)

    def log_marginal_likelihood(self) -> float:
        n = self._x.shape[0]
        log_det = 2.0 * np.sum(np.log(np.diag(self._chol[0])))
        return float(
            -0.5 * self._resid @ self._alpha
            - 0.5 * log_det
            - 0.5 * n * math.log(2.0 * math.pi)
        )

    def refit_hyperparameters(self, x: np.ndarray, y: np.ndarray) -> None:
        """Grid-search (lengthscale, signal variance) by marginal likelihood."""
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        y = np.asarray(y, dtype=np.float64)
        y_var = max(float(y.var()), 1e-12)
        best = (-math.inf, self.lengthscale, self.signal_var)
        for ls in (0.5, 1.0, 2.0, 4.0, 8.0):
            for sv in (0.3 * y_var, y_var, 3.0 * y_var):
                self.lengthscale = ls
                self.signal_var = sv
                try:
                    self.fit(x, y)
                except GPFitError:
                    continue
                lml = self.log_marginal_likelihood()
                if lml > best[0]:
                    best = (lml, ls, sv)
        _, self.lengthscale, self.signal_var = best
        self.fit(x, y)


def expected_improvement(mean: np.ndarray, var: np.ndarray, best: float) -> np.ndarray:
    """EI for maximization; zero where predictive variance vanishes."""
    sigma = np.sqrt(var)
    out = np.zeros_like(mean)
    positive = sigma > 0
    z = (mean[positive] - best) / sigma[positive]
    pdf = np.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi)
    out[positive] = (mean[positive] - best) * ndtr(z) + sigma[positive] * pdf
    det = ~positive
    out[det] = np.maximum(mean[det] - best, 0.0)
    return out
