"""Surrogate regressors for the scalarized search loops.

The primary surrogate is a Gaussian process with a squared-exponential
kernel; hyperparameters are picked by marginal likelihood over a fixed
log-spaced grid (signal variance profiled in closed form). When GP
fitting is impossible the distance-weighted k-nearest-neighbor regressor
takes over.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular
from scipy.spatial.distance import cdist

LENGTHSCALE_GRID = np.geomspace(0.05, 2.0, 8)
NOISE_GRID = np.array([1e-6, 1e-4, 1e-3, 1e-2, 1e-1, 0.3])


class SurrogateFitError(RuntimeError):
    """GP fitting failed; callers fall back to the kNN surrogate."""


@dataclass(frozen=True)
class GpRegressor:
    """Zero-mean GP on standardized targets with an RBF kernel."""

    X: np.ndarray
    alpha: np.ndarray  # K^{-1} y_standardized
    chol_lower: np.ndarray
    lengthscale: float
    signal_var: float
    noise_ratio: float
    y_mean: float
    y_scale: float

    @classmethod
    def fit(
        cls, X: np.ndarray, y: np.ndarray, noise_var: np.ndarray | None = None
    ) -> "GpRegressor":
        """Grid maximum-likelihood fit.

        ``noise_var`` (per-point observation variances, e.g. squared OPE
        standard errors) enters as a homoscedastic floor on the noise
        ratio; the signal variance is profiled in closed form for each
        grid point.
        """
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        n = len(y)
        if n < 2:
            raise SurrogateFitError("need at least 2 observations for a GP")
        y_mean = float(y.mean())
        y_scale = float(y.std())
        if not np.isfinite(y_scale) or y_scale < 1e-12:
            raise SurrogateFitError("degenerate targets (zero variance)")
        yt = (y - y_mean) / y_scale
        noise_floor = 0.0
        if noise_var is not None:
            noise_floor = float(np.mean(noise_var)) / (y_scale**2)

        sq = cdist(X, X, "sqeuclidean")
        best = None
        for ls in LENGTHSCALE_GRID:
            R = np.exp(-sq / (2.0 * ls * ls))
            for eta in NOISE_GRID:
                eta_eff = eta + noise_floor
                K = R + eta_eff * np.eye(n)
                try:
                    L = np.linalg.cholesky(K)
                except np.linalg.LinAlgError:
                    continue
                z = solve_triangular(L, yt, lower=True)
                quad = float(z @ z)
                sigma2 = max(quad / n, 1e-12)
                logdet = 2.0 * float(np.log(np.diag(L)).sum())
                nll = n * np.log(sigma2) + logdet
                if best is None or nll < best[0]:
                    best = (nll, ls, eta_eff, sigma2, L)
        if best is None:
            raise SurrogateFitError("no kernel grid point was positive definite")
        _, ls, eta_eff, sigma2, L = best
        alpha = solve_triangular(
            L.T, solve_triangular(L, yt, lower=True), lower=False
        )
        return cls(
            X=X,
            alpha=alpha,
            chol_lower=L,
            lengthscale=float(ls),
            signal_var=float(sigma2),
            noise_ratio=float(eta_eff),
            y_mean=y_mean,
            y_scale=y_scale,
        )

    def predict(self, Xq: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Posterior mean and standard deviation of the latent function."""
        Xq = np.atleast_2d(np.asarray(Xq, dtype=np.float64))
        k = np.exp(-cdist(Xq, self.X, "sqeuclidean") / (2.0 * self.lengthscale**2))
        mean = self.y_mean + self.y_scale * (k @ self.alpha)
        v = solve_triangular(self.chol_lower, k.T, lower=True)
        var = self.signal_var * np.maximum(1.0 - (v * v).sum(axis=0), 0.0)
        sd = self.y_scale * np.sqrt(var)
        return mean, sd


@dataclass(frozen=True)
class KnnRegressor:
    """Distance-weighted k-nearest-neighbor regressor (GP fallback)."""

    X: np.ndarray
    y: np.ndarray
    k: int = 8

    def predict(self, Xq: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        Xq = np.atleast_2d(np.asarray(Xq, dtype=np.float64))
        d = cdist(Xq, self.X)
        k = min(self.k, self.X.shape[0])
        order = np.argsort(d, axis=1, kind="stable")[:, :k]
        rows = np.arange(Xq.shape[0])[:, None]
        dk = d[rows, order]
        w = 1.0 / (dk + 1e-9)
        w /= w.sum(axis=1, keepdims=True)
        yk = self.y[order]
        mean = (w * yk).sum(axis=1)
        sd = np.sqrt((w * (yk - mean[:, None]) ** 2).sum(axis=1))
        return mean, sd


def fit_surrogate(X: np.ndarray, y: np.ndarray, noise_var: np.ndarray | None = None):
    """GP surrogate with the mandated kNN fallback on fit failure."""
    try:
        return GpRegressor.fit(X, y, noise_var=noise_var)
    except SurrogateFitError:
        return KnnRegressor(
            X=np.asarray(X, dtype=np.float64), y=np.asarray(y, dtype=np.float64)
        )
