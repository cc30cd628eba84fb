"""Deterministic Universal Kriging with a Gaussian correlation function."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from . import kernels
from .base import (
    NUGGET_START,
    CorrelationParams,
    Prediction,
    TrendModel,
    as_points,
    cholesky_with_nugget,
    clamp_mse,
    gls,
    log10_theta_bounds,
    try_cholesky,
)
from .exceptions import IllConditionedError, OptimizationError
from .optimize import GaConfig, ga_maximize


def gaussian_correlation(x, x_prime, theta) -> float:
    """``exp(-sum_i theta_i (x_i - x'_i)^2)`` for a single pair of points."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    x_prime = np.atleast_1d(np.asarray(x_prime, dtype=float))
    theta = np.broadcast_to(np.asarray(theta, dtype=float), x.shape)
    if x.shape != x_prime.shape:
        raise ValueError("point dimensions differ")
    return float(np.exp(-np.sum(theta * (x - x_prime) ** 2)))


def blue_estimates(f: np.ndarray, chol_lower: np.ndarray, y: np.ndarray):
    """BLUE trend coefficients and process variance given ``R = L L^T``.

    Returns ``(beta, sigma2)`` with ``sigma2 = (y - F beta)^T R^-1 (y - F beta) / k``.
    """
    y = np.asarray(y, dtype=float)
    beta, fw, yw, _ = gls(chol_lower, np.asarray(f, dtype=float), y)
    resid = yw - fw @ beta
    return beta, float(resid @ resid) / y.size


@dataclass(frozen=True)
class KrigingModel:
    trend: TrendModel
    beta: np.ndarray
    params: CorrelationParams
    points: np.ndarray
    values: np.ndarray
    chol: np.ndarray = field(repr=False)
    nugget: float = 0.0
    objective: float = math.nan

    def __post_init__(self):
        f = self.trend.matrix(self.points)
        resid = self.values - f @ self.beta
        alpha = scipy.linalg.cho_solve((self.chol, True), resid)
        fw = scipy.linalg.solve_triangular(self.chol, f, lower=True)
        # Cholesky of F^T R^-1 F for the trend-inflation term
        _, r = np.linalg.qr(fw)
        object.__setattr__(self, "_alpha", alpha)
        object.__setattr__(self, "_gram_r", r)

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def predict(self, x) -> Prediction:
        return predict_kriging(self, x)


def _sq_diffs(points):
    return (points[:, None, :] - points[None, :, :]) ** 2


def concentrated_objective(theta, trend: TrendModel, points, y, nugget=NUGGET_START) -> float:
    """``log[(1/k) (y-F b)^T R^-1 (y-F b) |R|^(1/k)]``, the theta-only ML criterion."""
    points = as_points(points, trend.dim)
    y = np.asarray(y, dtype=float)
    r = kernels.gaussian_correlation_matrix(points, points, np.asarray(theta, dtype=float))
    chol, _ = cholesky_with_nugget(r, nugget)
    _, sigma2 = blue_estimates(trend.matrix(points), chol, y)
    logdet = 2.0 * np.sum(np.log(np.diag(chol)))
    return math.log(max(sigma2, 1e-300)) + logdet / y.size


def kriging_at(trend: TrendModel, points, y, theta, nugget=NUGGET_START) -> KrigingModel:
    """Kriging model at fixed correlation rates, with BLUE ``beta`` and ``sigma2``."""
    points = as_points(points, trend.dim)
    y = np.asarray(y, dtype=float)
    theta = np.broadcast_to(np.asarray(theta, dtype=float), (trend.dim,)).copy()
    r = kernels.gaussian_correlation_matrix(points, points, theta)
    chol, applied = cholesky_with_nugget(r, nugget)
    beta, sigma2 = blue_estimates(trend.matrix(points), chol, y)
    logdet = 2.0 * np.sum(np.log(np.diag(chol)))
    obj = math.log(max(sigma2, 1e-300)) + logdet / y.size
    sigma2 = max(sigma2, np.finfo(float).tiny)
    return KrigingModel(trend, beta, CorrelationParams(theta, sigma2), points, y, chol, applied, obj)


def fit_kriging(
    trend: TrendModel, points, y, config: GaConfig | None = None, nugget=NUGGET_START
) -> KrigingModel:
    """Fit correlation rates by minimising the concentrated likelihood criterion.

    The search runs over ``log10(theta)`` with the GA from
    :mod:`larpcesk.optimize`; ``beta`` and ``sigma2`` then follow in
    closed form.
    """
    points = as_points(points, trend.dim)
    y = np.asarray(y, dtype=float)
    k = y.size
    if k <= trend.size:
        raise ValueError(f"need more points ({k}) than trend terms ({trend.size})")
    config = config or GaConfig()
    if config.bounds is None:
        config = config.with_bounds(log10_theta_bounds(trend.scaling, points))
    f = trend.matrix(points)
    d2 = _sq_diffs(points)

    def fitness(genes):
        r = np.exp(-(d2 @ (10.0 ** genes)))
        chol, _ = try_cholesky(r, nugget)
        if chol is None:
            return -math.inf
        try:
            _, sigma2 = blue_estimates(f, chol, y)
        except IllConditionedError:
            return -math.inf
        logdet = 2.0 * np.sum(np.log(np.diag(chol)))
        return -(math.log(max(sigma2, 1e-300)) + logdet / k)

    result = ga_maximize(fitness, config)
    if not math.isfinite(result.best_value):
        raise OptimizationError("no feasible correlation parameters found")
    return kriging_at(trend, points, y, 10.0 ** result.best_genes, nugget)


def predict_kriging(model: KrigingModel, x) -> Prediction:
    """Universal Kriging mean and MSE, including the trend-inflation term."""
    x = as_points(x, model.dim)
    r = kernels.gaussian_correlation_matrix(x, model.points, model.params.theta)
    fx = model.trend.matrix(x)
    mean = fx @ model.beta + r @ model._alpha
    rw = scipy.linalg.solve_triangular(model.chol, r.T, lower=True)
    fw = scipy.linalg.solve_triangular(model.chol, model.trend.matrix(model.points), lower=True)
    u = fw.T @ rw - fx.T  # F^T R^-1 r(x) - f(x), one column per point
    v = scipy.linalg.solve_triangular(model._gram_r, u, trans="T")
    mse = model.params.sigma2 * (1.0 - np.sum(rw * rw, axis=0) + np.sum(v * v, axis=0))
    return Prediction(mean, clamp_mse(mse, model.params.sigma2))
