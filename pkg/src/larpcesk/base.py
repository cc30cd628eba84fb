"""Pieces shared by the deterministic and stochastic Kriging models."""
from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from . import polychaos
from .exceptions import IllConditionedError, NotPositiveDefiniteError
from .polychaos import InputScaling, PceBasis, PolynomialFamily

Z_95 = 1.959964
NUGGET_START = 1e-10
NUGGET_MAX = 1e-6
MSE_WARN = -1e-10


class TrendKind(str, enum.Enum):
    CONSTANT = "constant"
    FULL_PCE = "full_pce"
    LAR_PCE = "lar_pce"


@dataclass(frozen=True)
class TrendModel:
    """Regression basis ``f(x)`` of a Kriging model.

    Evaluation maps physical points through ``scaling`` (when set) and
    evaluates the orthonormal basis, so a constant trend is the single
    all-zero multi-index.
    """

    kind: TrendKind
    basis: PceBasis
    scaling: InputScaling | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", TrendKind(self.kind))
        if self.basis.size == 0:
            raise ValueError("trend basis must not be empty")
        if self.kind is TrendKind.CONSTANT and (
            self.basis.size != 1 or self.basis.constant_position() is None
        ):
            raise ValueError("a constant trend holds exactly the zero multi-index")

    @classmethod
    def constant(cls, dim: int, scaling: InputScaling | None = None) -> "TrendModel":
        basis = PceBasis(np.zeros((1, dim), dtype=np.int64), PolynomialFamily.LEGENDRE, 0, 1.0)
        return cls(TrendKind.CONSTANT, basis, scaling)

    @property
    def dim(self) -> int:
        return self.basis.dim

    @property
    def size(self) -> int:
        return self.basis.size

    def matrix(self, x) -> np.ndarray:
        x = as_points(x, self.dim)
        u = self.scaling.to_unit(x) if self.scaling is not None else x
        return polychaos.information_matrix(self.basis, u)


def as_points(x, dim: int) -> np.ndarray:
    """Coerce input to shape ``(n, dim)``; a 1-D array is n points when dim == 1."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        x = x.reshape(1, 1)
    elif x.ndim == 1:
        x = x[:, None] if dim == 1 else x[None, :]
    if x.shape[1] != dim:
        raise ValueError(f"points have dimension {x.shape[1]}, model expects {dim}")
    return x


@dataclass(frozen=True)
class CorrelationParams:
    theta: np.ndarray
    sigma2: float

    def __post_init__(self):
        theta = np.atleast_1d(np.asarray(self.theta, dtype=float))
        if np.any(theta <= 0) or not np.all(np.isfinite(theta)):
            raise ValueError("theta must be positive and finite")
        if not (self.sigma2 > 0 and np.isfinite(self.sigma2)):
            raise ValueError("sigma2 must be positive and finite")
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "sigma2", float(self.sigma2))


@dataclass(frozen=True)
class Prediction:
    mean: np.ndarray
    mse: np.ndarray

    @property
    def ci95(self):
        half = Z_95 * np.sqrt(self.mse)
        return self.mean - half, self.mean + half


def cholesky_with_nugget(matrix: np.ndarray, nugget: float = NUGGET_START):
    """Lower Cholesky factor of ``matrix + nugget * mean(diag) * I``.

    The relative nugget starts at ``nugget`` (0 allowed: first try the bare
    matrix) and is escalated x10 up to 1e-6 on failure.

    Returns
    -------
    (L, applied) : lower factor and the absolute diagonal increment used.
    """
    scale = float(np.mean(np.diag(matrix)))
    rel = nugget
    while True:
        applied = rel * scale
        try:
            a = matrix + applied * np.eye(matrix.shape[0]) if applied else matrix
            return np.linalg.cholesky(a), applied
        except np.linalg.LinAlgError:
            pass
        if rel >= NUGGET_MAX:
            raise NotPositiveDefiniteError(
                f"covariance not SPD even with relative nugget {NUGGET_MAX:g}"
            )
        rel = NUGGET_START if rel == 0 else min(rel * 10.0, NUGGET_MAX)


def try_cholesky(matrix: np.ndarray, nugget: float = NUGGET_START):
    try:
        return cholesky_with_nugget(matrix, nugget)
    except NotPositiveDefiniteError:
        return None, None


def gls(chol_lower: np.ndarray, f: np.ndarray, y: np.ndarray):
    """Generalised least squares ``(F^T C^-1 F)^-1 F^T C^-1 y`` with ``C = L L^T``.

    Returns ``(beta, f_white, y_white, r_white)`` where the ``*_white``
    arrays are premultiplied by ``L^-1`` and ``r_white`` is the upper
    triangular factor of the whitened trend matrix.
    """
    fw = scipy.linalg.solve_triangular(chol_lower, f, lower=True, check_finite=False)
    yw = scipy.linalg.solve_triangular(chol_lower, y, lower=True, check_finite=False)
    q, r = np.linalg.qr(fw)
    d = np.abs(np.diag(r))
    if d.size == 0 or d.min() <= 1e-12 * max(d.max(), 1e-300):
        raise IllConditionedError(
            "trend normal matrix F^T C^-1 F is singular",
            columns=np.flatnonzero(d <= 1e-12 * max(d.max(), 1e-300)).tolist(),
        )
    beta = scipy.linalg.solve_triangular(r, q.T @ yw, check_finite=False)
    return beta, fw, yw, r


def clamp_mse(mse: np.ndarray, scale: float) -> np.ndarray:
    low = mse < MSE_WARN * max(1.0, scale)
    if np.any(low):
        warnings.warn(
            f"MSE below {MSE_WARN:g} at {int(low.sum())} points (min {mse.min():.3g}); clamped to 0",
            RuntimeWarning,
            stacklevel=3,
        )
    return np.maximum(mse, 0.0)


def log10_theta_bounds(scaling: InputScaling | None, points: np.ndarray, lo=-3.0, hi=3.0):
    """Per-dimension log10 bounds on theta, ``[1e-3, 1e3] / range_d^2``."""
    if scaling is not None:
        span = scaling.upper - scaling.lower
    else:
        span = np.ptp(points, axis=0)
        span = np.where(span > 0, span, 1.0)
    shift = -2.0 * np.log10(span)
    return [(lo + s, hi + s) for s in shift]
