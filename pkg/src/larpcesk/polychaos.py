"""Orthonormal polynomial chaos bases, hyperbolic truncation and OLS fitting.

Univariate families are orthonormal with respect to their probability
weight: uniform density 1/2 on [-1, 1] for Legendre, standard normal for
(probabilists') Hermite.  Physical inputs reach the Legendre domain
through an :class:`InputScaling`.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg

from .exceptions import DegenerateLeverageError, IllConditionedError, UndefinedLOOError

DEFAULT_MAX_BASIS_SIZE = 10_000
QNORM_SLACK = 1e-12
LEVERAGE_TOL = 1e-10
RANK_TOL = 1e-10


class PolynomialFamily(str, enum.Enum):
    LEGENDRE = "legendre"
    HERMITE = "hermite"


def _as_families(families, m):
    if isinstance(families, (str, PolynomialFamily)):
        families = [families] * m
    families = tuple(PolynomialFamily(f) for f in families)
    if len(families) != m:
        raise ValueError(f"expected {m} polynomial families, got {len(families)}")
    return families


def univariate_table(family, max_degree: int, x) -> np.ndarray:
    """Evaluate degrees ``0..max_degree`` of one family at ``x``.

    Returns an array of shape ``x.shape + (max_degree + 1,)``.
    """
    family = PolynomialFamily(family)
    x = np.asarray(x, dtype=float)
    out = np.empty(x.shape + (max_degree + 1,))
    out[..., 0] = 1.0
    if max_degree >= 1:
        out[..., 1] = x
    # monic/classical three-term recurrences, normalised afterwards
    for n in range(1, max_degree):
        if family is PolynomialFamily.LEGENDRE:
            out[..., n + 1] = ((2 * n + 1) * x * out[..., n] - n * out[..., n - 1]) / (n + 1)
        else:
            out[..., n + 1] = x * out[..., n] - n * out[..., n - 1]
    n = np.arange(max_degree + 1)
    if family is PolynomialFamily.LEGENDRE:
        out *= np.sqrt(2 * n + 1.0)
    else:
        out /= np.sqrt([math.factorial(int(i)) for i in n])
    return out


def eval_univariate(family, degree: int, x):
    """Orthonormal univariate polynomial of the given degree at ``x``."""
    if degree < 0:
        raise ValueError("degree must be non-negative")
    vals = univariate_table(family, degree, x)[..., degree]
    return float(vals) if np.ndim(vals) == 0 else vals


@dataclass(frozen=True)
class InputScaling:
    """Per-dimension affine map from a physical box to [-1, 1]."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lower, dtype=float))
        hi = np.atleast_1d(np.asarray(self.upper, dtype=float))
        if lo.shape != hi.shape or np.any(hi <= lo):
            raise ValueError("scaling bounds need lower < upper per dimension")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def dim(self) -> int:
        return self.lower.size

    def to_unit(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return 2.0 * (x - self.lower) / (self.upper - self.lower) - 1.0

    def from_unit(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        return self.lower + 0.5 * (u + 1.0) * (self.upper - self.lower)


@dataclass(frozen=True)
class PceBasis:
    """An ordered set of multi-indices with the family used per dimension.

    ``indices`` has shape ``(P, M)``.  ``p`` and ``q`` record the truncation
    that produced the set (informational once the basis is a LAR subset).
    """

    indices: np.ndarray
    families: tuple
    p: int
    q: float

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.int64)
        if idx.ndim != 2 or idx.shape[1] < 1:
            raise ValueError("indices must be a (P, M) array with M >= 1")
        if np.any(idx < 0):
            raise ValueError("multi-index entries must be non-negative")
        idx.setflags(write=False)
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "families", _as_families(self.families, idx.shape[1]))

    @property
    def dim(self) -> int:
        return self.indices.shape[1]

    @property
    def size(self) -> int:
        return self.indices.shape[0]

    def __len__(self):
        return self.size

    @property
    def max_degree(self) -> int:
        return int(self.indices.max()) if self.size else 0

    def constant_position(self):
        """Row of the all-zero multi-index, or ``None``."""
        hits = np.flatnonzero(~self.indices.any(axis=1))
        return int(hits[0]) if hits.size else None

    def subset(self, rows: Sequence[int]) -> "PceBasis":
        return PceBasis(self.indices[np.asarray(rows, dtype=int)], self.families, self.p, self.q)

    def as_tuples(self):
        return [tuple(int(a) for a in row) for row in self.indices]


def q_norm(alpha, q: float) -> float:
    alpha = np.asarray(alpha, dtype=float)
    return float(np.sum(alpha**q) ** (1.0 / q))


def enumerate_basis(
    m: int,
    p: int,
    q: float = 1.0,
    family=PolynomialFamily.LEGENDRE,
    max_size: int = DEFAULT_MAX_BASIS_SIZE,
) -> PceBasis:
    """All multi-indices with ``||alpha||_q <= p`` in graded lexicographic order.

    Raises
    ------
    ValueError
        On ``m < 1``, ``p < 0``, ``q`` outside (0, 1], or when the set would
        hold more than ``max_size`` indices.
    """
    if m < 1:
        raise ValueError("dimension must be >= 1")
    if p < 0:
        raise ValueError("max degree must be >= 0")
    if not (0.0 < q <= 1.0):
        raise ValueError(f"q-norm parameter must lie in (0, 1], got {q}")

    bound = p + QNORM_SLACK * max(1.0, p)
    powq = np.arange(p + 1, dtype=float) ** q
    found = []

    def grow(prefix, acc):
        if len(prefix) == m:
            found.append(tuple(prefix))
            if len(found) > max_size:
                raise ValueError(
                    f"basis cardinality exceeds the cap of {max_size} (M={m}, p={p}, q={q})"
                )
            return
        for a in range(p + 1):
            s = acc + powq[a]
            if s ** (1.0 / q) > bound:
                break
            grow(prefix + [a], s)

    grow([], 0.0)
    found.sort(key=lambda a: (sum(a), a))
    return PceBasis(np.array(found, dtype=np.int64).reshape(-1, m), family, p, q)


def information_matrix(basis: PceBasis, points) -> np.ndarray:
    """``Psi[i, j] = Psi_{alpha_j}(x_i)`` for points already in the family domain."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None] if basis.dim == 1 else pts[None, :]
    if pts.shape[1] != basis.dim:
        raise ValueError(f"points have {pts.shape[1]} columns, basis expects {basis.dim}")
    pmax = basis.max_degree
    psi = np.ones((pts.shape[0], basis.size))
    for d in range(basis.dim):
        col = basis.indices[:, d]
        if not col.any():
            continue
        table = univariate_table(basis.families[d], pmax, pts[:, d])
        psi *= table[:, col]
    return psi


@dataclass(frozen=True)
class PceModel:
    """A least-squares PCE.  ``loo_error`` is ``inf`` when undefined."""

    basis: PceBasis
    coefficients: np.ndarray
    loo_error: float
    input_scaling: InputScaling | None = None

    def _unit(self, x):
        x = np.asarray(x, dtype=float)
        return self.input_scaling.to_unit(x) if self.input_scaling is not None else x

    def predict(self, x) -> np.ndarray:
        return information_matrix(self.basis, self._unit(x)) @ self.coefficients


def _qr_checked(psi, basis):
    q_, r, piv = scipy.linalg.qr(psi, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    if diag.size and (diag[0] == 0.0 or np.any(diag < RANK_TOL * diag[0])):
        bad = sorted(piv[np.flatnonzero(diag < RANK_TOL * max(diag[0], 1e-300))].tolist())
        names = [basis.as_tuples()[j] for j in bad] if basis is not None else bad
        raise IllConditionedError(
            f"information matrix is rank deficient; offending columns {bad} (indices {names})",
            columns=bad,
        )
    return q_, r, piv


def _lstsq_qr(psi, y, basis=None):
    k, n = psi.shape
    if k < n:
        raise IllConditionedError(f"underdetermined system: {k} points for {n} basis terms")
    q_, r, piv = _qr_checked(psi, basis)
    coef = np.empty(n)
    coef[piv] = scipy.linalg.solve_triangular(r, q_.T @ y)
    leverage = np.einsum("ij,ij->i", q_, q_)
    return coef, leverage


def _loo_from(residual, leverage, y):
    if np.any(leverage >= 1.0 - LEVERAGE_TOL):
        raise DegenerateLeverageError(
            f"leverage reaches 1 at points {np.flatnonzero(leverage >= 1.0 - LEVERAGE_TOL).tolist()}"
        )
    denom = np.sum((y - y.mean()) ** 2)
    if denom == 0.0:
        raise UndefinedLOOError("response is constant; relative LOO error is undefined")
    return float(np.sum((residual / (1.0 - leverage)) ** 2) / denom)


def loo_correction_factor(psi) -> float:
    """Small-sample inflation ``k/(k-P) * (1 + tr((Psi^T Psi)^-1))`` for the LOO error.

    Multiplying the LOO error by this factor penalises bases whose size
    approaches the number of points; it is ``inf`` when ``P >= k``.
    """
    psi = np.asarray(psi, dtype=float)
    k, n = psi.shape
    if n >= k:
        return math.inf
    r = scipy.linalg.qr(psi, mode="r")[0][:n]
    rinv = scipy.linalg.solve_triangular(r, np.eye(n))
    return k / (k - n) * (1.0 + float(np.sum(rinv * rinv)))


def fit_ols(basis: PceBasis, points, y, input_scaling: InputScaling | None = None) -> PceModel:
    """Least-squares PCE coefficients via a column-pivoted QR decomposition.

    ``points`` are physical when ``input_scaling`` is given, otherwise they
    must already lie in the family domain.
    """
    y = np.asarray(y, dtype=float)
    pts = input_scaling.to_unit(points) if input_scaling is not None else points
    psi = information_matrix(basis, pts)
    coef, leverage = _lstsq_qr(psi, y, basis)
    try:
        loo = _loo_from(y - psi @ coef, leverage, y)
    except (DegenerateLeverageError, UndefinedLOOError):
        loo = math.inf
    return PceModel(basis, coef, loo, input_scaling)


def loo_error(basis: PceBasis, points, y, model: PceModel) -> float:
    """Closed-form relative leave-one-out error of a least-squares PCE."""
    y = np.asarray(y, dtype=float)
    pts = model.input_scaling.to_unit(points) if model.input_scaling is not None else points
    psi = information_matrix(basis, pts)
    q_, _, _ = _qr_checked(psi, basis)
    leverage = np.einsum("ij,ij->i", q_, q_)
    return _loo_from(y - psi @ model.coefficients, leverage, y)
