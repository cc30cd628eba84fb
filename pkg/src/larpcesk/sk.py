"""Stochastic Kriging with heteroscedastic intrinsic noise.

Three trend flavours share one fitting path: Ordinary SK (constant
trend), full-PCE SK (every index of a hyperbolic truncation) and
LAR-PCE SK (the sparse basis picked by hybrid LAR on the sample means).
Hyperparameters ``(theta, sigma2)`` maximise the SK log-likelihood with
the GA; trend coefficients come from generalised least squares.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg

from . import kernels, lar, polychaos
from .base import (
    NUGGET_START,
    CorrelationParams,
    Prediction,
    TrendKind,
    TrendModel,
    as_points,
    cholesky_with_nugget,
    clamp_mse,
    gls,
    log10_theta_bounds,
    try_cholesky,
)
from .exceptions import IllConditionedError, InsufficientReplicationError, OptimizationError
from .optimize import GaConfig, ga_maximize
from .polychaos import InputScaling, PceBasis, PolynomialFamily

VARIANCE_FLOOR = 1e-12
SIGMA2_BOUNDS = (-6.0, 2.0)  # log10 of sigma2 relative to var(sample means)
LOG_2PI = math.log(2.0 * math.pi)
FORMAT_TAG = "larpcesk.sk_model"


@dataclass(frozen=True)
class ExperimentalDesign:
    """Design points with replication counts and per-point statistics.

    ``sample_variances`` hold the unbiased replication variance, or the
    externally supplied noise variance when ``known_variances`` is set.
    """

    points: np.ndarray
    replications: np.ndarray
    sample_means: np.ndarray
    sample_variances: np.ndarray | None = None
    known_variances: bool = False
    raw_outputs: tuple | None = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        reps = np.asarray(self.replications, dtype=np.int64).reshape(-1)
        means = np.asarray(self.sample_means, dtype=float).reshape(-1)
        if not (pts.shape[0] == reps.size == means.size):
            raise ValueError("points, replications and sample means must have equal length")
        if np.any(reps < 1):
            raise ValueError("every design point needs at least one replication")
        var = self.sample_variances
        if var is not None:
            var = np.asarray(var, dtype=float).reshape(-1)
            if var.size != reps.size or np.any(var < 0):
                raise ValueError("sample variances must be non-negative, one per point")
        if self.raw_outputs is not None:
            for i, out in enumerate(self.raw_outputs):
                if len(out) != reps[i] or not np.isclose(np.mean(out), means[i], rtol=1e-12, atol=1e-12):
                    raise ValueError(f"raw outputs at point {i} disagree with its count or mean")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "replications", reps)
        object.__setattr__(self, "sample_means", means)
        object.__setattr__(self, "sample_variances", var)

    @classmethod
    def from_outputs(cls, points, outputs) -> "ExperimentalDesign":
        """Build from per-point replication outputs (a sequence of 1-D arrays)."""
        outputs = tuple(np.asarray(o, dtype=float).reshape(-1) for o in outputs)
        reps = np.array([o.size for o in outputs])
        means = np.array([o.mean() for o in outputs])
        var = None
        if np.all(reps >= 2):
            var = np.array([o.var(ddof=1) for o in outputs])
        return cls(points, reps, means, var, False, outputs)

    @classmethod
    def from_known_noise(cls, points, values, variances, replications=None) -> "ExperimentalDesign":
        values = np.asarray(values, dtype=float).reshape(-1)
        reps = np.ones(values.size, dtype=np.int64) if replications is None else replications
        return cls(points, reps, values, variances, True, None)

    @property
    def size(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def permuted(self, order) -> "ExperimentalDesign":
        order = np.asarray(order)
        raw = None if self.raw_outputs is None else tuple(self.raw_outputs[i] for i in order)
        var = None if self.sample_variances is None else self.sample_variances[order]
        return ExperimentalDesign(
            self.points[order], self.replications[order], self.sample_means[order],
            var, self.known_variances, raw,
        )


def intrinsic_covariance(ed: ExperimentalDesign) -> np.ndarray:
    """Diagonal of the intrinsic covariance: variance of each sample mean, ``V_i / n_i``.

    Returned as a 1-D array of length ``k``.
    """
    if ed.sample_variances is None:
        raise InsufficientReplicationError(
            "sample variances need n_i >= 2 at every point or externally supplied variances"
        )
    if not ed.known_variances and np.any(ed.replications < 2):
        bad = np.flatnonzero(ed.replications < 2).tolist()
        raise InsufficientReplicationError(f"single replication without supplied variance at {bad}")
    return ed.sample_variances / ed.replications


def _floored(sigma_eps):
    top = float(np.max(sigma_eps)) if sigma_eps.size else 0.0
    return np.maximum(sigma_eps, VARIANCE_FLOOR * top)


def _covariance(points, theta, sigma2, sigma_eps):
    c = sigma2 * kernels.gaussian_correlation_matrix(points, points, theta)
    c[np.diag_indices_from(c)] += sigma_eps
    return c


def sk_log_likelihood(
    trend_matrix, beta, params: CorrelationParams, sigma_eps, sample_means, points,
    nugget=NUGGET_START,
) -> float:
    """Gaussian log-likelihood of the sample means under ``Sigma_Z + Sigma_eps``."""
    points = np.asarray(points, dtype=float)
    if points.ndim == 1:
        points = points[:, None]
    y = np.asarray(sample_means, dtype=float)
    cov = _covariance(points, params.theta, params.sigma2, np.asarray(sigma_eps, dtype=float))
    chol, _ = cholesky_with_nugget(cov, nugget)
    resid = scipy.linalg.solve_triangular(chol, y - trend_matrix @ beta, lower=True)
    logdet = 2.0 * np.sum(np.log(np.diag(chol)))
    return -0.5 * (y.size * LOG_2PI + logdet + float(resid @ resid))


@dataclass(frozen=True)
class SkModel:
    trend: TrendModel
    beta: np.ndarray
    params: CorrelationParams
    sigma_eps: np.ndarray
    ed: ExperimentalDesign
    chol: np.ndarray = field(repr=False)
    nugget: float = 0.0
    log_likelihood: float = math.nan
    selection: dict | None = None

    def __post_init__(self):
        f = self.trend.matrix(self.ed.points)
        resid = self.ed.sample_means - f @ self.beta
        fw = scipy.linalg.solve_triangular(self.chol, f, lower=True)
        _, r = np.linalg.qr(fw)
        object.__setattr__(self, "_alpha", scipy.linalg.cho_solve((self.chol, True), resid))
        object.__setattr__(self, "_fw", fw)
        object.__setattr__(self, "_gram_r", r)

    @property
    def dim(self) -> int:
        return self.ed.dim

    @property
    def n_basis(self) -> int:
        return self.trend.size

    def predict(self, x) -> Prediction:
        return predict_sk(self, x)

    def to_dict(self) -> dict:
        ed = self.ed
        scaling = self.trend.scaling
        return {
            "format": FORMAT_TAG,
            "version": 1,
            "trend": {
                "kind": self.trend.kind.value,
                "families": [f.value for f in self.trend.basis.families],
                "p": int(self.trend.basis.p),
                "q": float(self.trend.basis.q),
                "indices": self.trend.basis.indices.tolist(),
                "scaling": None if scaling is None else {
                    "lower": scaling.lower.tolist(), "upper": scaling.upper.tolist(),
                },
            },
            "beta": self.beta.tolist(),
            "theta": self.params.theta.tolist(),
            "sigma2": self.params.sigma2,
            "sigma_eps": self.sigma_eps.tolist(),
            "nugget": self.nugget,
            "log_likelihood": self.log_likelihood,
            "ed": {
                "points": ed.points.tolist(),
                "replications": ed.replications.tolist(),
                "sample_means": ed.sample_means.tolist(),
                "sample_variances": None if ed.sample_variances is None else ed.sample_variances.tolist(),
                "known_variances": ed.known_variances,
            },
            "selection": self.selection,
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_dict(cls, data: dict) -> "SkModel":
        if data.get("format") != FORMAT_TAG:
            raise ValueError(f"not a serialised SK model (format={data.get('format')!r})")
        t = data["trend"]
        basis = PceBasis(np.array(t["indices"], dtype=np.int64), t["families"], t["p"], t["q"])
        scaling = None
        if t["scaling"] is not None:
            scaling = InputScaling(np.array(t["scaling"]["lower"]), np.array(t["scaling"]["upper"]))
        trend = TrendModel(TrendKind(t["kind"]), basis, scaling)
        e = data["ed"]
        ed = ExperimentalDesign(
            np.array(e["points"]), np.array(e["replications"]), np.array(e["sample_means"]),
            None if e["sample_variances"] is None else np.array(e["sample_variances"]),
            e["known_variances"],
        )
        params = CorrelationParams(np.array(data["theta"]), data["sigma2"])
        sigma_eps = np.array(data["sigma_eps"], dtype=float)
        cov = _covariance(ed.points, params.theta, params.sigma2, sigma_eps)
        cov[np.diag_indices_from(cov)] += data["nugget"]
        chol = np.linalg.cholesky(cov)
        return cls(trend, np.array(data["beta"], dtype=float), params, sigma_eps, ed, chol,
                   data["nugget"], data["log_likelihood"], data.get("selection"))

    @classmethod
    def from_json(cls, text: str) -> "SkModel":
        return cls.from_dict(json.loads(text))


def gls_beta(trend_matrix, covariance, sample_means, nugget=NUGGET_START) -> np.ndarray:
    """``[F^T C^-1 F]^-1 F^T C^-1 y`` through a Cholesky factor of ``C``."""
    chol, _ = cholesky_with_nugget(np.asarray(covariance, dtype=float), nugget)
    beta, *_ = gls(chol, np.asarray(trend_matrix, dtype=float), np.asarray(sample_means, dtype=float))
    return beta


def sk_at(
    trend: TrendModel, ed: ExperimentalDesign, theta, sigma2, sigma_eps=None,
    nugget=NUGGET_START, beta=None,
) -> SkModel:
    """SK model at fixed ``(theta, sigma2)``; ``beta`` defaults to the GLS estimate."""
    theta = np.broadcast_to(np.asarray(theta, dtype=float), (ed.dim,)).copy()
    params = CorrelationParams(theta, sigma2)
    se = _floored(intrinsic_covariance(ed) if sigma_eps is None else np.asarray(sigma_eps, dtype=float))
    cov = _covariance(ed.points, theta, params.sigma2, se)
    chol, applied = cholesky_with_nugget(cov, nugget)
    f = trend.matrix(ed.points)
    if beta is None:
        beta, *_ = gls(chol, f, ed.sample_means)
    resid = scipy.linalg.solve_triangular(chol, ed.sample_means - f @ beta, lower=True)
    ll = -0.5 * (ed.size * LOG_2PI + 2.0 * np.sum(np.log(np.diag(chol))) + float(resid @ resid))
    return SkModel(trend, np.asarray(beta, dtype=float), params, se, ed, chol, applied, ll)


def sk_search_bounds(trend: TrendModel, ed: ExperimentalDesign):
    """log10 bounds for ``theta`` (per dimension) followed by ``sigma2``."""
    scale = float(np.var(ed.sample_means))
    if not scale > 0:
        scale = 1.0
    lo, hi = SIGMA2_BOUNDS
    s = math.log10(scale)
    return log10_theta_bounds(trend.scaling, ed.points) + [(lo + s, hi + s)]


def fit_sk(
    trend: TrendModel,
    ed: ExperimentalDesign,
    config: GaConfig | None = None,
    nugget=NUGGET_START,
    beta_mode: str = "gls",
) -> SkModel:
    """Maximise the SK log-likelihood over ``(log10 theta, log10 sigma2)``.

    ``beta_mode="gls"`` profiles the trend coefficients by GLS at every
    candidate; ``beta_mode="ols"`` holds them at the ordinary least-squares
    fit during the search.  Either way the returned model carries the GLS
    coefficients at the optimum.
    """
    if beta_mode not in ("gls", "ols"):
        raise ValueError("beta_mode must be 'gls' or 'ols'")
    k, m = ed.size, ed.dim
    if k <= trend.size:
        raise ValueError(f"need more design points ({k}) than trend terms ({trend.size})")
    se = _floored(intrinsic_covariance(ed))
    config = config or GaConfig()
    if config.bounds is None:
        config = config.with_bounds(sk_search_bounds(trend, ed))
    f = trend.matrix(ed.points)
    y = ed.sample_means
    pts = np.ascontiguousarray(ed.points)
    beta_fixed = None
    if beta_mode == "ols":
        beta_fixed = np.linalg.lstsq(f, y, rcond=None)[0]

    def fitness(genes):
        theta = 10.0 ** genes[:m]
        cov = _covariance(pts, theta, 10.0 ** genes[m], se)
        chol, _ = try_cholesky(cov, nugget)
        if chol is None:
            return -math.inf
        if beta_fixed is None:
            try:
                beta, fw, yw, _ = gls(chol, f, y)
            except IllConditionedError:
                return -math.inf
            resid = yw - fw @ beta
        else:
            resid = scipy.linalg.solve_triangular(chol, y - f @ beta_fixed, lower=True, check_finite=False)
        return -0.5 * (k * LOG_2PI + 2.0 * np.sum(np.log(np.diag(chol))) + float(resid @ resid))

    result = ga_maximize(fitness, config)
    if not math.isfinite(result.best_value):
        raise OptimizationError("GA found no feasible SK hyperparameters")
    g = result.best_genes
    return sk_at(trend, ed, 10.0 ** g[:m], 10.0 ** g[m], se, nugget)


def predict_sk(model: SkModel, x) -> Prediction:
    """SK mean and MSE (with the trend-estimation inflation term) at ``x``."""
    x = as_points(x, model.dim)
    s2 = model.params.sigma2
    cross = s2 * kernels.gaussian_correlation_matrix(x, model.ed.points, model.params.theta)
    fx = model.trend.matrix(x)
    mean = fx @ model.beta + cross @ model._alpha
    cw = scipy.linalg.solve_triangular(model.chol, cross.T, lower=True)
    gamma = fx.T - model._fw.T @ cw
    v = scipy.linalg.solve_triangular(model._gram_r, gamma, trans="T")
    mse = s2 - np.sum(cw * cw, axis=0) + np.sum(v * v, axis=0)
    return Prediction(mean, clamp_mse(mse, s2))


def _scaling_for(ed: ExperimentalDesign, domain) -> InputScaling:
    if isinstance(domain, InputScaling):
        return domain
    if domain is None:
        return InputScaling(ed.points.min(axis=0), ed.points.max(axis=0))
    lower, upper = domain
    return InputScaling(np.broadcast_to(lower, (ed.dim,)), np.broadcast_to(upper, (ed.dim,)))


def fit_ordinary_sk(ed: ExperimentalDesign, config: GaConfig | None = None, domain=None, **kwargs) -> SkModel:
    """SK with a constant trend."""
    trend = TrendModel.constant(ed.dim, _scaling_for(ed, domain))
    return fit_sk(trend, ed, config, **kwargs)


def fit_full_pce_sk(
    ed: ExperimentalDesign, p: int, q: float = 1.0, config: GaConfig | None = None,
    domain=None, family=PolynomialFamily.LEGENDRE, **kwargs,
) -> SkModel:
    """SK whose trend is every index of the hyperbolic truncation."""
    scaling = _scaling_for(ed, domain)
    basis = polychaos.enumerate_basis(ed.dim, p, q, family)
    model = fit_sk(TrendModel(TrendKind.FULL_PCE, basis, scaling), ed, config, **kwargs)
    return replace(model, selection={"n_candidates": basis.size, "n_selected": basis.size})


def fit_lar_pce_sk(
    ed: ExperimentalDesign, p: int, q: float = 1.0, config: GaConfig | None = None,
    domain=None, family=PolynomialFamily.LEGENDRE, criterion="corrected", **kwargs,
) -> SkModel:
    """LAR-PCE SK: select a sparse basis on the sample means, then fit SK with it.

    ``criterion`` is passed to :func:`larpcesk.lar.select_sparse_basis`.
    """
    scaling = _scaling_for(ed, domain)
    candidates = polychaos.enumerate_basis(ed.dim, p, q, family)
    basis, pce, path = lar.select_sparse_basis(candidates, ed.points, ed.sample_means, scaling, criterion)
    model = fit_sk(TrendModel(TrendKind.LAR_PCE, basis, scaling), ed, config, **kwargs)
    meta = {
        "n_candidates": candidates.size,
        "n_selected": basis.size,
        "loo_error": pce.loo_error,
        "criterion": criterion,
        "path_length": len(path.steps),
        "selected_step": path.selected,
        "indices": basis.indices.tolist(),
    }
    return replace(model, selection=meta)
