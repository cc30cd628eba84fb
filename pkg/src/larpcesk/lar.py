"""Least Angle Regression over a PCE candidate basis and LOO-based sparse selection."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import polychaos
from .exceptions import DegenerateLeverageError, IllConditionedError, SelectionError, UndefinedLOOError
from .polychaos import InputScaling, PceBasis, PceModel

CORRELATION_FLOOR = 1e-12
ZERO_VARIANCE_TOL = 1e-12


@dataclass(frozen=True)
class LarStep:
    """One LAR knot.

    ``active`` lists candidate rows in entry order.  ``coefficients`` are the
    LAR (shrunk) coefficients aligned with the full candidate basis, in
    original polynomial units, with the intercept folded into the constant
    row when the basis has one.
    """

    active: tuple
    coefficients: np.ndarray
    loo_error: float | None = None
    score: float | None = None


@dataclass(frozen=True)
class LarPath:
    steps: tuple
    candidates: PceBasis
    race_columns: np.ndarray
    excluded: tuple
    design: np.ndarray = field(repr=False)
    response: np.ndarray = field(repr=False)
    std_coefficients: tuple = field(repr=False, default=())
    selected: int | None = None

    def correlations(self, step: int) -> np.ndarray:
        """Correlations ``X^T (y_c - X b)`` of all race columns at a step."""
        b = self.std_coefficients[step]
        return self.design.T @ (self.response - self.design @ b)

    def active_positions(self, step: int) -> np.ndarray:
        """Positions of the step's active rows within ``race_columns``."""
        lookup = {int(c): i for i, c in enumerate(self.race_columns)}
        return np.array([lookup[a] for a in self.steps[step].active], dtype=int)


def _unit_points(points, input_scaling):
    return input_scaling.to_unit(points) if input_scaling is not None else np.asarray(points, dtype=float)


def lar_path(candidates: PceBasis, points, y, input_scaling: InputScaling | None = None) -> LarPath:
    """Run plain LAR (no lasso drops) on the non-constant candidates.

    The constant column and any column constant over the design are kept
    out of the race (they cannot be standardised) and reported in
    ``excluded``.  Stops after ``min(P_race, k - 1)`` entries or when the
    largest residual correlation drops below 1e-12.
    """
    if candidates.size == 0:
        raise ValueError("empty candidate basis")
    y = np.asarray(y, dtype=float)
    k = y.size
    if k < 2:
        raise ValueError("LAR needs at least two design points")
    psi = polychaos.information_matrix(candidates, _unit_points(points, input_scaling))
    if psi.shape[0] != k:
        raise ValueError("points and response lengths differ")

    means = psi.mean(axis=0)
    centred = psi - means
    norms = np.linalg.norm(centred, axis=0)
    scale = max(1.0, float(np.sqrt(k)))
    race = np.flatnonzero(norms > ZERO_VARIANCE_TOL * scale)
    excluded = tuple(int(j) for j in np.setdiff1d(np.arange(candidates.size), race))
    x = centred[:, race] / norms[race]
    yc = y - y.mean()

    n_race = race.size
    max_steps = min(n_race, k - 1)
    b = np.zeros(n_race)
    active: list[int] = []
    signs: list[float] = []
    std_coefs = []
    steps = []
    floor = CORRELATION_FLOOR * max(1.0, float(np.linalg.norm(yc)))

    def to_original(bvec):
        coef = np.zeros(candidates.size)
        coef[race] = bvec / norms[race]
        const = candidates.constant_position()
        if const is not None:
            coef[const] = y.mean() - float(means[race] @ coef[race])
        return coef

    c = x.T @ yc
    if n_race and max_steps > 0:
        j0 = int(np.argmax(np.abs(c)))
        if abs(c[j0]) >= floor:
            active.append(j0)
            signs.append(float(np.sign(c[j0])))

    while active:
        c = x.T @ (yc - x @ b)
        big_c = float(np.max(np.abs(c[active])))
        xa = x[:, active] * np.asarray(signs)
        gram = xa.T @ xa
        ones = np.ones(len(active))
        try:
            g1 = np.linalg.solve(gram, ones)
        except np.linalg.LinAlgError:
            break
        denom = float(ones @ g1)
        if not np.isfinite(denom) or denom <= 0:
            break
        norm_a = 1.0 / math.sqrt(denom)
        w = norm_a * g1
        u = xa @ w
        a = x.T @ u

        inactive = np.setdiff1d(np.arange(n_race), active)
        last = len(active) >= max_steps or inactive.size == 0
        gamma = big_c / norm_a
        j_new = None
        if not last:
            ci, ai = c[inactive], a[inactive]
            with np.errstate(divide="ignore", invalid="ignore"):
                g_minus = (big_c - ci) / (norm_a - ai)
                g_plus = (big_c + ci) / (norm_a + ai)
            cand = np.vstack([g_minus, g_plus])
            cand[~np.isfinite(cand) | (cand <= 1e-14 * gamma)] = np.inf
            per_col = cand.min(axis=0)
            pos = int(np.argmin(per_col))
            if np.isfinite(per_col[pos]) and per_col[pos] < gamma:
                gamma = float(per_col[pos])
                j_new = int(inactive[pos])

        b = b.copy()
        b[active] += gamma * np.asarray(signs) * w
        std_coefs.append(b.copy())
        steps.append(LarStep(tuple(int(race[j]) for j in active), to_original(b)))

        if j_new is None:
            break
        c_new = x.T @ (yc - x @ b)
        if np.max(np.abs(c_new)) < floor:
            break
        active.append(j_new)
        signs.append(float(np.sign(c_new[j_new])) or 1.0)

    return LarPath(
        steps=tuple(steps),
        candidates=candidates,
        race_columns=race,
        excluded=excluded,
        design=x,
        response=yc,
        std_coefficients=tuple(std_coefs),
    )


def _with_constant(basis: PceBasis) -> PceBasis:
    if basis.constant_position() is not None:
        return basis
    idx = np.vstack([np.zeros((1, basis.dim), dtype=np.int64), basis.indices])
    return PceBasis(idx, basis.families, basis.p, basis.q)


def _refit(candidates, rows, psi_full, y, scaling):
    psi = psi_full[:, rows]
    coef, leverage = polychaos._lstsq_qr(psi, y, candidates.subset(rows))
    try:
        loo = polychaos._loo_from(y - psi @ coef, leverage, y)
    except (DegenerateLeverageError, UndefinedLOOError):
        loo = math.inf
    return PceModel(candidates.subset(rows), coef, loo, scaling)


SELECTION_CRITERIA = ("corrected", "plain")


def _score(model, psi, criterion):
    if criterion == "plain" or not math.isfinite(model.loo_error):
        return model.loo_error
    return model.loo_error * polychaos.loo_correction_factor(psi)


def select_sparse_basis(
    candidates: PceBasis, points, y, input_scaling: InputScaling | None = None, criterion: str = "corrected"
) -> tuple[PceBasis, PceModel, LarPath]:
    """Hybrid LAR: select terms by LAR, refit each step by OLS, keep the best LOO.

    The constant polynomial is added to the pool if missing and kept in
    every refit.  The constant-only model is also scored; when it wins the
    returned path has ``selected=None``.

    Parameters
    ----------
    criterion : {"corrected", "plain"}
        ``"plain"`` ranks steps by the closed-form LOO error.  ``"corrected"``
        multiplies it by :func:`larpcesk.polychaos.loo_correction_factor`,
        which stops the choice drifting along the flat noise-floor plateau
        of the LOO curve.  Each step's ``loo_error`` is always the plain
        value; ``score`` holds the ranking value.
    """
    if criterion not in SELECTION_CRITERIA:
        raise ValueError(f"criterion must be one of {SELECTION_CRITERIA}")
    candidates = _with_constant(candidates)
    y = np.asarray(y, dtype=float)
    const = candidates.constant_position()
    if np.ptp(y) == 0.0:
        basis = candidates.subset([const])
        model = PceModel(basis, np.array([y[0]]), 0.0, input_scaling)
        path = lar_path(candidates, points, y, input_scaling)
        return basis, model, path

    path = lar_path(candidates, points, y, input_scaling)
    psi_full = polychaos.information_matrix(candidates, _unit_points(points, input_scaling))

    best = _refit(candidates, [const], psi_full, y, input_scaling)
    best_score = _score(best, psi_full[:, [const]], criterion)
    best_step = None
    scored = []
    for i, step in enumerate(path.steps):
        rows = [const] + [a for a in step.active if a != const]
        try:
            model = _refit(candidates, rows, psi_full, y, input_scaling)
        except IllConditionedError:
            scored.append(replace(step, loo_error=math.inf, score=math.inf))
            continue
        score = _score(model, psi_full[:, rows], criterion)
        scored.append(replace(step, loo_error=model.loo_error, score=score))
        if score < best_score:
            best, best_score, best_step = model, score, i

    if not math.isfinite(best_score):
        raise SelectionError("every LAR step had degenerate leverage; no model could be scored")
    path = replace(path, steps=tuple(scored), selected=best_step)
    return best.basis, best, path
