"""Elitist real-coded genetic algorithm for bounded maximisation."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .exceptions import OptimizationError

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class GaConfig:
    """GA settings.  ``bounds`` is a list of ``(lo, hi)`` per gene; fitting
    routines fill it in when left as ``None``."""

    population: int = 40
    generations: int = 100
    crossover_rate: float = 0.9
    mutation_rate: float = 0.1
    mutation_scale: float = 0.1
    elitism: int = 2
    tournament_size: int = 3
    sbx_eta: float = 10.0
    stall_generations: int = 20
    seed: int = 0
    bounds: Sequence | None = None
    polish: bool = True
    polish_steps: int = 50
    polish_width: float = 0.05

    def __post_init__(self):
        if self.population < 4:
            raise ValueError("population must be >= 4")
        for name in ("crossover_rate", "mutation_rate"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must be a probability")
        if not 1 <= self.elitism < self.population:
            raise ValueError("elitism must be in [1, population)")
        if self.bounds is not None:
            _check_bounds(self.bounds)

    def with_bounds(self, bounds) -> "GaConfig":
        return replace(self, bounds=[tuple(map(float, b)) for b in bounds])

    def with_seed(self, seed: int) -> "GaConfig":
        return replace(self, seed=int(seed))


@dataclass
class GaResult:
    best_genes: np.ndarray
    best_value: float
    history: list = field(default_factory=list)
    evaluations: int = 0


def _check_bounds(bounds):
    b = np.asarray(bounds, dtype=float)
    if b.ndim != 2 or b.shape[1] != 2 or not np.all(np.isfinite(b)) or np.any(b[:, 0] >= b[:, 1]):
        raise ValueError("bounds must be finite (lo, hi) pairs with lo < hi")
    return b


def _fitness(objective, genes):
    val = objective(genes)
    if val is None:
        return -math.inf
    val = float(val)
    return val if math.isfinite(val) else -math.inf


def _golden_refine(objective, x, value, d, lo, hi, steps):
    a, b = lo, hi
    xs = x.copy()

    def at(t):
        xs[d] = t
        return _fitness(objective, xs)

    c1 = b - GOLDEN * (b - a)
    c2 = a + GOLDEN * (b - a)
    f1, f2 = at(c1), at(c2)
    best_t, best_v = x[d], value
    for _ in range(steps):
        if f1 >= f2:
            if f1 > best_v:
                best_t, best_v = c1, f1
            b, c2, f2 = c2, c1, f1
            c1 = b - GOLDEN * (b - a)
            f1 = at(c1)
        else:
            if f2 > best_v:
                best_t, best_v = c2, f2
            a, c1, f1 = c1, c2, f2
            c2 = a + GOLDEN * (b - a)
            f2 = at(c2)
    for t, v in ((c1, f1), (c2, f2)):
        if v > best_v:
            best_t, best_v = t, v
    out = x.copy()
    out[d] = best_t
    return out, best_v, 2 + steps


def ga_maximize(objective: Callable[[np.ndarray], float], config: GaConfig) -> GaResult:
    """Maximise ``objective`` over the box ``config.bounds``.

    Non-finite or ``None`` objective values count as infeasible (fitness
    ``-inf``).  Selection is by tournament, recombination is simulated
    binary crossover, mutation is per-gene Gaussian with a standard
    deviation of ``mutation_scale`` times the box width.  The best
    ``elitism`` individuals survive each generation unchanged, so
    ``history`` (best fitness after each generation, the initial
    population first) is non-decreasing.

    Raises
    ------
    OptimizationError
        If ten successive initial populations are entirely infeasible.
    """
    if config.bounds is None:
        raise ValueError("GaConfig.bounds must be set")
    box = _check_bounds(config.bounds)
    lo, hi = box[:, 0], box[:, 1]
    width = hi - lo
    n_genes = box.shape[0]
    n_pop = config.population
    rng = np.random.default_rng(config.seed)
    evals = 0

    def init_population():
        # stratified (Latin) start covers each gene's range evenly
        strata = (rng.permuted(np.tile(np.arange(n_pop), (n_genes, 1)), axis=1).T
                  + rng.random((n_pop, n_genes))) / n_pop
        return lo + strata * width

    for _ in range(10):
        pop = init_population()
        fit = np.array([_fitness(objective, g) for g in pop])
        evals += n_pop
        if np.any(np.isfinite(fit)):
            break
    else:
        raise OptimizationError("all initial populations were infeasible after 10 re-seeds")

    def tournament():
        picks = rng.integers(0, n_pop, size=config.tournament_size)
        return pop[picks[np.argmax(fit[picks])]]

    def sbx(p1, p2):
        c1, c2 = p1.copy(), p2.copy()
        if rng.random() >= config.crossover_rate:
            return c1, c2
        u = rng.random(n_genes)
        beta = np.where(
            u <= 0.5,
            (2.0 * u) ** (1.0 / (config.sbx_eta + 1.0)),
            (1.0 / (2.0 * (1.0 - u))) ** (1.0 / (config.sbx_eta + 1.0)),
        )
        swap = rng.random(n_genes) < 0.5
        mid, half = 0.5 * (p1 + p2), 0.5 * np.abs(p2 - p1)
        c1 = np.where(swap, mid - beta * half, mid + beta * half)
        c2 = np.where(swap, mid + beta * half, mid - beta * half)
        return c1, c2

    def mutate(c):
        mask = rng.random(n_genes) < config.mutation_rate
        c = c + mask * rng.normal(0.0, config.mutation_scale, n_genes) * width
        return np.clip(c, lo, hi)

    order = np.argsort(-fit, kind="stable")
    pop, fit = pop[order], fit[order]
    history = [float(fit[0])]
    stall = 0
    for _ in range(config.generations):
        children = []
        while len(children) < n_pop - config.elitism:
            c1, c2 = sbx(tournament(), tournament())
            children.append(mutate(c1))
            if len(children) < n_pop - config.elitism:
                children.append(mutate(c2))
        children = np.array(children)
        child_fit = np.array([_fitness(objective, g) for g in children])
        evals += len(children)
        pop = np.vstack([pop[: config.elitism], children])
        fit = np.concatenate([fit[: config.elitism], child_fit])
        order = np.argsort(-fit, kind="stable")
        pop, fit = pop[order], fit[order]
        improved = fit[0] > history[-1] + 1e-12 * max(1.0, abs(history[-1]))
        history.append(float(fit[0]))
        stall = 0 if improved else stall + 1
        if config.stall_generations and stall >= config.stall_generations:
            break

    best, best_val = pop[0].copy(), float(fit[0])
    if config.polish and config.polish_steps > 0 and math.isfinite(best_val):
        for d in range(n_genes):
            half = config.polish_width * width[d]
            a, b = max(lo[d], best[d] - half), min(hi[d], best[d] + half)
            best, best_val, used = _golden_refine(
                objective, best, best_val, d, a, b, config.polish_steps
            )
            evals += used
    return GaResult(best, best_val, history, evals)
