"""Macro-replicated benchmark runs and their summary tables."""
from __future__ import annotations

import csv
import json
import logging
import math
import platform
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from statistics import mean, median

import numpy as np

from . import _accel, metrics, simulators as sims
from .exceptions import LarPceSkError
from .optimize import GaConfig
from .sk import ExperimentalDesign, fit_full_pce_sk, fit_lar_pce_sk, fit_ordinary_sk

log = logging.getLogger(__name__)

RESULT_COLUMNS = ("scenario", "surrogate", "rep", "seed", "status", "ermse", "nmae", "sigma_vs", "n_basis", "error")
SUMMARY_COLUMNS = (
    "scenario", "surrogate", "n_ok", "n_failed",
    "mean_ermse", "median_ermse", "mean_nmae", "median_nmae",
    "mean_n_basis", "median_n_basis",
    "ermse_improvement_mean_pct", "ermse_improvement_median_pct",
    "nmae_improvement_mean_pct", "nmae_improvement_median_pct",
    "ermse_win_rate_vs_sk",
)
FAIL_FRACTION = 0.10


@dataclass(frozen=True)
class RunResult:
    scenario: str
    surrogate: str
    rep: int
    seed: int
    status: str
    ermse: float
    nmae: float
    sigma_vs: float
    n_basis: int
    wall_time: float
    error: str = ""


def rep_rng(seed: int, rep: int, stream: int = 0) -> np.random.Generator:
    """Independent stream for (master seed, macro-rep, purpose)."""
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(int(rep), int(stream))))


# --------------------------------------------------------- validation set

def validation_set(spec: sims.ScenarioSpec):
    """Shared validation set and its sigma_VS for a scenario.

    Returns ``(ValidationSet, sigma_vs, method)``.  Known-noise mode uses the
    analytic RMS noise level; the other modes draw one stochastic output
    per validation point.
    """
    size = spec.validation_size
    lo, hi = spec.domain
    rng = rep_rng(spec.seed, 2**31 - 1, 0)
    if spec.case.startswith("MM1"):
        pts = sims.equispaced(size, lo[0], hi[0])[:, None]
        truth, var = sims.mm1_true(pts[:, 0], spec.T)
        vs = metrics.ValidationSet(pts, truth, "grid")
        if spec.case == "MM1Known":
            return vs, float(np.sqrt(np.mean(var))), "analytic"
        draws = np.array([sims.mm1_simulate(x, spec.T, rng) for x in pts[:, 0]])
        return vs, metrics.sigma_vs(draws, truth), "single-draw"
    pts = sims.lhs_design(spec.dim, size, (lo, hi), rng)
    if spec.case == "EggBox":
        truth = sims.eggbox_mean(*pts.T)
        draws = sims.eggbox(*pts.T, rng)
    else:
        truth = sims.ishigami_mean(*pts.T)
        draws = sims.ishigami(*pts.T, rng, reading=spec.ishigami_noise)
    return metrics.ValidationSet(pts, truth, "lhs"), metrics.sigma_vs(draws, truth), "single-draw"


# ------------------------------------------------------- experimental design

def draw_design(spec: sims.ScenarioSpec, rng: np.random.Generator) -> ExperimentalDesign:
    """Design points, replication allocation and simulator outputs for one macro-rep."""
    lo, hi = spec.domain
    if spec.case.startswith("MM1"):
        x = sims.equispaced(spec.k, lo[0], hi[0])
        _, var = sims.mm1_true(x, spec.T)
        if spec.case == "MM1Known":
            if spec.known_noise_simulator == "des":
                y = np.array([sims.mm1_simulate(xi, spec.T, rng) for xi in x])
            else:
                y = sims.synthetic_known_noise(x, spec.T, rng)
            return ExperimentalDesign.from_known_noise(x[:, None], y, var)
        n = sims.allocate_replications(var, spec.C, spec.min_replications)
        outputs = [np.array([sims.mm1_simulate(xi, spec.T, rng) for _ in range(ni)]) for xi, ni in zip(x, n)]
        return ExperimentalDesign.from_outputs(x[:, None], outputs)

    pts = sims.lhs_design(spec.dim, spec.k, (lo, hi), rng)
    if spec.case == "EggBox":
        var = sims.eggbox_noise_variance(*pts.T)
        n = sims.allocate_replications(var, spec.C, spec.min_replications)
        outputs = [sims.eggbox(np.full(ni, p[0]), np.full(ni, p[1]), rng) for p, ni in zip(pts, n)]
    else:
        var = sims.ishigami_noise_sd(*pts.T, reading=spec.ishigami_noise) ** 2
        n = sims.allocate_replications(var, spec.C, spec.min_replications)
        outputs = [
            sims.ishigami(*(np.full(ni, c) for c in p), rng, reading=spec.ishigami_noise)
            for p, ni in zip(pts, n)
        ]
    return ExperimentalDesign.from_outputs(pts, outputs)


def fit_surrogate(name: str, spec: sims.ScenarioSpec, ed: ExperimentalDesign, ga: GaConfig):
    domain = spec.domain
    if name == "sk":
        return fit_ordinary_sk(ed, ga, domain, beta_mode=spec.beta_mode)
    if name == "lar_pce_sk":
        return fit_lar_pce_sk(
            ed, spec.p, spec.q, ga, domain, criterion=spec.lar_criterion, beta_mode=spec.beta_mode
        )
    if name == "full_pce_sk":
        return fit_full_pce_sk(ed, spec.p_full, spec.q, ga, domain, beta_mode=spec.beta_mode)
    raise ValueError(f"unknown surrogate {name!r}")


def run_rep(spec: sims.ScenarioSpec, rep: int, vs=None, sigma=None, dump_dir=None) -> list:
    """All surrogates of one macro-replication, fitted on identical data."""
    if vs is None:
        vs, sigma, _ = validation_set(spec)
    rng = rep_rng(spec.seed, rep, 1)
    ga_seed = int(rng.integers(0, 2**63 - 1))
    ga = GaConfig(**spec.ga).with_seed(ga_seed)
    rows = []
    try:
        ed = draw_design(spec, rng)
    except (LarPceSkError, ValueError, np.linalg.LinAlgError) as exc:
        return [RunResult(spec.name, s, rep, spec.seed, "failed", math.nan, math.nan, sigma, 0, 0.0,
                          f"design: {exc}") for s in spec.surrogates]
    if dump_dir is not None:
        outputs = ed.raw_outputs or [np.array([m]) for m in ed.sample_means]
        sims.write_ed_csv(Path(dump_dir) / f"ed_{spec.name}_rep{rep:03d}.csv", ed.points, outputs)
    for name in spec.surrogates:
        t0 = time.perf_counter()
        try:
            model = fit_surrogate(name, spec, ed, ga)
            pred = model.predict(vs.points).mean
            rows.append(RunResult(
                spec.name, name, rep, spec.seed, "ok",
                metrics.ermse(pred, vs.true_means), metrics.nmae(pred, vs.true_means, sigma),
                sigma, model.n_basis, time.perf_counter() - t0,
            ))
        except (LarPceSkError, ValueError, np.linalg.LinAlgError) as exc:
            log.warning("%s rep %d %s failed: %s", spec.name, rep, name, exc)
            rows.append(RunResult(spec.name, name, rep, spec.seed, "failed", math.nan, math.nan,
                                  sigma, 0, time.perf_counter() - t0, str(exc)))
    return rows


def _rep_worker(args):
    spec_dict, rep, vs_points, vs_truth, sigma, dump_dir = args
    spec = sims.ScenarioSpec.from_dict(spec_dict)
    vs = metrics.ValidationSet(vs_points, vs_truth)
    return run_rep(spec, rep, vs, sigma, dump_dir)


def run_scenario(spec: sims.ScenarioSpec, jobs: int = 1, dump_dir=None, progress=None) -> list:
    """Run every macro-replication of a scenario; rows ordered by (rep, surrogate)."""
    vs, sigma, _ = validation_set(spec)
    reps = range(spec.macro_replications)
    results = []
    if jobs > 1:
        args = [(spec.to_dict(), r, vs.points, vs.true_means, sigma, dump_dir) for r in reps]
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for rows in pool.map(_rep_worker, args):
                results.extend(rows)
                if progress:
                    progress(rows)
    else:
        for r in reps:
            rows = run_rep(spec, r, vs, sigma, dump_dir)
            results.extend(rows)
            if progress:
                progress(rows)
    order = {s: i for i, s in enumerate(spec.surrogates)}
    results.sort(key=lambda rr: (rr.rep, order[rr.surrogate]))
    return results


def failed_fraction(results) -> float:
    reps = {(r.scenario, r.rep) for r in results}
    bad = {(r.scenario, r.rep) for r in results if r.status != "ok"}
    return len(bad) / len(reps) if reps else 0.0


# ---------------------------------------------------------------- summary

def improvement_pct(baseline: float, value: float) -> float:
    """Relative error reduction of ``value`` against ``baseline``, in percent."""
    if not baseline:
        return 0.0
    return 100.0 * (baseline - value) / baseline


def summarize(results) -> list:
    """Per (scenario, surrogate) means, medians and improvements over Ordinary SK."""
    results = list(results)
    if not results:
        raise ValueError("no results to summarise")
    groups: dict = {}
    for r in results:
        groups.setdefault((r.scenario, r.surrogate), []).append(r)
    base_by_rep = {(r.scenario, r.rep): r.ermse for r in results if r.surrogate == "sk" and r.status == "ok"}
    stats = {}
    for key, rows in groups.items():
        ok = [r for r in rows if r.status == "ok"]
        e = [r.ermse for r in ok]
        n = [r.nmae for r in ok]
        b = [r.n_basis for r in ok]
        wins = [r.ermse < base_by_rep[(r.scenario, r.rep)] for r in ok if (r.scenario, r.rep) in base_by_rep]
        stats[key] = {
            "scenario": key[0], "surrogate": key[1], "n_ok": len(ok), "n_failed": len(rows) - len(ok),
            "mean_ermse": mean(e) if e else math.nan, "median_ermse": median(e) if e else math.nan,
            "mean_nmae": mean(n) if n else math.nan, "median_nmae": median(n) if n else math.nan,
            "mean_n_basis": mean(b) if b else math.nan, "median_n_basis": median(b) if b else math.nan,
            "ermse_win_rate_vs_sk": (sum(wins) / len(wins)) if wins else math.nan,
        }
    for (scen, surr), s in stats.items():
        base = stats.get((scen, "sk"))
        for metric in ("ermse", "nmae"):
            for agg in ("mean", "median"):
                col = f"{metric}_improvement_{agg}_pct"
                s[col] = math.nan if base is None else improvement_pct(base[f"{agg}_{metric}"], s[f"{agg}_{metric}"])
    return [stats[k] for k in groups]


# -------------------------------------------------------------------- I/O

def _fmt(v):
    if isinstance(v, float):
        return "" if math.isnan(v) else repr(v)
    return str(v)


def write_results(path, results):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RESULT_COLUMNS)
        for r in results:
            w.writerow([_fmt(getattr(r, c)) for c in RESULT_COLUMNS])


def write_timings(path, results):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("scenario", "surrogate", "rep", "wall_time"))
        for r in results:
            w.writerow([r.scenario, r.surrogate, r.rep, f"{r.wall_time:.4f}"])


def read_results(path) -> list:
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            out.append(RunResult(
                row["scenario"], row["surrogate"], int(row["rep"]), int(row["seed"]), row["status"],
                float(row["ermse"] or "nan"), float(row["nmae"] or "nan"), float(row["sigma_vs"] or "nan"),
                int(row["n_basis"]), math.nan, row["error"],
            ))
    return out


def write_summary(path, summary):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_COLUMNS)
        for s in summary:
            w.writerow([_fmt(s[c]) for c in SUMMARY_COLUMNS])


def metadata(specs, sigma_methods) -> dict:
    import numba
    import scipy

    from . import __version__

    return {
        "package": "larpcesk",
        "version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "numba": numba.__version__,
        "numba_kernels": _accel.USE_NUMBA,
        "scenarios": [s.to_dict() for s in specs],
        "sigma_vs_method": sigma_methods,
        "results_columns": list(RESULT_COLUMNS),
        "summary_columns": list(SUMMARY_COLUMNS),
    }


def write_metadata(path, specs, sigma_methods):
    Path(path).write_text(json.dumps(metadata(specs, sigma_methods), indent=2, sort_keys=True) + "\n")
