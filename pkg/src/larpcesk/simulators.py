"""Stochastic test simulators, design generation and replication allocation.

All random draws take an explicit ``numpy.random.Generator``; nothing
touches global RNG state.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from . import kernels
from .exceptions import ConfigError

MM1_DOMAIN = (0.3, 0.9)
EGGBOX_DOMAIN = (-1.0, 1.0)
ISHIGAMI_DOMAIN = (-math.pi, math.pi)
WARMUP_FRACTION = 0.1


# --------------------------------------------------------------------- M/M/1

def mm1_true(x, T=None):
    """Analytic mean sojourn time ``1/(1-x)`` and variance of a run of length ``T``.

    The variance is ``2x(1+x) / (T (1-x)^4)``; it is ``None`` if ``T`` is not given.
    """
    x = np.asarray(x, dtype=float)
    if np.any((x <= 0) | (x >= 1)):
        raise ValueError("arrival rate must lie in (0, 1)")
    mean = 1.0 / (1.0 - x)
    var = None if T is None else 2.0 * x * (1.0 + x) / (T * (1.0 - x) ** 4)
    if mean.ndim == 0:
        mean = float(mean)
        var = None if var is None else float(var)
    return mean, var


def mm1_simulate(
    x: float, T: float, rng: np.random.Generator, warmup_fraction=WARMUP_FRACTION, stationary_start=True
) -> float:
    """One M/M/1 run: average sojourn time of customers arriving in ``[wT, T)``.

    Arrivals are Poisson with rate ``x`` and services exponential with
    rate 1.  With ``stationary_start`` the first customer's queue delay is
    drawn from the steady-state law (zero with probability ``1 - x``, else
    exponential with rate ``1 - x``), which removes initialisation bias;
    otherwise the system starts empty.  Waiting times follow the Lindley
    recursion (see :func:`larpcesk.kernels.lindley_waits`).
    """
    if not 0.0 < x < 1.0:
        raise ValueError("arrival rate must lie in (0, 1)")
    if T <= 0:
        raise ValueError("run length must be positive")
    expected = x * T
    n = int(expected + 6.0 * math.sqrt(expected) + 20)
    gaps = rng.exponential(1.0 / x, size=n)
    arrivals = np.cumsum(gaps)
    while arrivals[-1] < T:
        more = rng.exponential(1.0 / x, size=n)
        gaps = np.concatenate([gaps, more])
        arrivals = np.concatenate([arrivals, arrivals[-1] + np.cumsum(more)])
    n_in = int(np.searchsorted(arrivals, T))
    services = rng.exponential(1.0, size=n_in)
    if n_in == 0:
        return 1.0
    w0 = 0.0
    if stationary_start and rng.random() < x:
        w0 = rng.exponential(1.0 / (1.0 - x))
    waits = kernels.lindley_waits(gaps[:n_in], services, w0)
    first = int(np.searchsorted(arrivals[:n_in], warmup_fraction * T))
    if first >= n_in:
        first = 0
    return float(np.mean(waits[first:] + services[first:]))


def synthetic_known_noise(x, T, rng: np.random.Generator):
    """Analytic M/M/1 mean plus Gaussian noise with the analytic run variance."""
    mean, var = mm1_true(x, T)
    return mean + np.sqrt(var) * rng.standard_normal(np.shape(mean))


# ------------------------------------------------------------------ egg box

def eggbox_mean(x1, x2):
    return np.sin(9.0 * np.asarray(x1) ** 2) + np.sin(9.0 * np.asarray(x2) ** 2)


def eggbox_noise_variance(x1, x2):
    return 2.0 + np.cos(np.pi + (np.asarray(x1) + np.asarray(x2)) / 2.0)


def _check_box(lo, hi, *xs):
    for x in xs:
        x = np.asarray(x)
        if np.any(x < lo - 1e-12) or np.any(x > hi + 1e-12):
            raise ValueError(f"input outside the domain [{lo:g}, {hi:g}]")


def eggbox(x1, x2, rng: np.random.Generator | None, noise=True):
    """One draw of the noisy egg-box surface; ``noise=False`` returns the mean."""
    _check_box(*EGGBOX_DOMAIN, x1, x2)
    mean = eggbox_mean(x1, x2)
    if not noise:
        return mean
    sd = np.sqrt(eggbox_noise_variance(x1, x2))
    return mean + sd * rng.standard_normal(np.shape(mean))


# ----------------------------------------------------------------- Ishigami

def ishigami_mean(x1, x2, x3):
    s1 = np.sin(x1)
    return s1 + 7.0 * np.sin(x2) ** 2 + 0.1 * np.asarray(x3) ** 4 * s1


def ishigami_noise_sd(x1, x2, x3, reading="variance"):
    """Noise standard deviation.

    ``reading="variance"`` treats ``sqrt|f|`` as the noise variance (sd
    ``|f|**0.25``); ``reading="std"`` treats it as the standard deviation.
    """
    root = np.sqrt(np.abs(ishigami_mean(x1, x2, x3)))
    if reading == "variance":
        return np.sqrt(root)
    if reading == "std":
        return root
    raise ValueError("reading must be 'variance' or 'std'")


def ishigami(x1, x2, x3, rng: np.random.Generator | None, noise=True, reading="variance"):
    _check_box(*ISHIGAMI_DOMAIN, x1, x2, x3)
    mean = ishigami_mean(x1, x2, x3)
    if not noise:
        return mean
    return mean + ishigami_noise_sd(x1, x2, x3, reading) * rng.standard_normal(np.shape(mean))


# ----------------------------------------------------------------- designs

def lhs_design(m: int, k: int, domain, rng) -> np.ndarray:
    """Jittered Latin hypercube of ``k`` points in an ``m``-dimensional box.

    ``domain`` is ``(lower, upper)`` with scalars or per-dimension arrays;
    ``rng`` is a Generator or an integer seed.
    """
    if k < 1 or m < 1:
        raise ValueError("need k >= 1 and m >= 1")
    rng = np.random.default_rng(rng)
    lower, upper = (np.broadcast_to(np.asarray(b, dtype=float), (m,)) for b in domain)
    strata = np.stack([rng.permutation(k) for _ in range(m)], axis=1)
    u = (strata + rng.random((k, m))) / k
    return lower + u * (upper - lower)


def allocate_replications(variances, budget: int, min_per_point: int = 1) -> np.ndarray:
    """Split ``budget`` replications proportionally to ``sqrt(V_i)``.

    Real targets are rounded by largest remainder (ties to the lower
    index) with at least ``min_per_point`` per point; the result sums to
    ``budget`` exactly.
    """
    v = np.asarray(variances, dtype=float).reshape(-1)
    k = v.size
    if np.any(v < 0):
        raise ValueError("variances must be non-negative")
    if budget < k * min_per_point:
        raise ValueError(f"budget {budget} cannot give {min_per_point} replication(s) to {k} points")
    sd = np.sqrt(v)
    target = budget * (sd / sd.sum() if sd.sum() > 0 else np.full(k, 1.0 / k))
    n = np.maximum(np.floor(target).astype(np.int64), min_per_point)
    left = budget - int(n.sum())
    if left > 0:
        order = np.argsort(-(target - np.floor(target)), kind="stable")
        n[order[:left]] += 1
    while left < 0:
        # take back from the points furthest above target
        over = np.where(n > min_per_point, n - target, -np.inf)
        j = int(np.argmax(over))
        n[j] -= 1
        left += 1
    return n


def equispaced(k: int, lo: float, hi: float) -> np.ndarray:
    return np.linspace(lo, hi, k)


def write_ed_csv(path, points, outputs):
    """Dump a design to CSV: coordinates, ``n_i``, then one column per replication."""
    points = np.asarray(points, dtype=float)
    if points.ndim == 1:
        points = points[:, None]
    width = max(len(o) for o in outputs)
    header = [f"x{d + 1}" for d in range(points.shape[1])] + ["n"] + [f"r{j + 1}" for j in range(width)]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for pt, out in zip(points, outputs):
            w.writerow([repr(float(c)) for c in pt] + [len(out)] + [repr(float(o)) for o in out]
                       + [""] * (width - len(out)))


# ---------------------------------------------------------------- scenarios

CASES = ("MM1Known", "MM1Budget", "EggBox", "Ishigami")
SURROGATES = ("sk", "lar_pce_sk", "full_pce_sk")


@dataclass(frozen=True)
class ScenarioSpec:
    """One benchmark scenario.

    ``T`` is the M/M/1 run length; ``C`` the replication budget (unused in
    known-noise mode).  ``p`` is the LAR candidate degree, ``p_full`` the
    full-PCE degree (``None`` drops that surrogate).
    """

    name: str
    case: str
    k: int
    p: int
    q: float = 1.0
    T: float | None = None
    C: int | None = None
    p_full: int | None = None
    seed: int = 0
    macro_replications: int = 20
    surrogates: tuple = ()
    vs_size: int | None = None
    min_replications: int = 2
    known_noise_simulator: str = "synthetic"
    ishigami_noise: str = "variance"
    beta_mode: str = "gls"
    lar_criterion: str = "corrected"
    ga: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.case not in CASES:
            raise ConfigError(f"unknown case {self.case!r}; expected one of {CASES}")
        if self.k < 2:
            raise ConfigError("k must be >= 2")
        if self.p < 0 or not (0 < self.q <= 1):
            raise ConfigError("need p >= 0 and 0 < q <= 1")
        if self.case.startswith("MM1"):
            if self.T is None or self.T <= 0:
                raise ConfigError("M/M/1 scenarios need a positive run length T")
        if self.case != "MM1Known":
            if self.C is None:
                raise ConfigError(f"{self.case} needs a replication budget C")
            if self.C < self.k * self.min_replications:
                raise ConfigError(f"budget C={self.C} < k * min_replications")
        if self.macro_replications < 1:
            raise ConfigError("macro_replications must be >= 1")
        if self.known_noise_simulator not in ("synthetic", "des"):
            raise ConfigError("known_noise_simulator must be 'synthetic' or 'des'")
        if self.ishigami_noise not in ("variance", "std"):
            raise ConfigError("ishigami_noise must be 'variance' or 'std'")
        if self.beta_mode not in ("gls", "ols"):
            raise ConfigError("beta_mode must be 'gls' or 'ols'")
        if self.lar_criterion not in ("corrected", "plain"):
            raise ConfigError("lar_criterion must be 'corrected' or 'plain'")
        surr = tuple(self.surrogates) or self.default_surrogates()
        for s in surr:
            if s not in SURROGATES:
                raise ConfigError(f"unknown surrogate {s!r}")
        if "full_pce_sk" in surr and self.p_full is None:
            raise ConfigError("full_pce_sk needs p_full")
        object.__setattr__(self, "surrogates", surr)
        object.__setattr__(self, "ga", dict(self.ga))

    def default_surrogates(self):
        # in 1-D the full basis equals LAR's candidate set, so it is not run
        if self.case.startswith("MM1") or self.p_full is None:
            return ("sk", "lar_pce_sk")
        return ("sk", "lar_pce_sk", "full_pce_sk")

    @property
    def dim(self) -> int:
        return {"MM1Known": 1, "MM1Budget": 1, "EggBox": 2, "Ishigami": 3}[self.case]

    @property
    def domain(self):
        lo, hi = {"EggBox": EGGBOX_DOMAIN, "Ishigami": ISHIGAMI_DOMAIN}.get(self.case, MM1_DOMAIN)
        return np.full(self.dim, lo), np.full(self.dim, hi)

    @property
    def validation_size(self) -> int:
        if self.vs_size is not None:
            return self.vs_size
        return 1000 if self.case.startswith("MM1") else 2048

    def to_dict(self) -> dict:
        d = asdict(self)
        d["surrogates"] = list(self.surrogates)
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "ScenarioSpec":
        data = dict(data)
        preset = data.pop("preset", None)
        if preset is not None:
            if preset not in PRESETS:
                raise ConfigError(f"unknown preset {preset!r}")
            base = PRESETS[preset].to_dict()
            base.update(data)
            data = base
        known = {f.name for f in fields(cls)}
        extra = set(data) - known
        if extra:
            raise ConfigError(f"unknown scenario keys: {sorted(extra)}")
        if "name" not in data:
            raise ConfigError("scenario needs a name")
        try:
            data["surrogates"] = tuple(data.get("surrogates") or ())
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc


def _preset_table():
    out = {}
    for i, (k, T, p) in enumerate([(10, 6000, 5), (30, 2000, 10), (50, 1200, 16)], 1):
        out[f"mm1-known-{i}"] = ScenarioSpec(f"mm1-known-{i}", "MM1Known", k, p, 1.0, T=T)
        out[f"mm1-budget-{i}"] = ScenarioSpec(f"mm1-budget-{i}", "MM1Budget", k, p, 1.0, T=T, C=500)
    for i, (k, p, pf) in enumerate([(32, 9, 5), (64, 11, 8), (128, 12, 10)], 1):
        out[f"eggbox-{i}"] = ScenarioSpec(f"eggbox-{i}", "EggBox", k, p, 0.8, C=1280, p_full=pf)
    for i, (k, p, pf) in enumerate([(64, 6, 4), (128, 8, 6), (256, 9, 7)], 1):
        out[f"ishigami-{i}"] = ScenarioSpec(f"ishigami-{i}", "Ishigami", k, p, 0.8, C=2560, p_full=pf)
    return out


PRESETS = _preset_table()


def load_config(path) -> list:
    """Read scenarios from a JSON file: one object, a list, or ``{"scenarios": [...]}``."""
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if isinstance(data, dict) and "scenarios" in data:
        data = data["scenarios"]
    if isinstance(data, dict):
        data = [data]
    if not isinstance(data, list) or not data:
        raise ConfigError("config must hold at least one scenario object")
    return [ScenarioSpec.from_dict(d) for d in data]
