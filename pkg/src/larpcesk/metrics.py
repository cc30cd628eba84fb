"""Validation-set error metrics."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ValidationSet:
    """Dense validation points with their noise-free mean response."""

    points: np.ndarray
    true_means: np.ndarray
    mode: str = "grid"

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        truth = np.asarray(self.true_means, dtype=float).reshape(-1)
        if pts.shape[0] != truth.size:
            raise ValueError("validation points and true means differ in length")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "true_means", truth)

    @property
    def size(self) -> int:
        return self.true_means.size


def _pair(a, b):
    a = np.asarray(a, dtype=float).reshape(-1)
    b = np.asarray(b, dtype=float).reshape(-1)
    if a.size != b.size:
        raise ValueError(f"length mismatch: {a.size} vs {b.size}")
    if a.size == 0:
        raise ValueError("empty input")
    return a, b


def ermse(predictions, truth) -> float:
    """Empirical root mean squared error."""
    p, t = _pair(predictions, truth)
    return float(np.sqrt(np.mean((p - t) ** 2)))


def sigma_vs(sample_means, truth) -> float:
    """RMS deviation of validation-set sample means from the true means."""
    m, t = _pair(sample_means, truth)
    return float(np.sqrt(np.mean((m - t) ** 2)))


def nmae(predictions, truth, sigma_vs_value: float) -> float:
    """Maximum absolute error normalised by ``K * sigma_VS``.

    The factor ``K`` (validation-set size) is part of the definition, so
    values shrink as the validation set grows.
    """
    if not sigma_vs_value > 0:
        raise ValueError("sigma_vs must be positive")
    p, t = _pair(predictions, truth)
    return float(np.max(np.abs(p - t)) / (p.size * sigma_vs_value))
