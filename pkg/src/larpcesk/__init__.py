"""Universal Stochastic Kriging with a sparse LAR-selected polynomial chaos trend."""
__version__ = "0.1.0"

from .base import CorrelationParams, Prediction, TrendKind, TrendModel
from .kriging import KrigingModel, fit_kriging, predict_kriging
from .lar import LarPath, lar_path, select_sparse_basis
from .optimize import GaConfig, ga_maximize
from .polychaos import InputScaling, PceBasis, PceModel, PolynomialFamily, enumerate_basis, fit_ols
from .sk import (
    ExperimentalDesign,
    SkModel,
    fit_full_pce_sk,
    fit_lar_pce_sk,
    fit_ordinary_sk,
    fit_sk,
    predict_sk,
)

__all__ = [
    "CorrelationParams", "ExperimentalDesign", "GaConfig", "InputScaling", "KrigingModel",
    "LarPath", "PceBasis", "PceModel", "PolynomialFamily", "Prediction", "SkModel",
    "TrendKind", "TrendModel", "enumerate_basis", "fit_full_pce_sk", "fit_kriging",
    "fit_lar_pce_sk", "fit_ols", "fit_ordinary_sk", "fit_sk", "ga_maximize", "lar_path",
    "predict_kriging", "predict_sk", "select_sparse_basis",
]
