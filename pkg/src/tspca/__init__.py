"""Segmenting vector time series into uncorrelated lower-dimensional subseries."""

from .exceptions import (
    ContractError,
    DegenerateSeriesError,
    ParseError,
    RangeError,
    SingularCovarianceError,
    StageError,
    TSPCAError,
)
from .forecast import ForecastReport, VARModel, fit_var, forecast, restrict_var, rolling_compare
from .grouping import GroupPartition, union_groups
from .linalg import distance_D, distance_D_general, mean_error_Dbar, sym_eigen
from .prewhiten import ARModel, fit_ar, prewhiten
from .segmentation import SegmentConfig, SegmentationResult, segment, segment_volatility
from .simulation import EXAMPLE5, EXAMPLE6, LatentDesign, classify, generate, monte_carlo
from .timeseries import TimeSeriesMatrix, load_csv, sample_autocov, standardize
from .wmatrix import ThresholdConfig, build_w_plugin, build_w_thresholded, build_w_volatility

__version__ = "0.1.0"

__all__ = [
    "ARModel", "ContractError", "DegenerateSeriesError", "EXAMPLE5", "EXAMPLE6",
    "ForecastReport", "GroupPartition", "LatentDesign", "ParseError", "RangeError",
    "SegmentConfig", "SegmentationResult", "SingularCovarianceError", "StageError",
    "TSPCAError", "ThresholdConfig", "TimeSeriesMatrix", "VARModel", "build_w_plugin",
    "build_w_thresholded", "build_w_volatility", "classify", "distance_D",
    "distance_D_general", "fit_ar", "fit_var", "forecast", "generate", "load_csv",
    "mean_error_Dbar", "monte_carlo", "prewhiten", "restrict_var", "rolling_compare",
    "sample_autocov", "segment", "segment_volatility", "standardize", "sym_eigen",
    "union_groups",
]
