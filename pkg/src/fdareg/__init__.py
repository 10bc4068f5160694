"""Scalar-on-function linear regression with heteroscedasticity-adaptive
weighting: principal component series estimators, a power-of-the-mean
variance model, weighted refits on the original or weight-adapted basis,
leave-one-out selection of the truncation levels, and a simulation harness
for evaluating the weighted predictors against the unweighted baseline.
"""

from .estimators import (
    AdaptiveFunctionalRegression,
    FunctionalLinearRegression,
    WeightedFunctionalRegression,
)
from .exceptions import DegenerateFitError, GridMismatchError
from .fpca import PCBasis, empirical_pca, score, weighted_pca
from .grids import Curve, Grid, Sample, inner_product, resample
from .linmodel import LinearFit, fit_unweighted, predict, residuals
from .selection import CVResult, Pipeline, cross_validate, fit_pipeline
from .simulate import (
    AmseCheckResult,
    ExperimentReport,
    GeneratedSample,
    ScoreVarianceSpec,
    SyntheticDesign,
    amse_factor_check,
    generate_sample,
    split_experiment,
)
from .varmodel import VarianceModel, fit_power_of_mean
from .wls import (
    WeightedFit,
    fit_weighted_check,
    fit_weighted_tilde,
    predict_weighted,
)

__version__ = "0.1.0"

__all__ = [
    "AdaptiveFunctionalRegression",
    "AmseCheckResult",
    "CVResult",
    "Curve",
    "DegenerateFitError",
    "ExperimentReport",
    "FunctionalLinearRegression",
    "GeneratedSample",
    "Grid",
    "GridMismatchError",
    "LinearFit",
    "PCBasis",
    "Pipeline",
    "Sample",
    "ScoreVarianceSpec",
    "SyntheticDesign",
    "VarianceModel",
    "WeightedFit",
    "WeightedFunctionalRegression",
    "amse_factor_check",
    "cross_validate",
    "empirical_pca",
    "fit_pipeline",
    "fit_power_of_mean",
    "fit_unweighted",
    "fit_weighted_check",
    "fit_weighted_tilde",
    "generate_sample",
    "inner_product",
    "predict",
    "predict_weighted",
    "resample",
    "residuals",
    "score",
    "split_experiment",
    "weighted_pca",
    "__version__",
]
