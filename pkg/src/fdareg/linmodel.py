"""Unweighted orthogonal-series least squares on principal component scores.

Because the centred score columns are diagonal in the empirical basis, the
least-squares problem decouples and each coefficient has the closed form

    b_j = sum_i (S_ij - mean_j)(Y_i - mean_Y) / sum_i (S_ij - mean_j)^2 ,

which this module uses directly rather than solving a linear system.  The
intercept is carried implicitly through the response mean and score means;
predictions are mean_Y + sum_j b_j (score_j(x) - mean_j).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import DegenerateFitError
from .fpca import PCBasis
from .grids import Curve, Sample, require_same_grid

__all__ = ["LinearFit", "fit_unweighted", "predict", "predict_values", "residuals"]


@dataclass(frozen=True)
class LinearFit:
    """Fitted unweighted series estimator with truncation level `r`."""

    basis: PCBasis
    r: int
    coeffs: np.ndarray
    y_mean: float
    score_means: np.ndarray

    @property
    def intercept(self) -> float:
        """Explicit intercept: y_mean - sum_j b_j * score_mean_j."""
        return float(self.y_mean - self.coeffs @ self.score_means)


def fit_unweighted(sample: Sample, basis: PCBasis, r: int) -> LinearFit:
    """Closed-form series fit of the responses on the first `r` scores.

    `r = 0` is allowed and yields the intercept-only predictor (the sample
    mean response).  Raises if any requested component has (numerically)
    zero score variance.
    """
    if basis.flavor != "unweighted":
        raise ValueError("fit_unweighted needs an unweighted-flavor basis")
    require_same_grid(sample.grid, basis.grid)
    if not 0 <= r <= basis.n_components:
        raise DegenerateFitError(
            f"truncation level {r} exceeds basis capacity {basis.n_components}"
        )
    y = sample.responses
    y_mean = float(y.mean())
    if r == 0:
        return LinearFit(basis, 0, np.empty(0), y_mean, np.empty(0))

    scores = basis.scores(sample.curve_values, r)
    score_means = scores.mean(axis=0)
    centred = scores - score_means
    denom = np.einsum("ij,ij->j", centred, centred)
    floor = np.finfo(float).tiny * y.size
    bad = np.nonzero(denom <= floor)[0]
    if bad.size:
        raise DegenerateFitError(
            f"component {bad[0] + 1} has zero score variance; lower r below {bad[0] + 1}"
        )
    coeffs = centred.T @ (y - y_mean) / denom
    return LinearFit(basis, r, coeffs, y_mean, score_means)


def predict_values(fit: LinearFit, curve_values: np.ndarray) -> np.ndarray:
    """Predictions for rows of `curve_values` (already on the fit's grid)."""
    values = np.asarray(curve_values, dtype=float)
    if fit.r == 0:
        shape = values.shape[:-1]
        return np.full(shape, fit.y_mean) if shape else np.float64(fit.y_mean)
    scores = fit.basis.scores(values, fit.r)
    return fit.y_mean + (scores - fit.score_means) @ fit.coeffs


def predict(fit: LinearFit, x: Curve) -> float:
    """Predicted response for a single curve."""
    require_same_grid(x.grid, fit.basis.grid)
    return float(predict_values(fit, x.values))


def residuals(fit: LinearFit, sample: Sample) -> np.ndarray:
    """Training residuals; their mean is zero because the intercept absorbs it."""
    require_same_grid(sample.grid, fit.basis.grid)
    return sample.responses - predict_values(fit, sample.curve_values)
