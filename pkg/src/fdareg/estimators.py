"""Scikit-learn style estimators wrapping the functional regression core.

Curves are passed as ordinary (n_samples, n_points) arrays whose columns are
values on a common grid, so the estimators compose with the usual tooling
(`get_params`/`set_params`, pipelines, model selection).  The grid itself is
a constructor parameter: `None` means a uniform grid on [0, 1], otherwise an
array of points or a :class:`~fdareg.grids.Grid` may be given.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .fpca import empirical_pca
from .grids import Grid, Sample
from .linmodel import fit_unweighted, predict_values
from .selection import cross_validate, fit_pipeline
from .wls import fit_weighted_check, fit_weighted_tilde, predict_weighted_values

__all__ = [
    "FunctionalLinearRegression",
    "WeightedFunctionalRegression",
    "AdaptiveFunctionalRegression",
]


def _resolve_grid(grid, n_points: int) -> Grid:
    if grid is None:
        return Grid.uniform(0.0, 1.0, n_points)
    if not isinstance(grid, Grid):
        grid = Grid(grid)
    if len(grid) != n_points:
        raise ValueError(
            f"data has {n_points} columns but the grid has {len(grid)} points"
        )
    return grid


def _validate_curves(X, y=None):
    if y is None:
        return check_array(X, dtype=np.float64, ensure_2d=True)
    return check_X_y(X, y, dtype=np.float64, y_numeric=True)


class _FunctionalRegressorMixin(RegressorMixin):
    """Shared prediction plumbing for the functional regressors."""

    def _fit_grid(self, X) -> Grid:
        self.n_features_in_ = X.shape[1]
        self.grid_ = _resolve_grid(self.grid, X.shape[1])
        return self.grid_

    def _check_predict_input(self, X) -> np.ndarray:
        check_is_fitted(self)
        X = _validate_curves(X)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(
                f"X has {X.shape[1]} columns, expected {self.n_features_in_}"
            )
        return X


class FunctionalLinearRegression(_FunctionalRegressorMixin, BaseEstimator):
    """Orthogonal-series functional linear regression (unweighted).

    Fits the scalar-on-function linear model by ordinary least squares on
    the leading `n_components` empirical principal component scores.

    Parameters
    ----------
    n_components : int, default=1
        Frequency cut-off r; 0 gives the intercept-only model.
    grid : array-like, Grid or None
        Grid carrying the curves; None means uniform on [0, 1].

    Attributes
    ----------
    basis_ : PCBasis
        Empirical principal component basis of the training curves.
    fit_ : LinearFit
        Fitted coefficients in series form.
    coef_ : ndarray of shape (n_components,)
        Series coefficients.
    intercept_ : float
        Explicit intercept of the equivalent affine form.
    """

    def __init__(self, n_components: int = 1, grid=None):
        self.n_components = n_components
        self.grid = grid

    def fit(self, X, y):
        X, y = _validate_curves(X, y)
        grid = self._fit_grid(X)
        sample = Sample(grid, X, y)
        self.basis_ = empirical_pca(sample)
        self.fit_ = fit_unweighted(sample, self.basis_, self.n_components)
        self.coef_ = self.fit_.coeffs
        self.intercept_ = self.fit_.intercept
        return self

    def predict(self, X):
        X = self._check_predict_input(X)
        return np.asarray(predict_values(self.fit_, X), dtype=float)


class WeightedFunctionalRegression(_FunctionalRegressorMixin, BaseEstimator):
    """Weighted-least-squares functional regression with known weights.

    Parameters
    ----------
    n_components : int, default=1
        Truncation level of the weighted fit.
    variant : {'tilde', 'check'}, default='tilde'
        'tilde' runs weighted least squares on the unweighted principal
        component basis; 'check' first rebuilds the basis from the
        weight-adapted covariance, which diagonalizes the problem.
    grid : array-like, Grid or None

    Attributes
    ----------
    fit_ : WeightedFit
    basis_ : PCBasis
        The basis the coefficients live in (matches `variant`).
    """

    def __init__(self, n_components: int = 1, variant: str = "tilde", grid=None):
        self.n_components = n_components
        self.variant = variant
        self.grid = grid

    def fit(self, X, y, sample_weight=None):
        if self.variant not in ("tilde", "check"):
            raise ValueError(f"unknown variant {self.variant!r}")
        X, y = _validate_curves(X, y)
        grid = self._fit_grid(X)
        sample = Sample(grid, X, y)
        w = (
            np.ones(sample.n_observations)
            if sample_weight is None
            else np.asarray(sample_weight, dtype=float)
        )
        if self.variant == "tilde":
            unweighted = empirical_pca(sample)
            self.fit_ = fit_weighted_tilde(sample, unweighted, w, self.n_components)
        else:
            self.fit_ = fit_weighted_check(sample, w, self.n_components)
        self.basis_ = self.fit_.basis
        return self

    def predict(self, X):
        X = self._check_predict_input(X)
        return np.asarray(predict_weighted_values(self.fit_, X), dtype=float)


class AdaptiveFunctionalRegression(_FunctionalRegressorMixin, BaseEstimator):
    """Full heteroscedasticity-adaptive pipeline.

    Chains pilot fit, power-of-the-mean variance model, reciprocal-variance
    weights and the weighted fit.  Truncation levels left as None are chosen
    jointly by leave-one-out cross-validation.

    Parameters
    ----------
    variant : {'tilde', 'check'}, default='tilde'
    r : int or None
        Pilot truncation; None selects by cross-validation.
    k : int or None
        Weighted truncation; None selects by cross-validation.
    r_max, k_max : int or None
        Search ranges when cross-validating; default min(20, (n - 1) // 4).
    cv_folds : int or None
        None runs leave-one-out; an integer p switches to a deterministic
        round-robin p-fold split.
    grid : array-like, Grid or None
    var_options : dict or None
        Keyword arguments for the variance-model fit (e.g. `c2_max`,
        `weight_cap_ratio`).

    Attributes
    ----------
    pipeline_ : Pipeline
        The fitted pilot/variance/weighted chain.
    cv_result_ : CVResult or None
        Cross-validation table when selection ran.
    r_, k_ : int
        Truncations actually used.
    """

    def __init__(
        self,
        variant: str = "tilde",
        r: int | None = None,
        k: int | None = None,
        r_max: int | None = None,
        k_max: int | None = None,
        cv_folds: int | None = None,
        grid=None,
        var_options: dict | None = None,
    ):
        self.variant = variant
        self.r = r
        self.k = k
        self.r_max = r_max
        self.k_max = k_max
        self.cv_folds = cv_folds
        self.grid = grid
        self.var_options = var_options

    def fit(self, X, y):
        X, y = _validate_curves(X, y)
        grid = self._fit_grid(X)
        sample = Sample(grid, X, y)
        if (self.r is None) != (self.k is None):
            raise ValueError("set both r and k, or neither (for cross-validation)")
        if self.r is None:
            self.cv_result_ = cross_validate(
                sample,
                self.r_max,
                self.k_max,
                self.variant,
                folds=self.cv_folds,
                var_options=self.var_options,
            )
            r, k = self.cv_result_.chosen
        else:
            self.cv_result_ = None
            r, k = int(self.r), int(self.k)
        self.pipeline_ = fit_pipeline(
            sample,
            r,
            k,
            self.variant,
            selection=self.cv_result_,
            var_options=self.var_options,
        )
        self.r_, self.k_ = r, k
        return self

    def predict(self, X):
        X = self._check_predict_input(X)
        return np.asarray(self.pipeline_.predict_values(X), dtype=float)
