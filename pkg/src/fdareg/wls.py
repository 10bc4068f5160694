"""Heteroscedasticity-weighted series estimators.

Two variants share the weighted centring (weighted response mean and
weighted score means) but differ in basis:

* the 'tilde' variant keeps the unweighted principal component basis, so
  the weighted normal equations are a dense (generally non-diagonal)
  t-by-t system solved directly with a condition guard;
* the 'check' variant rebuilds the basis from the weighted covariance
  operator, which diagonalizes the weighted normal equations and restores
  a per-component closed form.

Multiplying all weights by a positive constant changes neither fit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import DegenerateFitError
from .fpca import PCBasis, weighted_pca
from .grids import Curve, Sample, require_same_grid

__all__ = [
    "WeightedFit",
    "fit_weighted_tilde",
    "fit_weighted_check",
    "predict_weighted",
    "predict_weighted_values",
]

# Weighted normal-equation systems with a larger condition estimate are
# treated as singular.
CONDITION_LIMIT = 1e12


@dataclass(frozen=True)
class WeightedFit:
    """Fitted weighted series estimator.

    `variant` is 'tilde' (unweighted basis) or 'check' (weighted basis);
    `truncation` is the number of retained components; `weights_used` keeps
    the per-observation weights the fit was computed with.
    """

    variant: str
    basis: PCBasis
    truncation: int
    coeffs: np.ndarray
    y_bar_w: float
    score_means_w: np.ndarray
    weights_used: np.ndarray


def _check_weights(weights, n: int) -> np.ndarray:
    w = np.asarray(weights, dtype=float)
    if w.shape != (n,):
        raise ValueError(f"expected {n} weights, got array of shape {w.shape}")
    if not np.all(np.isfinite(w)) or np.any(w <= 0):
        raise ValueError("observation weights must be finite and positive")
    return w


def fit_weighted_tilde(sample: Sample, basis: PCBasis, weights, t: int) -> WeightedFit:
    """Weighted least squares on the first `t` unweighted-basis scores.

    Solves the t-by-t weighted normal equations; raises when the system's
    condition estimate exceeds ``CONDITION_LIMIT``.  `t = 0` yields the
    weighted-mean (intercept-only) predictor.
    """
    if basis.flavor != "unweighted":
        raise ValueError("fit_weighted_tilde needs an unweighted-flavor basis")
    require_same_grid(sample.grid, basis.grid)
    w = _check_weights(weights, sample.n_observations)
    if not 0 <= t <= basis.n_components:
        raise DegenerateFitError(
            f"truncation level {t} exceeds basis capacity {basis.n_components}"
        )
    y = sample.responses
    p = w / w.sum()
    y_bar_w = float(p @ y)
    if t == 0:
        return WeightedFit("tilde", basis, 0, np.empty(0), y_bar_w, np.empty(0), w)

    scores = basis.scores(sample.curve_values, t)
    score_means = p @ scores
    centred = scores - score_means
    design = np.sqrt(w)[:, None] * centred
    gram = design.T @ design
    rhs = centred.T @ (w * (y - y_bar_w))
    eigs = np.linalg.eigvalsh(gram)
    if eigs[0] <= 0 or eigs[-1] / eigs[0] > CONDITION_LIMIT:
        raise DegenerateFitError(
            f"weighted normal equations numerically singular at truncation t={t}"
        )
    coeffs = np.linalg.solve(gram, rhs)
    return WeightedFit("tilde", basis, t, coeffs, y_bar_w, score_means, w)


def fit_weighted_check(
    sample: Sample, weights, s: int, basis: PCBasis | None = None
) -> WeightedFit:
    """Weighted least squares on the first `s` weighted-basis scores.

    The weighted basis diagonalizes the weighted normal equations, so each
    coefficient is a per-component ratio.  A precomputed weighted basis may
    be passed to avoid repeating the eigendecomposition; it must have been
    built from the same weights.
    """
    w = _check_weights(weights, sample.n_observations)
    if basis is None:
        basis = weighted_pca(sample, w)
    elif basis.flavor != "weighted":
        raise ValueError("fit_weighted_check needs a weighted-flavor basis")
    require_same_grid(sample.grid, basis.grid)
    if not 0 <= s <= basis.n_components:
        raise DegenerateFitError(
            f"weighted eigenvalue {s} is not positive; basis capacity is "
            f"{basis.n_components}"
        )
    y = sample.responses
    p = w / w.sum()
    y_bar_w = float(p @ y)
    if s == 0:
        return WeightedFit("check", basis, 0, np.empty(0), y_bar_w, np.empty(0), w)

    scores = basis.scores(sample.curve_values, s)
    score_means = p @ scores
    centred = scores - score_means
    denom = np.einsum("i,ij,ij->j", w, centred, centred)
    if np.any(denom <= 0):
        j = int(np.nonzero(denom <= 0)[0][0])
        raise DegenerateFitError(f"weighted score variance vanishes at component {j + 1}")
    coeffs = centred.T @ (w * (y - y_bar_w)) / denom
    return WeightedFit("check", basis, s, coeffs, y_bar_w, score_means, w)


def predict_weighted_values(fit: WeightedFit, curve_values: np.ndarray) -> np.ndarray:
    """Predictions for rows of `curve_values` (already on the fit's grid)."""
    values = np.asarray(curve_values, dtype=float)
    if fit.truncation == 0:
        shape = values.shape[:-1]
        return np.full(shape, fit.y_bar_w) if shape else np.float64(fit.y_bar_w)
    scores = fit.basis.scores(values, fit.truncation)
    return fit.y_bar_w + (scores - fit.score_means_w) @ fit.coeffs


def predict_weighted(fit: WeightedFit, x: Curve) -> float:
    """Predicted response for a single curve."""
    require_same_grid(x.grid, fit.basis.grid)
    return float(predict_weighted_values(fit, x.values))
