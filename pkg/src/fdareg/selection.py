"""Leave-one-out cross-validation of the truncation pair and the full pipeline.

The fitted pipeline chains: unweighted principal component basis -> pilot
series fit at truncation r -> residuals -> power-of-the-mean variance model
-> observation weights -> weighted fit at truncation k ('tilde' keeps the
pilot basis, 'check' rebuilds a weighted basis).

Cross-validation scores every (r, k) cell with the leave-one-out criterion
W(r, k) = sum_i {Y_i - mu_{w,-i}(X_i | r, k)}^2, where the held-out
predictor is the *entire* pipeline refitted on the remaining observations,
variance model included, so no information about the held-out response can
leak.  A grid cell whose fit fails (for example a singular weighted system
at large k) receives W = +inf and is excluded from the minimization.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import DegenerateFitError
from .fpca import PCBasis, empirical_pca, weighted_pca
from .grids import Curve, Sample, require_same_grid
from .linmodel import LinearFit, fit_unweighted, residuals
from .varmodel import VarianceModel, fit_power_of_mean
from .wls import (
    CONDITION_LIMIT,
    WeightedFit,
    fit_weighted_check,
    fit_weighted_tilde,
    predict_weighted_values,
)

__all__ = ["CVResult", "Pipeline", "fit_pipeline", "cross_validate"]

VARIANTS = ("tilde", "check")


@dataclass(frozen=True)
class CVResult:
    """Cross-validation table with its minimizing cell.

    `w_grid[r, k]` is W(r, k); failed cells hold +inf.  `chosen` attains
    the minimum; exact ties are broken toward smaller r + k, then smaller
    r, and flagged in `ties_broken`.
    """

    variant: str
    w_grid: np.ndarray
    chosen: tuple[int, int]
    ties_broken: bool

    def as_dict(self) -> dict[tuple[int, int], float]:
        return {
            (r, k): float(self.w_grid[r, k])
            for r in range(self.w_grid.shape[0])
            for k in range(self.w_grid.shape[1])
        }


@dataclass(frozen=True)
class Pipeline:
    """End-to-end fitted predictor (pilot, variance model, weighted fit)."""

    variant: str
    pilot: LinearFit
    variance: VarianceModel
    weights: np.ndarray
    weighted: WeightedFit
    selection: CVResult | None = None

    def __post_init__(self):
        if self.selection is not None:
            chosen = (self.pilot.r, self.weighted.truncation)
            if self.selection.chosen != chosen:
                raise ValueError(
                    f"pipeline truncations {chosen} disagree with the "
                    f"cross-validated choice {self.selection.chosen}"
                )

    def predict_values(self, curve_values: np.ndarray) -> np.ndarray:
        return predict_weighted_values(self.weighted, curve_values)

    def predict(self, x: Curve) -> float:
        require_same_grid(x.grid, self.pilot.basis.grid)
        return float(self.predict_values(x.values))


def fit_pipeline(
    sample: Sample,
    r: int,
    k: int,
    variant: str = "tilde",
    *,
    basis: PCBasis | None = None,
    selection: CVResult | None = None,
    var_options: dict | None = None,
) -> Pipeline:
    """Fit the full weighted prediction pipeline at fixed truncations.

    Parameters
    ----------
    sample : Sample
    r : int
        Pilot truncation level.
    k : int
        Weighted truncation level (t for 'tilde', s for 'check').
    variant : {'tilde', 'check'}
    basis : PCBasis, optional
        Precomputed unweighted basis of `sample`.
    selection : CVResult, optional
        Attached cross-validation record; must agree with (r, k).
    var_options : dict, optional
        Keyword arguments forwarded to the variance-model fit.
    """
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}; expected one of {VARIANTS}")
    if basis is None:
        basis = empirical_pca(sample)
    pilot = fit_unweighted(sample, basis, r)
    resid = residuals(pilot, sample)
    fitted = sample.responses - resid
    variance = fit_power_of_mean(fitted, resid, **(var_options or {}))
    weights = variance.weight(fitted)
    if variant == "tilde":
        weighted = fit_weighted_tilde(sample, basis, weights, k)
    else:
        weighted = fit_weighted_check(sample, weights, k)
    return Pipeline(variant, pilot, variance, weights, weighted, selection)


def _fold_partition(n: int, folds: int | None) -> list[np.ndarray]:
    """Index blocks per fold: leave-one-out by default, else a deterministic
    round-robin p-fold partition."""
    if folds is None:
        return [np.array([i]) for i in range(n)]
    if not 2 <= folds <= n:
        raise ValueError(f"folds must be in [2, {n}], got {folds}")
    return [np.arange(n)[np.arange(n) % folds == j] for j in range(folds)]


def _fold_grid_predictions(
    sample: Sample,
    r_max: int,
    k_max: int,
    variants: tuple[str, ...],
    folds: int | None = None,
    var_options: dict | None = None,
):
    """Held-out predictions for every grid cell and every variant.

    Returns (pilot_pred, variant_pred) where pilot_pred has shape
    (n, r_max + 1) and variant_pred maps each requested variant to an array
    of shape (n, r_max + 1, k_max + 1).  Unfittable cells stay +inf.
    Everything (pilot, variance model, weights, bases) is refitted from the
    training part of each fold.
    """
    var_kw = var_options or {}
    X = sample.curve_values
    y = sample.responses
    n = sample.n_observations
    parts = _fold_partition(n, folds)
    if n - max(len(f) for f in parts) < 3:
        raise ValueError("each training fold needs at least 3 observations")

    pilot_pred = np.full((n, r_max + 1), np.inf)
    variant_pred = {v: np.full((n, r_max + 1, k_max + 1), np.inf) for v in variants}
    denom_floor = np.finfo(float).tiny * n
    all_idx = np.arange(n)

    for fold in parts:
        train_idx = np.setdiff1d(all_idx, fold)
        train = Sample(sample.grid, X[train_idx], y[train_idx])
        basis = empirical_pca(train)
        cap = min(max(r_max, k_max), basis.n_components)
        s_train = basis.scores(train.curve_values, cap)
        s_test = basis.scores(X[fold], cap)
        y_train = train.responses
        y_mean = float(y_train.mean())
        means = s_train.mean(axis=0)
        centred = s_train - means
        denoms = np.einsum("ij,ij->j", centred, centred)
        ok = denoms > denom_floor
        r_cap = int(np.argmin(ok)) if not ok.all() else cap
        r_cap = min(r_cap, r_max, cap)

        for r in range(r_cap + 1):
            coeffs = centred[:, :r].T @ (y_train - y_mean) / denoms[:r]
            pilot_pred[fold, r] = y_mean + (s_test[:, :r] - means[:r]) @ coeffs
            if not variants:
                continue
            fitted = y_mean + centred[:, :r] @ coeffs
            resid = y_train - fitted
            variance = fit_power_of_mean(fitted, resid, **var_kw)
            w = variance.weight(fitted)
            p = w / w.sum()
            y_bar_w = float(p @ y_train)

            if "tilde" in variants:
                k_cap = min(k_max, cap)
                means_w = p @ s_train[:, :k_cap]
                centred_w = s_train[:, :k_cap] - means_w
                sqrt_w = np.sqrt(w)
                design = sqrt_w[:, None] * centred_w
                target = sqrt_w * (y_train - y_bar_w)
                test_c = (s_test[:, :k_cap] - means_w).T
                out = variant_pred["tilde"]
                out[fold, r, 0] = y_bar_w
                if k_cap:
                    gram = design.T @ design
                    eigs = np.linalg.eigvalsh(gram)
                    if eigs[0] > 0 and eigs[-1] / eigs[0] <= CONDITION_LIMIT:
                        # Every leading subsystem inherits the guard by
                        # eigenvalue interlacing; one QR then yields all
                        # truncation levels through prefix sums.
                        qmat, rmat = np.linalg.qr(design)
                        gamma = qmat.T @ target
                        u = np.linalg.solve(rmat.T, test_c)
                        preds = y_bar_w + np.cumsum(u * gamma[:, None], axis=0)
                        out[fold, r, 1 : k_cap + 1] = preds.T
                    else:
                        rhs = design.T @ target
                        for k in range(1, k_cap + 1):
                            sub = np.linalg.eigvalsh(gram[:k, :k])
                            if sub[0] <= 0 or sub[-1] / sub[0] > CONDITION_LIMIT:
                                continue
                            bw = np.linalg.solve(gram[:k, :k], rhs[:k])
                            out[fold, r, k] = y_bar_w + test_c[:k].T @ bw

            if "check" in variants:
                wbasis = weighted_pca(train, w)
                k_cap = min(k_max, wbasis.n_components)
                sw_train = wbasis.scores(train.curve_values, k_cap)
                sw_test = wbasis.scores(X[fold], k_cap)
                means_w = p @ sw_train
                centred_w = sw_train - means_w
                den_w = np.einsum("i,ij,ij->j", w, centred_w, centred_w)
                ok_w = den_w > 0
                k_cap = int(np.argmin(ok_w)) if not ok_w.all() else k_cap
                bw = centred_w[:, :k_cap].T @ (w * (y_train - y_bar_w)) / den_w[:k_cap]
                # Prefix sums give every truncation level in one pass.
                terms = (sw_test[:, :k_cap] - means_w[:k_cap]) * bw
                preds = y_bar_w + np.concatenate(
                    [np.zeros((len(fold), 1)), np.cumsum(terms, axis=1)], axis=1
                )
                variant_pred["check"][fold, r, : k_cap + 1] = preds

    return pilot_pred, variant_pred


def _argmin_cell(w_grid: np.ndarray) -> tuple[tuple[int, int], bool]:
    """Minimizing (r, k) with deterministic tie-breaking: smallest W, then
    smallest r + k, then smallest r."""
    finite = np.isfinite(w_grid)
    if not finite.any():
        raise DegenerateFitError("every cross-validation cell failed")
    w_min = w_grid[finite].min()
    cells = np.argwhere(w_grid == w_min)
    order = sorted((int(r) + int(k), int(r), int(k)) for r, k in cells)
    _, r, k = order[0]
    return (r, k), len(cells) > 1


def cross_validate(
    sample: Sample,
    r_max: int | None = None,
    k_max: int | None = None,
    variant: str = "tilde",
    *,
    folds: int | None = None,
    var_options: dict | None = None,
) -> CVResult:
    """Leave-one-out (or optional p-fold) selection of the pair (r, k).

    Parameters
    ----------
    sample : Sample
    r_max, k_max : int, optional
        Upper ends of the search ranges; both default to
        min(20, (n - 1) // 4).
    variant : {'tilde', 'check'}
    folds : int, optional
        When given, a deterministic round-robin p-fold split replaces
        leave-one-out (cheaper for large n; leave-one-out is the default
        and the reference behaviour).
    var_options : dict, optional
        Keyword arguments forwarded to the variance-model fit in every fold.
    """
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}; expected one of {VARIANTS}")
    n = sample.n_observations
    default_cap = min(20, (n - 1) // 4)
    r_max = default_cap if r_max is None else int(r_max)
    k_max = default_cap if k_max is None else int(k_max)
    if r_max < 0 or k_max < 0:
        raise ValueError("r_max and k_max must be nonnegative")

    _, preds = _fold_grid_predictions(
        sample, r_max, k_max, (variant,), folds=folds, var_options=var_options
    )
    sq_err = (sample.responses[:, None, None] - preds[variant]) ** 2
    w_grid = sq_err.sum(axis=0)
    chosen, ties = _argmin_cell(w_grid)
    return CVResult(variant=variant, w_grid=w_grid, chosen=chosen, ties_broken=ties)


def select_pilot_truncation(
    sample: Sample,
    r_max: int | None = None,
    *,
    folds: int | None = None,
) -> tuple[int, np.ndarray]:
    """Leave-one-out choice of r for the plain unweighted predictor.

    Returns the minimizing r and the vector of W(r) values.  Ties go to the
    smallest r.
    """
    n = sample.n_observations
    r_max = min(20, (n - 1) // 4) if r_max is None else int(r_max)
    pilot_pred, _ = _fold_grid_predictions(sample, r_max, 0, (), folds=folds)
    w_values = ((sample.responses[:, None] - pilot_pred) ** 2).sum(axis=0)
    if not np.isfinite(w_values).any():
        raise DegenerateFitError("every cross-validation cell failed")
    return int(np.argmin(w_values)), w_values
