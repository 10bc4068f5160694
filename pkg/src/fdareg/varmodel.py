"""Power-of-the-mean variance model fitted to pilot residuals.

The conditional variance of the regression error is modelled as
g(u) = |c1*u|^c2 evaluated at the fitted mean.  Writing a = |c1|^c2 turns
the least-squares objective

    T(a, c2) = sum_i { e_i^2 - a * m_i^c2 }^2,   m_i = max(|mu_i|, floor),

into a problem that is linear in `a` for fixed exponent, with closed form
a(c2) = sum(e^2 m^c2) / sum(m^(2 c2)).  The one-dimensional profile over
c2 in [0, c2_max] is minimized by a dense grid search refined with golden
section.  Observation weights are the reciprocal 1/g, clamped around the
median training weight so a single near-zero fitted mean cannot dominate
the weighted fit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["VarianceModel", "fit_power_of_mean"]

_INV_PHI = (np.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class VarianceModel:
    """Fitted variance model g(u) = a * max(|u|, mean_floor)^c2.

    `status` is 'ok' for a regular fit and 'fallback' when the exponent
    search was degenerate and the model reverted to the homoscedastic
    c2 = 0 case.
    """

    c2: float
    a: float
    mean_floor: float
    weight_cap_ratio: float
    median_weight: float
    status: str = "ok"

    @property
    def c1(self) -> float | None:
        """Scale on the original |c1*u|^c2 parametrization; None when c2 = 0."""
        if self.c2 == 0.0:
            return None
        return float(self.a ** (1.0 / self.c2))

    def variance(self, fitted_value) -> np.ndarray:
        """Modelled error variance g at one or more fitted means."""
        u = np.maximum(np.abs(np.asarray(fitted_value, dtype=float)), self.mean_floor)
        with np.errstate(over="ignore"):  # inf variance -> weight at the cap floor
            return self.a * u**self.c2

    def weight(self, fitted_value) -> np.ndarray:
        """Reciprocal-variance weight, clamped into
        [median_weight / cap, median_weight * cap]."""
        raw = 1.0 / self.variance(fitted_value)
        lo = self.median_weight / self.weight_cap_ratio
        hi = self.median_weight * self.weight_cap_ratio
        return np.clip(raw, lo, hi)


def _profile(log_m: np.ndarray, sq_resid: np.ndarray, c2):
    """Closed-form scale and objective value for fixed exponent(s).

    Returns (a, T) where T = sum(e^4) - a * sum(e^2 m^c2); vectorized over
    a 1-D array of exponents.
    """
    c2 = np.asarray(c2, dtype=float)
    powers = np.exp(np.outer(log_m, c2))
    num = sq_resid @ powers
    den = np.einsum("ij,ij->j", powers, powers)
    a = num / den
    t_val = np.sum(sq_resid**2) - a * num
    return a, t_val


def _golden_section(fun, lo: float, hi: float, tol: float):
    """Golden-section minimization; returns the best point actually evaluated."""
    best_x, best_f = lo, fun(lo)
    f_hi = fun(hi)
    if f_hi < best_f:
        best_x, best_f = hi, f_hi
    x1 = hi - _INV_PHI * (hi - lo)
    x2 = lo + _INV_PHI * (hi - lo)
    f1, f2 = fun(x1), fun(x2)
    while hi - lo > tol:
        if f1 <= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - _INV_PHI * (hi - lo)
            f1 = fun(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + _INV_PHI * (hi - lo)
            f2 = fun(x2)
    for x, f in ((x1, f1), (x2, f2)):
        if f < best_f:
            best_x, best_f = x, f
    return best_x, best_f


def fit_power_of_mean(
    fitted,
    residuals,
    *,
    c2_max: float = 4.0,
    grid_step: float = 0.01,
    refine_tol: float = 1e-6,
    weight_cap_ratio: float = 1e4,
) -> VarianceModel:
    """Fit the power-of-the-mean model to squared pilot residuals.

    Parameters
    ----------
    fitted : array-like of shape (n,)
        Pilot fitted means mu_i.
    residuals : array-like of shape (n,)
        Pilot residuals e_i; their squares are the variance observations.
    c2_max : float
        Upper bound of the exponent search range [0, c2_max].
    grid_step : float
        Step of the dense exponent grid searched before golden refinement.
    refine_tol : float
        Bracket width at which golden-section refinement stops.
    weight_cap_ratio : float
        Multiplicative cap applied to weights around the median training weight.

    A degenerate search (all residuals zero, or all fitted means at the
    floor so the exponent is unidentifiable) falls back to the
    homoscedastic c2 = 0 model with status 'fallback'.
    """
    mu = np.asarray(fitted, dtype=float)
    eps = np.asarray(residuals, dtype=float)
    if mu.shape != eps.shape or mu.ndim != 1:
        raise ValueError("fitted and residuals must be 1-D arrays of equal length")
    n = mu.size
    if n < 3:
        raise ValueError(f"need at least 3 observations to fit the variance model, got {n}")
    if c2_max <= 0 or grid_step <= 0 or weight_cap_ratio < 1:
        raise ValueError("c2_max and grid_step must be positive, weight_cap_ratio >= 1")

    abs_mu = np.abs(mu)
    peak = abs_mu.max()
    mean_floor = 1e-6 * peak if peak > 0 else 1.0
    m = np.maximum(abs_mu, mean_floor)
    sq_resid = eps**2

    def build(c2: float, a: float, status: str) -> VarianceModel:
        model = VarianceModel(
            c2=float(c2),
            a=float(a),
            mean_floor=float(mean_floor),
            weight_cap_ratio=float(weight_cap_ratio),
            median_weight=1.0,
            status=status,
        )
        median = float(np.median(1.0 / model.variance(mu)))
        return VarianceModel(
            c2=model.c2,
            a=model.a,
            mean_floor=model.mean_floor,
            weight_cap_ratio=model.weight_cap_ratio,
            median_weight=median,
            status=status,
        )

    if not np.any(sq_resid > 0):
        # Perfect pilot fit: any constant variance is consistent; weights
        # are constant so the scale does not affect downstream fits.
        return build(0.0, 1.0, "fallback")
    if m.max() - m.min() <= 1e-12 * m.max():
        # Exponent unidentifiable: a * m^c2 is the same constant for all i.
        return build(0.0, float(sq_resid.mean()), "fallback")

    log_m = np.log(m)
    c2_grid = np.arange(0.0, c2_max + grid_step / 2, grid_step)
    c2_grid[-1] = min(c2_grid[-1], c2_max)
    a_grid, t_grid = _profile(log_m, sq_resid, c2_grid)
    best = int(np.argmin(t_grid))
    c2_best, t_best = float(c2_grid[best]), float(t_grid[best])

    sq_sum = float(sq_resid @ sq_resid)

    def scalar_objective(c2: float) -> float:
        powers = np.exp(log_m * c2)
        num = float(sq_resid @ powers)
        return sq_sum - num * num / float(powers @ powers)

    lo = max(0.0, c2_best - grid_step)
    hi = min(c2_max, c2_best + grid_step)
    c2_ref, t_ref = _golden_section(scalar_objective, lo, hi, refine_tol)
    if t_ref < t_best:
        c2_best = float(c2_ref)

    a_best = float(_profile(log_m, sq_resid, [c2_best])[0][0])
    if a_best <= 0:
        return build(0.0, float(sq_resid.mean()), "fallback")
    return build(c2_best, a_best, "ok")
