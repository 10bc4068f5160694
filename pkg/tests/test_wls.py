import numpy as np
import pytest

from conftest import random_sample
from fdareg.exceptions import DegenerateFitError
from fdareg.fpca import empirical_pca, weighted_pca
from fdareg.grids import Curve, Sample
from fdareg.linmodel import fit_unweighted, predict_values
from fdareg.wls import (
    fit_weighted_check,
    fit_weighted_tilde,
    predict_weighted,
    predict_weighted_values,
)


def dense_weighted_oracle(scores, y, w):
    """Reference weighted least squares: rescale rows by sqrt(w) and solve
    the free-intercept problem densely.  The weighted centring makes the
    fixed-weighted-mean objective equivalent to a free intercept."""
    sw = np.sqrt(w)
    design = np.column_stack([np.ones_like(y), scores])
    coeffs, *_ = np.linalg.lstsq(sw[:, None] * design, sw * y, rcond=None)
    return coeffs[1:]


def weighted_instance(rng, n=None, k=2, variant="tilde"):
    s = random_sample(rng, n=n)
    w = rng.uniform(0.3, 3.0, s.n_observations)
    if variant == "tilde":
        basis = empirical_pca(s)
        k = min(k, basis.n_components)
        return s, w, fit_weighted_tilde(s, basis, w, k)
    k = min(k, weighted_pca(s, w).n_components)
    return s, w, fit_weighted_check(s, w, k)


class TestTilde:
    def test_constant_weights_reduce_to_unweighted(self, rng):
        for c in (1.0, 2.5):
            s = random_sample(rng)
            basis = empirical_pca(s)
            r = min(3, basis.n_components)
            plain = fit_unweighted(s, basis, r)
            weighted = fit_weighted_tilde(s, basis, np.full(s.n_observations, c), r)
            np.testing.assert_allclose(weighted.coeffs, plain.coeffs, rtol=1e-9)
            np.testing.assert_allclose(
                predict_weighted_values(weighted, s.curve_values),
                predict_values(plain, s.curve_values),
                rtol=1e-9,
                atol=1e-12,
            )

    def test_matches_dense_weighted_least_squares(self, rng):
        for _ in range(25):
            s = random_sample(rng)
            basis = empirical_pca(s)
            t = min(int(rng.integers(1, 4)), basis.n_components)
            w = rng.uniform(0.1, 5.0, s.n_observations)
            fit = fit_weighted_tilde(s, basis, w, t)
            oracle = dense_weighted_oracle(
                basis.scores(s.curve_values, t), s.responses, w
            )
            np.testing.assert_allclose(fit.coeffs, oracle, rtol=1e-9, atol=1e-12)

    def test_noiseless_recovery(self, rng):
        s = random_sample(rng, n=15)
        basis = empirical_pca(s)
        t = min(2, basis.n_components)
        scores = basis.scores(s.curve_values, t)
        truth = np.array([1.5, -0.7])[:t]
        noiseless = Sample(s.grid, s.curve_values, 0.3 + scores @ truth)
        w = rng.uniform(0.5, 2.0, 15)
        fit = fit_weighted_tilde(noiseless, basis, w, t)
        np.testing.assert_allclose(fit.coeffs, truth, atol=1e-6)

    def test_normal_equation_orthogonality(self, rng):
        for _ in range(10):
            s, w, fit = weighted_instance(rng, variant="tilde")
            resid = s.responses - predict_weighted_values(fit, s.curve_values)
            scale = max(1.0, np.abs(resid).max()) * w.max()
            assert abs(w @ resid) < 1e-8 * scale
            scores = fit.basis.scores(s.curve_values, fit.truncation)
            centred = scores - fit.score_means_w
            assert np.abs(centred.T @ (w * resid)).max() < 1e-8 * scale

    def test_singular_system_names_truncation(self, rng):
        s = random_sample(rng, n=3)
        basis = empirical_pca(s)
        assert basis.n_components >= 2
        # A vanishing weight leaves two effective observations, whose centred
        # scores span one direction only: the 2x2 system is singular.
        w = np.array([1.0, 1.0, 1e-30])
        with pytest.raises(DegenerateFitError, match="t=2"):
            fit_weighted_tilde(s, basis, w, 2)


class TestCheck:
    def test_constant_weights_match_unweighted_predictions(self, rng):
        s = random_sample(rng)
        basis = empirical_pca(s)
        r = min(3, basis.n_components)
        plain = fit_unweighted(s, basis, r)
        weighted = fit_weighted_check(s, np.full(s.n_observations, 2.0), r)
        np.testing.assert_allclose(
            predict_weighted_values(weighted, s.curve_values),
            predict_values(plain, s.curve_values),
            rtol=1e-9,
            atol=1e-12,
        )

    def test_closed_form_matches_dense_solve(self, rng):
        for _ in range(25):
            s = random_sample(rng)
            w = rng.uniform(0.1, 5.0, s.n_observations)
            basis = weighted_pca(s, w)
            k = min(int(rng.integers(1, 4)), basis.n_components)
            fit = fit_weighted_check(s, w, k, basis=basis)
            oracle = dense_weighted_oracle(
                basis.scores(s.curve_values, k), s.responses, w
            )
            np.testing.assert_allclose(fit.coeffs, oracle, rtol=1e-9, atol=1e-12)

    def test_dominant_weight_interpolates_that_point(self, rng):
        s = random_sample(rng, n=8)
        w = np.ones(8)
        w[3] = 1e8
        fit = fit_weighted_check(s, w, 1)
        spread = s.responses.max() - s.responses.min()
        assert abs(predict_weighted(fit, s.curve(3)) - s.responses[3]) < 1e-4 * spread

    def test_beyond_capacity_raises(self, rng):
        s = random_sample(rng, n=5)
        w = np.ones(5)
        basis = weighted_pca(s, w)
        with pytest.raises(DegenerateFitError):
            fit_weighted_check(s, w, basis.n_components + 1)


class TestPredictWeighted:
    def test_weighted_mean_curve_predicts_weighted_mean_response(self, rng):
        s, w, fit = weighted_instance(rng, variant="check")
        pred = predict_weighted(fit, Curve(s.grid, fit.basis.mean))
        assert pred == pytest.approx(fit.y_bar_w, abs=1e-10)
        p = w / w.sum()
        assert fit.y_bar_w == pytest.approx(float(p @ s.responses), abs=1e-12)

    def test_truncation_zero_returns_weighted_mean(self, rng):
        s = random_sample(rng)
        basis = empirical_pca(s)
        w = rng.uniform(0.5, 2.0, s.n_observations)
        for build in (
            lambda: fit_weighted_tilde(s, basis, w, 0),
            lambda: fit_weighted_check(s, w, 0),
        ):
            fit = build()
            preds = predict_weighted_values(fit, s.curve_values)
            np.testing.assert_allclose(preds, fit.y_bar_w)

    def test_weight_scale_invariance(self, rng):
        for variant in ("tilde", "check"):
            s = random_sample(rng)
            w = rng.uniform(0.2, 2.0, s.n_observations)
            basis = empirical_pca(s)
            k = min(2, basis.n_components)
            for lam in (1e-6, 3.0, 1e7):
                if variant == "tilde":
                    base = fit_weighted_tilde(s, basis, w, k)
                    scaled = fit_weighted_tilde(s, basis, lam * w, k)
                else:
                    base = fit_weighted_check(s, w, k)
                    scaled = fit_weighted_check(s, lam * w, k)
                np.testing.assert_allclose(
                    predict_weighted_values(scaled, s.curve_values),
                    predict_weighted_values(base, s.curve_values),
                    rtol=1e-10,
                    atol=1e-10,
                )

    def test_tilde_and_check_stay_close(self, rng):
        # No hard bound is claimed; record the typical discrepancy between
        # the two weighted predictors on well-conditioned instances.
        gaps = []
        for _ in range(10):
            s = random_sample(rng, n=18)
            basis = empirical_pca(s)
            k = min(2, basis.n_components)
            w = rng.uniform(0.4, 2.5, s.n_observations)
            tilde = fit_weighted_tilde(s, basis, w, k)
            check = fit_weighted_check(s, w, k)
            spread = s.responses.max() - s.responses.min()
            gap = np.abs(
                predict_weighted_values(tilde, s.curve_values)
                - predict_weighted_values(check, s.curve_values)
            ).max()
            gaps.append(gap / spread)
        print(f"tilde-vs-check relative discrepancy: median {np.median(gaps):.3g}, "
              f"max {max(gaps):.3g}")
        assert np.isfinite(gaps).all()
