import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from conftest import random_sample
from fdareg.estimators import (
    AdaptiveFunctionalRegression,
    FunctionalLinearRegression,
    WeightedFunctionalRegression,
)
from fdareg.fpca import empirical_pca
from fdareg.grids import Sample
from fdareg.linmodel import fit_unweighted, predict_values
from fdareg.selection import cross_validate, fit_pipeline


def training_data(rng, n=20, m=15):
    s = random_sample(rng, n=n, m=m, uniform_grid=True)
    basis = empirical_pca(s)
    scores = basis.scores(s.curve_values, 2)
    y = 0.5 + scores @ [1.0, -2.0] + 0.1 * rng.standard_normal(n)
    return s.curve_values, y, s.grid


class TestSklearnProtocol:
    @pytest.mark.parametrize(
        "estimator",
        [
            FunctionalLinearRegression(n_components=2),
            WeightedFunctionalRegression(n_components=2, variant="check"),
            AdaptiveFunctionalRegression(r=1, k=1),
        ],
    )
    def test_get_params_clone_and_fit_returns_self(self, rng, estimator):
        X, y, _ = training_data(rng)
        cloned = clone(estimator)
        assert cloned.get_params() == estimator.get_params()
        assert cloned.fit(X, y) is cloned
        preds = cloned.predict(X)
        assert preds.shape == (len(y),)

    def test_predict_before_fit_raises(self, rng):
        X, y, _ = training_data(rng)
        with pytest.raises(NotFittedError):
            FunctionalLinearRegression().predict(X)

    def test_set_params_roundtrip(self):
        est = AdaptiveFunctionalRegression()
        est.set_params(variant="check", r_max=3)
        assert est.get_params()["variant"] == "check"
        assert est.get_params()["r_max"] == 3

    def test_column_count_is_checked(self, rng):
        X, y, _ = training_data(rng)
        model = FunctionalLinearRegression(n_components=1).fit(X, y)
        with pytest.raises(ValueError):
            model.predict(X[:, :-1])

    def test_grid_length_is_checked(self, rng):
        X, y, _ = training_data(rng)
        est = FunctionalLinearRegression(n_components=1, grid=np.arange(4.0))
        with pytest.raises(ValueError):
            est.fit(X, y)


class TestFunctionalLinearRegression:
    def test_matches_core_fit(self, rng):
        X, y, grid = training_data(rng)
        est = FunctionalLinearRegression(n_components=2, grid=grid).fit(X, y)
        sample = Sample(grid, X, y)
        basis = empirical_pca(sample)
        fit = fit_unweighted(sample, basis, 2)
        np.testing.assert_allclose(est.coef_, fit.coeffs, rtol=1e-12)
        np.testing.assert_allclose(
            est.predict(X), predict_values(fit, X), rtol=1e-12
        )

    def test_default_grid_is_unit_interval(self, rng):
        X, y, _ = training_data(rng)
        est = FunctionalLinearRegression(n_components=1).fit(X, y)
        assert est.grid_.interval == (0.0, 1.0)

    def test_r2_score_is_high_on_strong_signal(self, rng):
        X, y, grid = training_data(rng)
        est = FunctionalLinearRegression(n_components=2, grid=grid).fit(X, y)
        assert est.score(X, y) > 0.9


class TestWeightedFunctionalRegression:
    def test_unit_weights_equal_unweighted(self, rng):
        X, y, grid = training_data(rng)
        plain = FunctionalLinearRegression(n_components=2, grid=grid).fit(X, y)
        for variant in ("tilde", "check"):
            weighted = WeightedFunctionalRegression(
                n_components=2, variant=variant, grid=grid
            ).fit(X, y)
            np.testing.assert_allclose(
                weighted.predict(X), plain.predict(X), rtol=1e-9
            )

    def test_sample_weight_changes_the_fit(self, rng):
        X, y, grid = training_data(rng)
        w = np.ones(len(y))
        w[:4] = 50.0
        est = WeightedFunctionalRegression(n_components=2, grid=grid)
        base = est.fit(X, y).predict(X)
        reweighted = est.fit(X, y, sample_weight=w).predict(X)
        assert not np.allclose(base, reweighted)

    def test_unknown_variant_raises(self, rng):
        X, y, _ = training_data(rng)
        with pytest.raises(ValueError):
            WeightedFunctionalRegression(variant="nope").fit(X, y)


class TestAdaptiveFunctionalRegression:
    def test_fixed_truncations_match_fit_pipeline(self, rng):
        X, y, grid = training_data(rng)
        est = AdaptiveFunctionalRegression(variant="tilde", r=2, k=2, grid=grid)
        est.fit(X, y)
        pipe = fit_pipeline(Sample(grid, X, y), 2, 2, "tilde")
        np.testing.assert_allclose(
            est.predict(X), pipe.predict_values(X), rtol=1e-12
        )
        assert est.cv_result_ is None

    def test_cross_validated_choice_is_recorded(self, rng):
        X, y, grid = training_data(rng, n=14)
        est = AdaptiveFunctionalRegression(
            variant="check", r_max=2, k_max=2, grid=grid
        ).fit(X, y)
        cv = cross_validate(Sample(grid, X, y), 2, 2, "check")
        assert (est.r_, est.k_) == cv.chosen
        assert est.cv_result_ is not None
        np.testing.assert_allclose(est.cv_result_.w_grid, cv.w_grid, rtol=1e-12)

    def test_half_specified_truncation_rejected(self, rng):
        X, y, _ = training_data(rng)
        with pytest.raises(ValueError):
            AdaptiveFunctionalRegression(r=1).fit(X, y)
