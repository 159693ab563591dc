"""
Tests for the penalized logistic path, its optimality conditions and cross-validation.
"""

import math

import numpy as np
import pytest
from scipy.special import expit

from lobjump.estimation.glm_lasso import (
    Scaling, cross_validate, decision_function, fit_logistic, fit_path, grad_nll,
    kkt_residuals, lambda_max, nll, path_to_frame, predict_proba, solve_lambda,
    stratified_folds, chrono_folds,
)
from lobjump.exceptions import ConvergenceWarning, DataFormatError, InsufficientDataError
from lobjump.schemas.config import FitConfig


def logistic_data(seed, n, p, beta=None, intercept=-0.5):
    rng = np.random.default_rng(seed)
    F = rng.normal(size=(n, p))
    coef = np.zeros(p) if beta is None else np.asarray(beta, dtype=float)
    y = (rng.random(n) < expit(intercept + F @ coef)).astype(float)
    return F, y


def with_intercept(F):
    return np.hstack([np.ones((F.shape[0], 1)), F])


def proximal_gradient(F, y, lam, max_iter=200_000, tol=1e-13):
    """Accelerated proximal gradient on the mean loss plus λ|b[1:]|_1."""
    A = with_intercept(F)
    n = len(y)
    step = 4.0 * n / np.linalg.norm(A, 2) ** 2
    b = np.zeros(A.shape[1])
    v, t = b.copy(), 1.0
    for _ in range(max_iter):
        u = v - step * A.T @ (expit(A @ v) - y) / n
        u[1:] = np.sign(u[1:]) * np.maximum(np.abs(u[1:]) - step * lam, 0.0)
        t_next = (1.0 + math.sqrt(1.0 + 4.0 * t * t)) / 2.0
        v = u + (t - 1.0) / t_next * (u - b)
        if np.max(np.abs(u - b)) < tol:
            return u
        b, t = u, t_next
    return b


class TestLikelihood:
    def test_nll_at_zero(self):
        F, y = logistic_data(0, 40, 3)
        assert nll(np.zeros(4), with_intercept(F), y) == pytest.approx(40 * math.log(2))

    def test_grad_at_zero(self):
        F, y = logistic_data(1, 40, 3)
        X = with_intercept(F)
        np.testing.assert_allclose(grad_nll(np.zeros(4), X, y), X.T @ (0.5 - y))

    @pytest.mark.parametrize("seed", range(100))
    def test_grad_matches_finite_differences(self, seed):
        rng = np.random.default_rng(seed)
        n, p = int(rng.integers(10, 101)), int(rng.integers(1, 21))
        F, y = logistic_data(seed, n, p, beta=rng.normal(size=p))
        X = with_intercept(F)
        beta = rng.normal(scale=0.5, size=p + 1)
        h = 1e-6
        numeric = np.array([
            (nll(beta + h * e, X, y) - nll(beta - h * e, X, y)) / (2 * h) for e in np.eye(p + 1)
        ])
        analytic = grad_nll(beta, X, y)
        assert np.max(np.abs(numeric - analytic)) / np.max(np.abs(analytic)) < 1e-6

    def test_extreme_scores_are_finite(self):
        X = np.array([[1.0, 500.0], [1.0, -500.0]])
        y = np.array([0.0, 1.0])
        assert nll(np.array([0.0, 1.0]), X, y) == pytest.approx(1000.0)
        assert np.isfinite(grad_nll(np.array([0.0, 1.0]), X, y)).all()

    def test_non_binary_labels_rejected(self):
        with pytest.raises(DataFormatError):
            nll(np.zeros(2), np.ones((3, 2)), np.array([0.0, 2.0, 1.0]))


class TestFitPath:
    def test_null_model_at_lambda_max(self):
        F, y = logistic_data(3, 120, 6, beta=[1, 0, 0, -1, 0, 0])
        path = fit_path(F, y, FitConfig(n_lambdas=20))
        assert path.lambda_max == pytest.approx(lambda_max(F, y))
        assert np.all(path.coefs[0, 1:] == 0.0)
        assert path.coefs[0, 0] == pytest.approx(math.log(y.mean() / (1 - y.mean())))
        assert path.n_nonzero[-1] >= path.n_nonzero[0] == 0

    def test_grid_is_log_spaced_descending(self):
        F, y = logistic_data(4, 100, 4, beta=[1, 0, 0, 0])
        path = fit_path(F, y, FitConfig(n_lambdas=10, lambda_ratio=1e-2))
        assert np.all(np.diff(path.lambdas) < 0)
        assert path.lambdas[-1] == pytest.approx(path.lambdas[0] * 1e-2)
        np.testing.assert_allclose(np.diff(np.log(path.lambdas)), math.log(1e-2) / 9)

    def test_lambda_above_max_gives_null_model(self):
        F, y = logistic_data(5, 100, 4, beta=[1, 1, 0, 0])
        lam = lambda_max(F, y)
        path = fit_path(F, y, lambdas=np.array([10 * lam, lam]))
        assert np.all(path.coefs[:, 1:] == 0.0)

    @pytest.mark.slow
    @pytest.mark.parametrize("seed", range(20))
    def test_matches_proximal_gradient_oracle(self, seed):
        rng = np.random.default_rng(300 + seed)
        beta = rng.normal(size=5) * (rng.random(5) < 0.6)
        F, y = logistic_data(300 + seed, 200, 5, beta=beta)
        cfg = FitConfig(standardize=False, tol=1e-12, kkt_tol=1e-10)
        lam_max = lambda_max(F, y, standardize=False)
        path = fit_path(F, y, cfg, lambdas=lam_max * np.array([1.0, 0.5, 0.1, 0.02]))
        assert np.all(path.coefs[0, 1:] == 0.0)
        for k, fraction in enumerate((0.5, 0.1, 0.02), start=1):
            expected = proximal_gradient(F, y, fraction * lam_max)
            assert np.max(np.abs(path.coefs[k] - expected)) < 1e-4

    @pytest.mark.parametrize("seed", range(20))
    def test_kkt_residuals_small_along_path(self, seed):
        rng = np.random.default_rng(400 + seed)
        F, y = logistic_data(400 + seed, 200, 5, beta=rng.normal(size=5) * (rng.random(5) < 0.6))
        path = fit_path(F, y, FitConfig(n_lambdas=25))
        assert path.converged.all()
        assert np.all(path.coefs[0, 1:] == 0.0)
        for lam, beta in zip(path.lambdas, path.coefs):
            assert kkt_residuals(F, y, beta, lam).max() < 1e-6

    def test_objective_non_increasing_within_solve(self):
        F, y = logistic_data(8, 250, 6, beta=[2, -1, 0, 0, 1, 0])
        A = Scaling.fit(F).design(F)
        b0 = np.zeros(7)
        b0[0] = math.log(y.mean() / (1 - y.mean()))
        history = []
        solve_lambda(A, y, 0.01, b0, FitConfig(), history)
        assert len(history) > 1
        assert np.all(np.diff(history) <= 1e-15)

    def test_duplicated_dataset_same_path(self):
        F, y = logistic_data(9, 150, 5, beta=[1, 0, -1, 0, 0.5])
        cfg = FitConfig(n_lambdas=15)
        single = fit_path(F, y, cfg)
        double = fit_path(np.vstack([F, F]), np.concatenate([y, y]), cfg)
        np.testing.assert_allclose(double.lambdas, single.lambdas)
        np.testing.assert_allclose(double.coefs, single.coefs, atol=1e-6)
        assert double.selection_order == single.selection_order

    def test_selection_order_invariant_to_row_permutation(self):
        F, y = logistic_data(10, 400, 6, beta=[1.5, -0.7, 0.3, 0, 0, 0])
        perm = np.random.default_rng(10).permutation(len(y))
        cfg = FitConfig(n_lambdas=30)
        assert fit_path(F, y, cfg).selection_order == fit_path(F[perm], y[perm], cfg).selection_order

    @pytest.mark.parametrize("seed", range(5))
    def test_strong_column_selected_first(self, seed):
        beta = np.zeros(10)
        beta[3] = 3.0
        F, y = logistic_data(100 + seed, 400, 10, beta=beta)
        path = fit_path(F, y, FitConfig(n_lambdas=30), [f"f{j}" for j in range(10)])
        assert path.selection_order[0] == "f3"

    def test_predictions_invariant_to_column_scaling(self):
        F, y = logistic_data(11, 300, 4, beta=[1, -1, 0.5, 0])
        scale = np.array([10.0, 0.01, 3.0, 250.0])
        cfg = FitConfig(n_lambdas=10)
        plain = fit_path(F, y, cfg)
        scaled = fit_path(F * scale, y, cfg)
        for k in (3, 9):
            np.testing.assert_allclose(
                predict_proba(plain.coefs[k], F), predict_proba(scaled.coefs[k], F * scale), atol=1e-6
            )

    def test_constant_column_stays_zero(self):
        F, y = logistic_data(12, 200, 3, beta=[1, 0, 0])
        F[:, 2] = 4.0
        path = fit_path(F, y, FitConfig(n_lambdas=10))
        assert np.all(path.coefs[:, 3] == 0.0)

    def test_non_convergence_warns(self):
        F, y = logistic_data(13, 200, 5, beta=[1, 1, 0, 0, 0])
        with pytest.warns(ConvergenceWarning):
            path = fit_path(F, y, FitConfig(n_lambdas=5, max_iter=1))
        assert not path.converged.all()
        assert path.converged[0]

    def test_too_few_rows(self):
        with pytest.raises(InsufficientDataError):
            fit_path(np.ones((5, 2)), np.array([0, 1, 0, 1, 0]))

    def test_single_class(self):
        with pytest.raises(InsufficientDataError) as exc_info:
            fit_path(np.random.default_rng(0).normal(size=(20, 2)), np.zeros(20))
        assert exc_info.value.n_pos == 0 and exc_info.value.n_neg == 20

    def test_path_frame_columns(self):
        F, y = logistic_data(14, 100, 2, beta=[1, 0])
        frame = path_to_frame(fit_path(F, y, FitConfig(n_lambdas=4), ["a", "b"]))
        assert list(frame.columns) == ["lambda", "deviance", "nonzeros", "converged", "intercept", "a", "b"]
        assert len(frame) == 4


class TestScaling:
    def test_population_moments_and_constant_columns(self):
        F, _ = logistic_data(15, 50, 3)
        F[:, 1] = 2.5
        scaling = Scaling.fit(F)
        A = scaling.design(F)
        np.testing.assert_allclose(scaling.scale[[0, 2]], F[:, [0, 2]].std(axis=0))
        assert scaling.scale[1] == 1.0 and scaling.constant.tolist() == [False, True, False]
        np.testing.assert_allclose(A[:, 0], 1.0)
        assert np.all(A[:, 2] == 0.0)
        np.testing.assert_allclose(A[:, [1, 3]].mean(axis=0), 0.0, atol=1e-12)

    def test_back_transform_preserves_scores(self):
        F, _ = logistic_data(16, 40, 4)
        F = F * [1.0, 10.0, 0.1, 3.0] + [0.0, 5.0, -2.0, 1.0]
        scaling = Scaling.fit(F)
        b = np.array([0.3, 1.0, -0.5, 0.0, 2.0])
        beta = scaling.to_original(b)
        np.testing.assert_allclose(decision_function(beta, F), scaling.design(F) @ b)
        np.testing.assert_allclose(scaling.to_standardized(beta), b)

    def test_unstandardized_is_identity(self):
        F, _ = logistic_data(17, 20, 2)
        scaling = Scaling.fit(F, standardize=False)
        np.testing.assert_array_equal(scaling.design(F)[:, 1:], F)
        assert scaling.center.tolist() == [0.0, 0.0] and scaling.scale.tolist() == [1.0, 1.0]


class TestFolds:
    def test_stratified_folds_partition_rows(self):
        y = np.array([1.0] * 12 + [0.0] * 48)
        folds = stratified_folds(y, 4, seed=0)
        assert sorted(np.concatenate(folds).tolist()) == list(range(60))
        assert all(y[f].sum() == 3 for f in folds)

    def test_too_few_positives(self):
        y = np.array([1.0] * 3 + [0.0] * 37)
        with pytest.raises(InsufficientDataError):
            stratified_folds(y, 10, seed=0)

    def test_chrono_folds_are_contiguous(self):
        y = np.tile([0.0, 1.0], 20)
        folds = chrono_folds(y, 4, seed=0)
        assert [f.tolist() for f in folds] == [list(range(i, i + 10)) for i in range(0, 40, 10)]

    def test_chrono_folds_fall_back(self):
        y = np.array([1.0] * 10 + [0.0] * 30)
        folds = chrono_folds(y, 4, seed=0)
        assert all(0 < y[f].sum() < len(f) for f in folds)


class TestCrossValidate:
    def test_chosen_lambda_on_grid(self):
        F, y = logistic_data(20, 300, 6, beta=[1.5, -1, 0, 0, 0, 0])
        fit = cross_validate(F, y, FitConfig(n_lambdas=20, cv_folds=5))
        assert fit.lambda_ == fit.path.lambdas[fit.lambda_index]
        assert fit.cv_deviance.shape == (5, 20)
        assert fit.lambda_index == int(np.argmin(fit.cv_mean))
        np.testing.assert_array_equal(fit.beta, fit.path.coefs[fit.lambda_index])
        assert {"x1", "x2"} <= set(fit.selected)

    def test_planted_support_recovered(self):
        beta = np.zeros(8)
        beta[[0, 4]] = [2.0, -2.0]
        F, y = logistic_data(21, 1500, 8, beta=beta)
        fit = cross_validate(F, y, FitConfig(n_lambdas=30, cv_folds=5), [f"f{j}" for j in range(8)])
        assert set(fit.selection_order[:2]) == {"f0", "f4"}
        assert {"f0", "f4"} <= set(fit.selected)

    def test_parallel_folds_match_serial(self):
        F, y = logistic_data(22, 200, 4, beta=[1, 0, 0, 0])
        serial = cross_validate(F, y, FitConfig(n_lambdas=10, cv_folds=4))
        threaded = cross_validate(F, y, FitConfig(n_lambdas=10, cv_folds=4, n_jobs=4))
        np.testing.assert_array_equal(serial.cv_deviance, threaded.cv_deviance)

    def test_insufficient_positives_for_folds(self):
        F, y = logistic_data(23, 40, 2)
        y[:] = 0.0
        y[:3] = 1.0
        with pytest.raises(InsufficientDataError) as exc_info:
            cross_validate(F, y, FitConfig(n_lambdas=5, cv_folds=10))
        assert exc_info.value.n_pos == 3

    def test_duplicated_rows_choose_same_lambda(self):
        F, y = logistic_data(24, 200, 5, beta=[1.2, 0, -0.8, 0, 0.4])
        cfg = FitConfig(n_lambdas=15, cv_folds=5, cv="chrono")
        single = cross_validate(F, y, cfg)
        double = cross_validate(np.repeat(F, 2, axis=0), np.repeat(y, 2), cfg)
        assert double.lambda_index == single.lambda_index
        np.testing.assert_allclose(double.cv_mean, single.cv_mean, atol=1e-6)
        np.testing.assert_allclose(double.beta, single.beta, atol=1e-6)


def test_fit_logistic_solves_score_equations():
    F, y = logistic_data(30, 3000, 3, beta=[0.8, -0.5, 0.0])
    beta = fit_logistic(F, y)
    gradient = grad_nll(beta, with_intercept(F), y) / len(y)
    assert np.max(np.abs(gradient)) < 1e-3
    assert beta[1:] == pytest.approx([0.8, -0.5, 0.0], abs=0.15)
    np.testing.assert_allclose(decision_function(beta, F), with_intercept(F) @ beta)
