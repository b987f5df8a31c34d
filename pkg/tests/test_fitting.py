import math

import numpy as np
import pytest

from simstate import (
    FitConfig,
    NormalizationParams,
    compute_normalization,
    evaluate_frozen,
    evaluate_weights,
    fit_sigmoid,
    moving_average_samples,
    normalize,
    sigmoid,
    sigmoid_partials,
    validate_prompt_set,
    validate_series,
    weighted_similarity,
)


class TestSigmoid:
    def test_midpoint(self):
        for alpha in (0.01, 0.1, 1.0, 50.0):
            assert sigmoid(42.0, alpha, 42.0) == pytest.approx(0.5)

    def test_zero_slope(self):
        t = np.arange(1, 101, dtype=float)
        np.testing.assert_allclose(sigmoid(t, 0.0, 50.0), np.full(100, 0.5))

    def test_scalar_value(self):
        # 1/(1 + e^-5), plain arithmetic
        assert sigmoid(100.0, 0.1, 50.0) == pytest.approx(1.0 / (1.0 + math.exp(-5.0)))
        assert sigmoid(100.0, 0.1, 50.0) == pytest.approx(0.9933071490757153)

    def test_overflow_saturates(self):
        assert sigmoid(1e6, 10.0, 0.0) == 1.0
        assert sigmoid(-1e6, 10.0, 0.0) == pytest.approx(0.0)
        assert np.isfinite(sigmoid(np.array([-1e9, 1e9]), 100.0, 0.0)).all()

    def test_monotone_for_positive_alpha(self):
        t = np.arange(1, 301, dtype=float)
        y = sigmoid(t, 0.3, 150.0)
        assert np.all(np.diff(y) >= 0)


class TestJacobian:
    def test_partials_match_central_differences(self):
        # Sample the informative region |alpha*(t-beta)| <= 5 where the
        # derivatives are well above finite-difference noise.
        rng = np.random.default_rng(101)
        h = 1e-6
        for _ in range(100):
            alpha = rng.uniform(0.05, 2.0)
            beta = rng.uniform(10.0, 490.0)
            t = beta + rng.uniform(-5.0, 5.0) / alpha
            d_alpha, d_beta = sigmoid_partials(t, alpha, beta)
            fd_alpha = (sigmoid(t, alpha + h, beta) - sigmoid(t, alpha - h, beta)) / (2 * h)
            fd_beta = (sigmoid(t, alpha, beta + h) - sigmoid(t, alpha, beta - h)) / (2 * h)
            np.testing.assert_allclose(d_alpha, fd_alpha, rtol=1e-5, atol=1e-8)
            np.testing.assert_allclose(d_beta, fd_beta, rtol=1e-5, atol=1e-8)

    def test_partials_formula(self):
        t, alpha, beta = 120.0, 0.3, 100.0
        f = sigmoid(t, alpha, beta)
        d_alpha, d_beta = sigmoid_partials(t, alpha, beta)
        assert d_alpha == pytest.approx((t - beta) * f * (1 - f), rel=1e-12)
        assert d_beta == pytest.approx(-alpha * f * (1 - f), rel=1e-12)


class TestFitSigmoid:
    def test_recovers_exact_sigmoid(self):
        T = 100
        t = np.arange(1, T + 1, dtype=float)
        y = sigmoid(t, 0.5, T / 2)
        fit = fit_sigmoid(y)
        assert fit.converged
        assert abs(fit.alpha - 0.5) < 1e-4
        assert abs(fit.beta - T / 2) < 1e-4
        assert fit.sigma < 1e-8
        assert fit.e_value == pytest.approx(
            fit.alpha * fit.beta / max(fit.sigma, FitConfig().sigma_floor)
        )

    @pytest.mark.parametrize("T", [50, 100, 500])
    def test_recovery_across_lengths(self, T):
        rng = np.random.default_rng(T)
        t = np.arange(1, T + 1, dtype=float)
        for _ in range(5):
            alpha = rng.uniform(0.05, 2.0)
            beta = rng.uniform(0.2 * T, 0.8 * T)
            fit = fit_sigmoid(sigmoid(t, alpha, beta))
            assert fit.converged
            assert abs(fit.alpha - alpha) < 1e-4
            assert abs(fit.beta - beta) < 1e-4

    def test_constant_input_zero_evaluation(self):
        fit = fit_sigmoid(np.full(100, 0.5))
        assert fit.e_value == 0.0
        fit = fit_sigmoid(np.full(100, 0.123))
        assert fit.e_value == 0.0

    def test_noisy_recovery_rate(self):
        T = 100
        t = np.arange(1, T + 1, dtype=float)
        clean = sigmoid(t, 0.5, T / 2)
        hits = 0
        seeds = 40
        for seed in range(seeds):
            rng = np.random.default_rng(seed)
            fit = fit_sigmoid(clean + rng.normal(0.0, 0.05, T))
            if (
                fit.converged
                and abs(fit.alpha - 0.5) / 0.5 <= 0.2
                and abs(fit.beta - T / 2) <= 0.05 * T
            ):
                hits += 1
        assert hits >= math.ceil(0.95 * seeds)

    def test_constraints_respected(self):
        # A decreasing signal pushes alpha toward its bound; it must not go
        # negative.
        t = np.arange(1, 101, dtype=float)
        fit = fit_sigmoid(1.0 - sigmoid(t, 0.3, 50.0))
        assert fit.alpha >= 0.0
        assert fit.beta >= 0.0

    def test_sigma_matches_direct_rmse(self):
        rng = np.random.default_rng(3)
        T = 80
        t = np.arange(1, T + 1, dtype=float)
        y = sigmoid(t, 0.2, 40.0) + rng.normal(0, 0.03, T)
        fit = fit_sigmoid(y)
        residuals = y - sigmoid(t, fit.alpha, fit.beta)
        assert fit.sigma == pytest.approx(math.sqrt(float(residuals @ residuals) / T))
        assert fit.sigma >= 0.0

    def test_too_short_rejected(self):
        with pytest.raises(ValueError):
            fit_sigmoid([0.1, 0.9])

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError):
            fit_sigmoid([0.1, np.nan, 0.9])

    def test_iteration_budget_reports_non_convergence(self):
        rng = np.random.default_rng(9)
        y = sigmoid(np.arange(1, 201, dtype=float), 0.1, 100.0) + rng.normal(0, 0.05, 200)
        fit = fit_sigmoid(y, FitConfig(max_iterations=1))
        if not fit.converged:
            assert fit.e_value == 0.0


def make_series(columns, rate=10.0):
    values = np.clip(np.column_stack(columns), -1.0, 1.0)
    series = validate_series(values, sample_rate_hz=rate)
    prompts = validate_prompt_set([(f"cue {i}", 1) for i in range(values.shape[1])])
    return series, prompts


class TestEvaluateWeights:
    def setup_method(self):
        rng = np.random.default_rng(31)
        T = 300
        t = np.arange(1, T + 1, dtype=float)
        self.curve = 0.1 + 0.3 * sigmoid(t, 0.08, 150.0)
        self.informative = self.curve + rng.normal(0, 0.02, T)
        self.noise = 0.25 + rng.normal(0, 0.05, T)
        self.series, self.prompts = make_series([self.informative, self.noise])

    def test_informative_channel_scores_positive(self):
        outcome = evaluate_weights(self.series, self.prompts, [1.0, 0.0], 1.0)
        assert outcome.e_value > 0
        assert outcome.reason is None

    def test_matches_manual_stage_composition(self):
        outcome = evaluate_weights(self.series, self.prompts, [1.0, 0.0], 1.0)
        raw = weighted_similarity(self.series, self.prompts, [1.0, 0.0])
        averaged = moving_average_samples(raw, 10)
        params = compute_normalization(averaged, 10)
        refit = fit_sigmoid(normalize(averaged, params))
        assert outcome.fit == refit
        assert outcome.normalization == params

    def test_noise_channel_scores_much_lower(self):
        informative = evaluate_weights(self.series, self.prompts, [1.0, 0.0], 1.0)
        noise = evaluate_weights(self.series, self.prompts, [0.0, 1.0], 1.0)
        assert informative.e_value >= 10 * noise.e_value

    def test_zero_weights_reason(self):
        outcome = evaluate_weights(self.series, self.prompts, [0.0, 0.0], 1.0)
        assert outcome.e_value == 0.0
        assert outcome.reason == "degenerate weights"
        assert outcome.normalization is None

    def test_flat_signal_reason(self):
        series, prompts = make_series([np.full(50, 0.25), np.full(50, 0.3)])
        outcome = evaluate_weights(series, prompts, [1.0, 1.0], 1.0)
        assert outcome.e_value == 0.0
        assert outcome.reason == "flat signal"

    def test_e_scale_invariance(self):
        rng = np.random.default_rng(37)
        base = evaluate_weights(self.series, self.prompts, [0.7, 0.2], 1.0)
        for _ in range(10):
            c = rng.uniform(1e-3, 10.0)
            scaled = evaluate_weights(self.series, self.prompts, [0.7 * c, 0.2 * c], 1.0)
            assert scaled.e_value == pytest.approx(base.e_value, rel=1e-9)


class TestEvaluateFrozen:
    def test_out_of_range_normalization_still_fits(self):
        rng = np.random.default_rng(41)
        T = 200
        t = np.arange(1, T + 1, dtype=float)
        col = 0.1 + 0.3 * sigmoid(t, 0.08, 100.0) + rng.normal(0, 0.01, T)
        series, prompts = make_series([col])
        params = NormalizationParams(a_min=0.15, a_max=0.3, window_samples=10)
        fit, signal = evaluate_frozen(series, prompts, [1.0], params, 1.0)
        assert signal.normalized.max() > 1.0
        assert np.isfinite(fit.sigma)
