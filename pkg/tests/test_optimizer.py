from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest

from simstate import (
    GaConfig,
    ValidationError,
    evaluate_weights,
    optimize,
    select_all,
    select_one,
    sigmoid,
    validate_prompt_set,
    validate_series,
)


def band_noise(rng, frames, sd):
    white = rng.normal(0, 1, frames)
    smooth = np.convolve(white, np.ones(5) / 5, mode="same")
    return smooth * (sd / smooth.std())


def benchmark_series(seed=1, frames=200, n_noise=9, rate=10.0):
    """One clean sigmoid channel plus band-limited noise channels."""
    rng = np.random.default_rng(seed)
    t = np.arange(1, frames + 1, dtype=float)
    cols = [0.1 + 0.3 * sigmoid(t, 0.12, frames / 2) + rng.normal(0, 0.02, frames)]
    for _ in range(n_noise):
        cols.append(0.25 + band_noise(rng, frames, 0.05))
    values = np.clip(np.column_stack(cols), -1, 1)
    series = validate_series(values, sample_rate_hz=rate)
    prompts = validate_prompt_set([(f"cue {i}", 1) for i in range(n_noise + 1)])
    return series, prompts


class TestSelectOne:
    def test_picks_argmax_channel(self):
        series, prompts = benchmark_series(seed=3, n_noise=2)
        # oracle: score each one-hot vector through the pipeline directly
        per_channel = [
            evaluate_weights(series, prompts, np.eye(3)[i], 1.0).e_value for i in range(3)
        ]
        result = select_one(series, prompts, window_seconds=1.0)
        expected = int(np.argmax(per_channel))
        weights = np.array(result.best_weights.weights)
        assert weights[expected] == 1.0
        assert weights.sum() == 1.0
        assert result.best_e == pytest.approx(max(per_channel))
        assert result.mode == "ONE"
        assert len(result.history) == 1

    def test_single_channel(self):
        series, prompts = benchmark_series(seed=5, n_noise=0)
        result = select_one(series, prompts, window_seconds=1.0)
        assert result.best_weights.weights == (1.0,)

    def test_tie_breaks_to_lower_index(self):
        rng = np.random.default_rng(9)
        col = 0.1 + 0.3 * sigmoid(np.arange(1, 101, dtype=float), 0.2, 50.0)
        col = col + rng.normal(0, 0.01, 100)
        values = np.column_stack([col, col])  # bit-identical channels
        series = validate_series(values, sample_rate_hz=10.0)
        prompts = validate_prompt_set([("cue 0", 1), ("cue 1", 1)])
        result = select_one(series, prompts, window_seconds=1.0)
        assert result.best_weights.weights == (1.0, 0.0)


class TestSelectAll:
    def test_uniform_weights(self):
        series, prompts = benchmark_series(seed=3, n_noise=4)
        result = select_all(series, prompts, window_seconds=1.0)
        assert result.best_weights.weights == (1.0,) * 5
        assert result.mode == "ALL"
        assert len(result.history) == 1

    def test_clean_antonym_pair_scores_positive(self):
        t = np.arange(1, 201, dtype=float)
        rng = np.random.default_rng(13)
        up = 0.1 + 0.3 * sigmoid(t, 0.1, 100.0) + rng.normal(0, 0.01, 200)
        down = 0.4 - 0.3 * sigmoid(t, 0.1, 100.0) + rng.normal(0, 0.01, 200)
        series = validate_series(
            np.clip(np.column_stack([up, down]), -1, 1), sample_rate_hz=10.0
        )
        prompts = validate_prompt_set([("changed", 1), ("unchanged", -1)])
        result = select_all(series, prompts, window_seconds=1.0)
        assert result.best_e > 0

    def test_pure_noise_scores_near_zero(self):
        rng = np.random.default_rng(17)
        cols = [0.25 + band_noise(rng, 150, 0.05) for _ in range(3)]
        series = validate_series(
            np.clip(np.column_stack(cols), -1, 1), sample_rate_hz=10.0
        )
        prompts = validate_prompt_set([(f"cue {i}", 1) for i in range(3)])
        noise_result = select_all(series, prompts, window_seconds=1.0)
        informative, iprompts = benchmark_series(seed=17, n_noise=0, frames=150)
        informative_result = select_all(informative, iprompts, window_seconds=1.0)
        assert noise_result.best_e < informative_result.best_e / 10

    def test_single_channel_matches_select_one(self):
        series, prompts = benchmark_series(seed=5, n_noise=0)
        one = select_one(series, prompts, window_seconds=1.0)
        all_ = select_all(series, prompts, window_seconds=1.0)
        assert one.best_fit == all_.best_fit
        assert one.best_weights == all_.best_weights


class TestOptimize:
    def test_concentrates_on_informative_channel(self):
        series, prompts = benchmark_series(seed=1, n_noise=9)
        ga = GaConfig(population_size=50, generations=40, rng_seed=1)
        result = optimize(series, prompts, ga=ga, window_seconds=1.0)
        weights = np.array(result.best_weights.weights)
        assert weights[0] / weights.sum() >= 0.5
        all_result = select_all(series, prompts, window_seconds=1.0)
        assert result.best_e > all_result.best_e
        assert result.mode == "OPT"
        assert result.ga_config == ga
        assert len(result.history) == ga.generations

    def test_identical_channels_match_single_channel_e(self):
        col = 0.1 + 0.3 * sigmoid(np.arange(1, 151, dtype=float), 0.15, 75.0)
        values = np.column_stack([col, col, col])
        series = validate_series(values, sample_rate_hz=10.0)
        prompts = validate_prompt_set([(f"cue {i}", 1) for i in range(3)])
        single = evaluate_weights(series, prompts, [1.0, 0.0, 0.0], 1.0)
        rng = np.random.default_rng(21)
        for _ in range(5):
            w = rng.uniform(0.05, 1.0, 3)
            mixed = evaluate_weights(series, prompts, w, 1.0)
            assert mixed.e_value == pytest.approx(single.e_value, rel=1e-9)

    def test_deterministic_with_seed(self):
        series, prompts = benchmark_series(seed=2, n_noise=4, frames=120)
        ga = GaConfig(population_size=20, generations=10, rng_seed=77)
        a = optimize(series, prompts, ga=ga, window_seconds=1.0)
        b = optimize(series, prompts, ga=ga, window_seconds=1.0)
        assert a.best_weights == b.best_weights
        assert a.history == b.history
        assert a.best_fit == b.best_fit

    def test_parallel_fitness_matches_serial(self):
        series, prompts = benchmark_series(seed=2, n_noise=4, frames=120)
        ga = GaConfig(population_size=20, generations=8, rng_seed=5)
        serial = optimize(series, prompts, ga=ga, window_seconds=1.0)
        with ThreadPoolExecutor(max_workers=4) as pool:
            parallel = optimize(
                series, prompts, ga=ga, window_seconds=1.0, eval_map=pool.map
            )
        assert serial.best_weights == parallel.best_weights
        assert serial.history == parallel.history

    def test_population_stays_in_bounds_and_best_monotone(self):
        series, prompts = benchmark_series(seed=4, n_noise=4, frames=120)
        seen = []

        def hook(gen, population, fitnesses, best_e):
            for ind in population:
                assert ind.min() >= 0.0
                assert ind.max() <= 1.0
            seen.append(best_e)

        optimize(
            series,
            prompts,
            ga=GaConfig(population_size=20, generations=15, rng_seed=3),
            window_seconds=1.0,
            on_generation=hook,
        )
        assert len(seen) == 15
        assert all(b >= a for a, b in zip(seen, seen[1:]))

    def test_constant_series_flags_no_signal(self):
        values = np.full((50, 3), 0.25)
        series = validate_series(values, sample_rate_hz=10.0)
        prompts = validate_prompt_set([(f"cue {i}", 1) for i in range(3)])
        result = optimize(
            series,
            prompts,
            ga=GaConfig(population_size=10, generations=5, rng_seed=0),
            window_seconds=1.0,
        )
        assert result.no_signal
        assert result.best_e == 0.0
        assert result.normalization is None

    def test_series_prompt_mismatch(self):
        series, _ = benchmark_series(seed=2, n_noise=4)
        prompts = validate_prompt_set([("cue 0", 1)])
        with pytest.raises(ValueError, match="N="):
            optimize(series, prompts)


class TestGaConfig:
    def test_defaults_follow_conventions(self):
        ga = GaConfig()
        assert ga.population_size == 300
        assert ga.generations == 300
        assert ga.crossover_prob == 0.5
        assert ga.mutation_prob == 0.2
        assert ga.mutation_sigma == pytest.approx(np.sqrt(0.1))
        assert ga.tournament_size == 5

    def test_validation(self):
        with pytest.raises(ValidationError):
            GaConfig(crossover_prob=1.5)
        with pytest.raises(ValidationError):
            GaConfig(population_size=0)

    def test_round_trip(self):
        ga = GaConfig(population_size=10, generations=5, rng_seed=9)
        assert GaConfig.from_dict(ga.to_dict()) == ga
