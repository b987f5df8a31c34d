"""Search over prompt weights: genetic algorithm plus the two baselines
(best single prompt, uniform weights)."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import partial
from typing import Callable, Iterable, Sequence

import numpy as np

from .fitting import FitConfig, evaluate_weights
from .model import (
    NormalizationParams,
    PromptSet,
    SigmoidFit,
    SimilaritySeries,
    ValidationError,
    WeightVector,
)

MODE_OPT = "OPT"
MODE_ONE = "ONE"
MODE_ALL = "ALL"


@dataclass(frozen=True)
class GaConfig:
    """Genetic-algorithm settings.

    Defaults: 300 individuals over 300 generations, blend crossover at 50%,
    per-individual Gaussian mutation at 20% with sd sqrt(0.1) (variance 0.1),
    tournament size 5. ``gene_mutation_prob`` is the per-gene perturbation
    probability once an individual mutates; None means 1/N.
    """

    population_size: int = 300
    generations: int = 300
    crossover_prob: float = 0.5
    mutation_prob: float = 0.2
    mutation_mean: float = 0.0
    mutation_sigma: float = math.sqrt(0.1)
    tournament_size: int = 5
    blend_alpha: float = 0.5
    gene_mutation_prob: float | None = None
    rng_seed: int = 0

    def __post_init__(self):
        violations = []
        if self.population_size < 1 or self.generations < 1 or self.tournament_size < 1:
            violations.append("population_size, generations, tournament_size must be >= 1")
        for name in ("crossover_prob", "mutation_prob"):
            v = getattr(self, name)
            if not (0 <= v <= 1):
                violations.append(f"{name} must lie in [0, 1]")
        if self.gene_mutation_prob is not None and not (0 <= self.gene_mutation_prob <= 1):
            violations.append("gene_mutation_prob must lie in [0, 1]")
        if self.mutation_sigma < 0:
            violations.append("mutation_sigma must be non-negative")
        if violations:
            raise ValidationError(violations)

    def to_dict(self) -> dict:
        return {
            "population_size": self.population_size,
            "generations": self.generations,
            "crossover_prob": self.crossover_prob,
            "mutation_prob": self.mutation_prob,
            "mutation_mean": self.mutation_mean,
            "mutation_sigma": self.mutation_sigma,
            "tournament_size": self.tournament_size,
            "blend_alpha": self.blend_alpha,
            "gene_mutation_prob": self.gene_mutation_prob,
            "rng_seed": self.rng_seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GaConfig":
        return cls(
            population_size=int(d["population_size"]),
            generations=int(d["generations"]),
            crossover_prob=float(d["crossover_prob"]),
            mutation_prob=float(d["mutation_prob"]),
            mutation_mean=float(d["mutation_mean"]),
            mutation_sigma=float(d["mutation_sigma"]),
            tournament_size=int(d["tournament_size"]),
            blend_alpha=float(d["blend_alpha"]),
            gene_mutation_prob=(
                None if d.get("gene_mutation_prob") is None else float(d["gene_mutation_prob"])
            ),
            rng_seed=int(d["rng_seed"]),
        )


@dataclass(frozen=True)
class OptimizationResult:
    """Best weights found, their fit and frozen normalization, and the
    per-generation (best E, mean E) history (length 1 for the baselines)."""

    mode: str
    best_weights: WeightVector
    best_fit: SigmoidFit
    normalization: NormalizationParams | None
    history: tuple[tuple[float, float], ...]
    no_signal: bool
    window_seconds: float
    ga_config: GaConfig | None = None
    fit_config: FitConfig = field(default_factory=FitConfig)

    @property
    def best_e(self) -> float:
        return self.best_fit.e_value

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "best_weights": self.best_weights.to_dict(),
            "best_fit": self.best_fit.to_dict(),
            "normalization": None if self.normalization is None else self.normalization.to_dict(),
            "history": [list(h) for h in self.history],
            "no_signal": self.no_signal,
            "window_seconds": self.window_seconds,
            "ga_config": None if self.ga_config is None else self.ga_config.to_dict(),
            "fit_config": self.fit_config.to_dict(),
        }


def _fitness(
    series: SimilaritySeries,
    prompts: PromptSet,
    window_seconds: float,
    config: FitConfig,
    weights: np.ndarray,
) -> float:
    return evaluate_weights(series, prompts, weights, window_seconds, config).e_value


def _finalize(
    mode: str,
    series: SimilaritySeries,
    prompts: PromptSet,
    best: np.ndarray,
    history: Sequence[tuple[float, float]],
    window_seconds: float,
    fit_config: FitConfig,
    ga_config: GaConfig | None = None,
) -> OptimizationResult:
    if best.sum() <= 0:
        # Only reachable when every individual scored zero; fall back to
        # uniform weights so the artifact stays loadable.
        best = np.ones_like(best)
    outcome = evaluate_weights(series, prompts, best, window_seconds, fit_config)
    return OptimizationResult(
        mode=mode,
        best_weights=WeightVector(tuple(float(w) for w in best)),
        best_fit=outcome.fit,
        normalization=outcome.normalization,
        history=tuple((float(b), float(m)) for b, m in history),
        no_signal=outcome.e_value == 0.0,
        window_seconds=window_seconds,
        ga_config=ga_config,
        fit_config=fit_config,
    )


def optimize(
    series: SimilaritySeries,
    prompts: PromptSet,
    ga: GaConfig | None = None,
    fit: FitConfig | None = None,
    window_seconds: float = 3.0,
    eval_map: Callable[..., Iterable[float]] = map,
    on_generation: Callable[[int, list[np.ndarray], list[float], float], None] | None = None,
) -> OptimizationResult:
    """Maximize the evaluation value E over weight vectors in [0, 1]^N.

    Uniform-random initialization; each generation applies tournament
    selection, pairwise blend crossover, per-gene Gaussian mutation, and
    clips genes back to [0, 1]. The all-time best individual is tracked
    outside the population, so the reported best never degrades.

    ``eval_map`` maps the fitness function over genomes and may be a parallel
    map (fitness is pure); results must preserve order. ``on_generation`` is
    a hook called as (generation, population, fitnesses, best_e) after each
    evaluation round, mainly for instrumented tests.
    """
    ga = ga or GaConfig()
    fit = fit or FitConfig()
    n = prompts.n
    if series.n != n:
        raise ValueError(f"series has N={series.n} columns but prompt set has N={n}")
    rng = np.random.Generator(np.random.PCG64(ga.rng_seed))
    indpb = ga.gene_mutation_prob if ga.gene_mutation_prob is not None else 1.0 / n
    score = partial(_fitness, series, prompts, window_seconds, fit)

    population = [rng.uniform(0.0, 1.0, size=n) for _ in range(ga.population_size)]
    fitnesses = list(eval_map(score, population))

    best_idx = int(np.argmax(fitnesses))
    best = population[best_idx].copy()
    best_e = fitnesses[best_idx]
    history: list[tuple[float, float]] = []

    for gen in range(ga.generations):
        # Tournament selection, with replacement.
        selected = []
        inherited = []
        for _ in range(ga.population_size):
            contenders = rng.integers(0, ga.population_size, size=ga.tournament_size)
            winner = contenders[int(np.argmax([fitnesses[c] for c in contenders]))]
            selected.append(population[winner].copy())
            inherited.append(fitnesses[winner])
        dirty = [False] * ga.population_size

        # Blend crossover on consecutive pairs.
        for i in range(1, ga.population_size, 2):
            if rng.random() < ga.crossover_prob:
                x1, x2 = selected[i - 1], selected[i]
                gamma = (1.0 + 2.0 * ga.blend_alpha) * rng.uniform(size=n) - ga.blend_alpha
                c1 = (1.0 - gamma) * x1 + gamma * x2
                c2 = gamma * x1 + (1.0 - gamma) * x2
                selected[i - 1], selected[i] = c1, c2
                dirty[i - 1] = dirty[i] = True

        # Gaussian mutation.
        for i in range(ga.population_size):
            if rng.random() < ga.mutation_prob:
                mask = rng.uniform(size=n) < indpb
                if mask.any():
                    selected[i][mask] += rng.normal(
                        ga.mutation_mean, ga.mutation_sigma, size=int(mask.sum())
                    )
                dirty[i] = True

        for i in range(ga.population_size):
            if dirty[i]:
                np.clip(selected[i], 0.0, 1.0, out=selected[i])

        # Re-score only changed genomes; untouched clones inherit their
        # parent's fitness.
        changed = [i for i in range(ga.population_size) if dirty[i]]
        new_scores = list(eval_map(score, [selected[i] for i in changed]))
        fitnesses = inherited
        for i, s in zip(changed, new_scores):
            fitnesses[i] = s
        population = selected

        gen_best = int(np.argmax(fitnesses))
        if fitnesses[gen_best] > best_e:
            best_e = fitnesses[gen_best]
            best = population[gen_best].copy()
        history.append((best_e, float(np.mean(fitnesses))))
        if on_generation is not None:
            on_generation(gen, population, fitnesses, best_e)

    return _finalize(MODE_OPT, series, prompts, best, history, window_seconds, fit, ga)


def select_one(
    series: SimilaritySeries,
    prompts: PromptSet,
    fit: FitConfig | None = None,
    window_seconds: float = 3.0,
    eval_map: Callable[..., Iterable[float]] = map,
) -> OptimizationResult:
    """Best single prompt: scores every one-hot weight vector and keeps the
    argmax-E one. Ties break to the lowest index."""
    fit = fit or FitConfig()
    n = prompts.n
    if series.n != n:
        raise ValueError(f"series has N={series.n} columns but prompt set has N={n}")
    candidates = [np.eye(n)[i] for i in range(n)]
    score = partial(_fitness, series, prompts, window_seconds, fit)
    scores = list(eval_map(score, candidates))
    best_idx = int(np.argmax(scores))  # first occurrence wins ties
    history = [(float(scores[best_idx]), float(np.mean(scores)))]
    return _finalize(MODE_ONE, series, prompts, candidates[best_idx], history, window_seconds, fit)


def select_all(
    series: SimilaritySeries,
    prompts: PromptSet,
    fit: FitConfig | None = None,
    window_seconds: float = 3.0,
) -> OptimizationResult:
    """Uniform weights baseline: w_i = 1 for every prompt."""
    fit = fit or FitConfig()
    n = prompts.n
    if series.n != n:
        raise ValueError(f"series has N={series.n} columns but prompt set has N={n}")
    weights = np.ones(n)
    e = _fitness(series, prompts, window_seconds, fit, weights)
    history = [(float(e), float(e))]
    return _finalize(MODE_ALL, series, prompts, weights, history, window_seconds, fit)
