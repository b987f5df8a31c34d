"""Continuous state recognition from prompt-similarity time series.

The pipeline: aggregate per-prompt cosine similarities with polarity-signed
weights, smooth with a trailing moving average, min-max normalize, fit a
two-parameter sigmoid, and score weight vectors by E = alpha*beta/sigma.
A genetic algorithm searches the weight space; detection is a threshold
crossing of the normalized average with normalization bounds frozen from the
optimization run.
"""

from ._version import __version__
from .detector import ChangeDetected, ChangeDetector, evaluate_detection
from .fitting import (
    FitConfig,
    WeightEvaluation,
    evaluate_frozen,
    evaluate_weights,
    fit_sigmoid,
    sigmoid,
    sigmoid_partials,
)
from .model import (
    Dataset,
    DegenerateWeightsError,
    DetectionReport,
    FlatSignalError,
    NormalizationParams,
    PromptSet,
    SigmoidFit,
    SimilaritySeries,
    ValidationError,
    WeightVector,
    validate_prompt_set,
    validate_series,
)
from .optimizer import GaConfig, OptimizationResult, optimize, select_all, select_one
from .signal import (
    AggregateSignal,
    aggregate_pipeline,
    compute_normalization,
    moving_average,
    moving_average_samples,
    normalize,
    weighted_similarity,
    window_samples,
)
from .synth import SynthResult, SynthSpec, generate

__all__ = [
    "__version__",
    "AggregateSignal",
    "ChangeDetected",
    "ChangeDetector",
    "Dataset",
    "DegenerateWeightsError",
    "DetectionReport",
    "FitConfig",
    "FlatSignalError",
    "GaConfig",
    "NormalizationParams",
    "OptimizationResult",
    "PromptSet",
    "SigmoidFit",
    "SimilaritySeries",
    "SynthResult",
    "SynthSpec",
    "ValidationError",
    "WeightEvaluation",
    "WeightVector",
    "aggregate_pipeline",
    "compute_normalization",
    "evaluate_detection",
    "evaluate_frozen",
    "evaluate_weights",
    "fit_sigmoid",
    "generate",
    "moving_average",
    "moving_average_samples",
    "normalize",
    "optimize",
    "select_all",
    "select_one",
    "sigmoid",
    "sigmoid_partials",
    "validate_prompt_set",
    "validate_series",
    "weighted_similarity",
    "window_samples",
]
