"""Aggregate-signal computation: polarity-weighted similarity, trailing
moving average, and min-max normalization."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .model import (
    DegenerateWeightsError,
    FlatSignalError,
    NormalizationParams,
    PromptSet,
    SimilaritySeries,
    WeightVector,
)

WEIGHT_EPS = 1e-9  # below this total weight the aggregate divides by ~0
RANGE_EPS = 1e-9  # below this range min-max scaling is meaningless


def _as_weight_array(w: WeightVector | Sequence[float] | np.ndarray) -> np.ndarray:
    if isinstance(w, WeightVector):
        return w.as_array()
    return np.asarray(w, dtype=float)


def weighted_similarity(
    series: SimilaritySeries,
    prompts: PromptSet,
    weights: WeightVector | Sequence[float] | np.ndarray,
) -> np.ndarray:
    """Per-frame aggregate: sum_i p_i * w_i * sim[t, i] / sum_i w_i.

    Scale-invariant in the weights; raises DegenerateWeightsError when the
    total weight is numerically zero.
    """
    w = _as_weight_array(weights)
    if series.n != prompts.n or w.shape != (prompts.n,):
        raise ValueError(
            f"inconsistent sizes: series N={series.n}, prompts N={prompts.n}, "
            f"weights N={w.shape}"
        )
    total = w.sum()
    if total <= WEIGHT_EPS:
        raise DegenerateWeightsError(f"sum of weights {total} <= {WEIGHT_EPS}")
    return series.values @ (prompts.polarities * w) / total


def window_samples(window_seconds: float, sample_rate_hz: float) -> int:
    """Window length in samples: round-half-up of seconds times rate."""
    if window_seconds < 0:
        raise ValueError("window_seconds must be non-negative")
    return int(math.floor(window_seconds * sample_rate_hz + 0.5))


def moving_average_samples(signal: Sequence[float] | np.ndarray, window: int) -> np.ndarray:
    """Trailing (causal) moving average over ``window`` samples.

    Indices with fewer than ``window`` samples behind them average over
    everything seen so far; window 0 or 1 returns the input unchanged.
    """
    x = np.asarray(signal, dtype=float)
    if x.ndim != 1 or x.size == 0:
        raise ValueError("signal must be a non-empty 1-D sequence")
    if window < 0:
        raise ValueError("window must be non-negative")
    if window <= 1:
        return x.copy()
    cs = np.cumsum(x)
    out = np.empty_like(x)
    head = min(window, x.size)
    out[:head] = cs[:head] / np.arange(1, head + 1)
    if x.size > window:
        out[window:] = (cs[window:] - cs[:-window]) / window
    return out


def moving_average(
    signal: Sequence[float] | np.ndarray, window_seconds: float, sample_rate_hz: float
) -> np.ndarray:
    """Trailing moving average with the window given in seconds."""
    return moving_average_samples(signal, window_samples(window_seconds, sample_rate_hz))


def compute_normalization(
    averaged: Sequence[float] | np.ndarray, window: int
) -> NormalizationParams:
    """Min/max of the averaged aggregate, kept for later (frozen) scaling."""
    x = np.asarray(averaged, dtype=float)
    if x.size < 2:
        raise ValueError("need at least 2 samples to compute normalization")
    a_min = float(x.min())
    a_max = float(x.max())
    if a_max - a_min < RANGE_EPS:
        raise FlatSignalError(f"signal range {a_max - a_min} < {RANGE_EPS}")
    return NormalizationParams(a_min=a_min, a_max=a_max, window_samples=window)


def normalize(
    signal: Sequence[float] | np.ndarray, params: NormalizationParams
) -> np.ndarray:
    """(x - a_min)/(a_max - a_min), deliberately unclamped.

    With parameters frozen from another dataset the output may leave [0, 1];
    downstream threshold logic is expected to cope.
    """
    x = np.asarray(signal, dtype=float)
    return (x - params.a_min) / (params.a_max - params.a_min)


@dataclass(frozen=True)
class AggregateSignal:
    """Raw aggregate, its trailing average, and the normalized average."""

    raw: np.ndarray
    averaged: np.ndarray
    normalized: np.ndarray
    window_samples: int

    def __post_init__(self):
        for name in ("raw", "averaged", "normalized"):
            arr = np.asarray(getattr(self, name), dtype=float)
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    def to_dict(self) -> dict:
        return {
            "raw": self.raw.tolist(),
            "averaged": self.averaged.tolist(),
            "normalized": self.normalized.tolist(),
            "window_samples": self.window_samples,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AggregateSignal":
        return cls(
            raw=np.asarray(d["raw"], dtype=float),
            averaged=np.asarray(d["averaged"], dtype=float),
            normalized=np.asarray(d["normalized"], dtype=float),
            window_samples=int(d["window_samples"]),
        )


def aggregate_pipeline(
    series: SimilaritySeries,
    prompts: PromptSet,
    weights: WeightVector | Sequence[float] | np.ndarray,
    window_seconds: float,
) -> tuple[AggregateSignal, NormalizationParams]:
    """Full chain: weighted similarity -> moving average -> min-max scaling.

    Raises DegenerateWeightsError or FlatSignalError; callers that must not
    abort (the optimizer) convert those into zero-fitness outcomes.
    """
    raw = weighted_similarity(series, prompts, weights)
    window = window_samples(window_seconds, series.sample_rate_hz)
    averaged = moving_average_samples(raw, window)
    params = compute_normalization(averaged, window)
    normalized = normalize(averaged, params)
    return AggregateSignal(raw, averaged, normalized, window), params
