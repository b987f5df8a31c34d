"""Online change detection: threshold crossing of the moving-averaged,
normalized aggregate, with frozen normalization bounds."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .model import (
    DegenerateWeightsError,
    DetectionReport,
    NormalizationParams,
    PromptSet,
    SimilaritySeries,
    WeightVector,
)
from .signal import WEIGHT_EPS


@dataclass(frozen=True)
class ChangeDetected:
    """Fired once, at the first sample whose averaged normalized value
    strictly exceeds the threshold."""

    t_detected: float
    sample_index: int
    value: float


class ChangeDetector:
    """Single-stream detector; feed one similarity row per frame via step().

    Uses the same growing-window trailing average as the offline pipeline and
    the frozen normalization bounds, so replaying a recording sample by sample
    reproduces the offline detection time exactly. One instance per stream;
    instances share no state.
    """

    def __init__(
        self,
        prompts: PromptSet,
        weights: WeightVector | Sequence[float] | np.ndarray,
        normalization: NormalizationParams,
        threshold: float = 0.8,
        window_samples: int | None = None,
    ):
        w = weights.as_array() if isinstance(weights, WeightVector) else np.asarray(weights, float)
        if w.shape != (prompts.n,):
            raise ValueError(f"weights length {w.shape} does not match N={prompts.n}")
        total = w.sum()
        if total <= WEIGHT_EPS:
            raise DegenerateWeightsError(f"sum of weights {total} <= {WEIGHT_EPS}")
        self.prompts = prompts
        self.normalization = normalization
        self.threshold = threshold
        self.window = (
            normalization.window_samples if window_samples is None else window_samples
        )
        self._pw = prompts.polarities * w
        self._total = total
        self._buffer: deque[float] = deque(maxlen=max(self.window, 1))
        self.samples_seen = 0
        self.fired = False
        self.event: ChangeDetected | None = None
        self.last_raw = None  # normalized units, set by step()
        self.last_averaged = None

    def reset(self):
        self._buffer.clear()
        self.samples_seen = 0
        self.fired = False
        self.event = None
        self.last_raw = None
        self.last_averaged = None

    def _normalize(self, x: float) -> float:
        p = self.normalization
        return (x - p.a_min) / (p.a_max - p.a_min)

    def step(self, similarity_row: Sequence[float] | np.ndarray, time: float) -> ChangeDetected | None:
        """Ingest one frame; returns the detection event the first (and only)
        time the averaged normalized value exceeds the threshold."""
        row = np.asarray(similarity_row, dtype=float)
        if row.shape != (self.prompts.n,):
            raise ValueError(f"row has {row.shape} values, expected N={self.prompts.n}")
        a_raw = float(row @ self._pw) / self._total
        if self.window <= 1:
            averaged = a_raw
        else:
            self._buffer.append(a_raw)
            averaged = float(np.mean(self._buffer))
        self.samples_seen += 1
        self.last_raw = self._normalize(a_raw)
        self.last_averaged = self._normalize(averaged)
        if not self.fired and self.last_averaged > self.threshold:
            self.fired = True
            self.event = ChangeDetected(
                t_detected=time, sample_index=self.samples_seen - 1, value=self.last_averaged
            )
            return self.event
        return None


def evaluate_detection(
    series: SimilaritySeries,
    prompts: PromptSet,
    weights: WeightVector | Sequence[float] | np.ndarray,
    normalization: NormalizationParams,
    threshold: float = 0.8,
    t_data: float | None = None,
    window_samples: int | None = None,
) -> DetectionReport:
    """Offline detection: replays step() over the recorded series.

    Same arithmetic path as the online detector, so t_detected is identical
    bit for bit. t_diff appears in the report only when t_data is given and
    a crossing was found.
    """
    det = ChangeDetector(prompts, weights, normalization, threshold, window_samples)
    times = series.times()
    trace = []
    event = None
    for k in range(series.t):
        fired = det.step(series.values[k], float(times[k]))
        if fired is not None:
            event = fired
        trace.append((float(times[k]), det.last_raw, det.last_averaged))
    return DetectionReport(
        threshold=threshold,
        t_detected=None if event is None else event.t_detected,
        t_data=t_data,
        trace=tuple(trace),
    )
