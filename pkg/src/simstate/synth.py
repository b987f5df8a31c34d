"""Synthetic similarity recordings for benchmarks and tests.

Four canonical transition shapes are covered: (i) change throughout the
recording, (ii) late onset, (iii) early change that saturates, (iv) flat,
then change, then flat again. All four are sigmoids with different slope and
center; informative columns carry the curve mapped into a plausible cosine
band, noise columns carry band-limited noise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fitting import sigmoid
from .model import PromptSet, SimilaritySeries, ValidationError

PATTERNS = ("i", "ii", "iii", "iv")

# Cosine band informative curves are mapped into; realistic image-text
# similarities cluster in a narrow positive range.
BAND_LO = 0.1
BAND_HI = 0.4

_NOISE_SMOOTH = 5  # boxcar width that band-limits noise columns


def _pattern_defaults(pattern: str, frames: int) -> tuple[float, float]:
    t = float(frames)
    if pattern == "i":
        return 4.0 / t, 0.5 * t
    if pattern == "ii":
        return 30.0 / t, 0.75 * t
    if pattern == "iii":
        return 30.0 / t, 0.25 * t
    return 30.0 / t, 0.5 * t  # iv


@dataclass(frozen=True)
class SynthSpec:
    """Recipe for one synthetic recording."""

    pattern: str
    frames: int = 600
    sample_rate_hz: float = 10.0
    n_informative: int = 1
    n_noise: int = 0
    noise_sd: float = 0.0
    true_alpha: float | None = None
    true_beta: float | None = None
    rng_seed: int = 0

    def __post_init__(self):
        violations = []
        if self.pattern not in PATTERNS:
            violations.append(f"pattern must be one of {PATTERNS}, got {self.pattern!r}")
        if self.frames < 2:
            violations.append("frames must be >= 2")
        if self.sample_rate_hz <= 0:
            violations.append("sample_rate_hz must be positive")
        if self.n_informative < 0 or self.n_noise < 0 or self.n_informative + self.n_noise < 1:
            violations.append("need n_informative + n_noise >= 1 with non-negative counts")
        if self.noise_sd < 0:
            violations.append("noise_sd must be non-negative")
        if self.true_alpha is not None and self.true_alpha <= 0:
            violations.append("true_alpha must be positive")
        if self.true_beta is not None and self.true_beta < 0:
            violations.append("true_beta must be non-negative")
        if violations:
            raise ValidationError(violations)

    @property
    def n(self) -> int:
        return self.n_informative + self.n_noise

    def resolved_params(self) -> tuple[float, float]:
        """(alpha, beta) in sample-index units, pattern defaults unless set."""
        alpha, beta = _pattern_defaults(self.pattern, self.frames)
        if self.true_alpha is not None:
            alpha = self.true_alpha
        if self.true_beta is not None:
            beta = self.true_beta
        return alpha, beta

    def to_dict(self) -> dict:
        return {
            "pattern": self.pattern,
            "frames": self.frames,
            "sample_rate_hz": self.sample_rate_hz,
            "n_informative": self.n_informative,
            "n_noise": self.n_noise,
            "noise_sd": self.noise_sd,
            "true_alpha": self.true_alpha,
            "true_beta": self.true_beta,
            "rng_seed": self.rng_seed,
        }


@dataclass(frozen=True)
class SynthResult:
    prompts: PromptSet
    series: SimilaritySeries
    t_data: float
    alpha: float
    beta: float
    clean: np.ndarray  # unit sigmoid over t = 1..T


def _band_limited_noise(rng: np.random.Generator, frames: int, sd: float) -> np.ndarray:
    white = rng.normal(0.0, 1.0, size=frames)
    smooth = np.convolve(white, np.ones(_NOISE_SMOOTH) / _NOISE_SMOOTH, mode="same")
    scale = smooth.std()
    if scale > 0 and sd > 0:
        return smooth * (sd / scale)
    return np.zeros(frames)


def generate(spec: SynthSpec) -> SynthResult:
    """Build prompts, the similarity matrix, and the ground-truth change time.

    Informative columns alternate polarity; negative-polarity ones carry the
    mirrored curve. t_data is the (continuous) time where the clean curve
    reaches 80% of its range over the recording.
    """
    rng = np.random.Generator(np.random.PCG64(spec.rng_seed))
    alpha, beta = spec.resolved_params()
    t_idx = np.arange(1, spec.frames + 1, dtype=float)
    clean = sigmoid(t_idx, alpha, beta)
    span = BAND_HI - BAND_LO

    prompts = []
    columns = []
    for j in range(spec.n_informative):
        if j % 2 == 0:
            prompts.append((f"synthetic changed cue {j}", 1))
            curve = BAND_LO + span * clean
        else:
            prompts.append((f"synthetic unchanged cue {j}", -1))
            curve = BAND_LO + span * (1.0 - clean)
        columns.append(curve + rng.normal(0.0, spec.noise_sd, size=spec.frames))
    mid = 0.5 * (BAND_LO + BAND_HI)
    for k in range(spec.n_noise):
        prompts.append((f"synthetic background cue {k}", 1))
        columns.append(mid + _band_limited_noise(rng, spec.frames, spec.noise_sd))

    values = np.clip(np.column_stack(columns), -1.0, 1.0)
    prompt_set = PromptSet(tuple(prompts))
    series = SimilaritySeries(values=values, sample_rate_hz=spec.sample_rate_hz)

    # 80% point of the clean curve's range, solved on the continuous sigmoid.
    c_lo, c_hi = float(clean[0]), float(clean[-1])
    target = c_lo + 0.8 * (c_hi - c_lo)
    t_star = beta + math.log(target / (1.0 - target)) / alpha
    t_star = min(max(t_star, 1.0), float(spec.frames))
    t_data = (t_star - 1.0) / spec.sample_rate_hz

    return SynthResult(
        prompts=prompt_set,
        series=series,
        t_data=t_data,
        alpha=alpha,
        beta=beta,
        clean=clean,
    )
