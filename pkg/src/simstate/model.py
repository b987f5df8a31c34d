"""Core domain types shared by the whole toolkit.

Everything here is immutable after construction and safe to share between
threads or processes. Validation happens in the constructors (or the
``validate_*`` helpers), so downstream code can assume the invariants hold.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

SIMILARITY_EPS = 1e-9  # slack for cosine bound checks in strict mode


class ValidationError(ValueError):
    """Input failed validation. Carries the full list of violations."""

    def __init__(self, violations: Sequence[str]):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class DegenerateWeightsError(ValueError):
    """Total prompt weight is (numerically) zero, the aggregate is undefined."""


class FlatSignalError(ValueError):
    """Signal range is (numerically) zero, min-max scaling is undefined."""


@dataclass(frozen=True)
class PromptSet:
    """Ordered prompt texts with polarity labels.

    Order matters: the i-th prompt owns column i of any similarity matrix and
    weight index i of any weight vector. ``content_hash`` ties those artifacts
    to this exact prompt list.
    """

    prompts: tuple[tuple[str, int], ...]

    def __post_init__(self):
        violations = []
        if len(self.prompts) == 0:
            violations.append("prompt set is empty")
        seen = set()
        for idx, (text, polarity) in enumerate(self.prompts):
            if not text:
                violations.append(f"prompt {idx}: empty text")
            if "\n" in text or "\r" in text:
                violations.append(f"prompt {idx}: text contains a line break")
            if polarity not in (1, -1):
                violations.append(f"prompt {idx}: invalid polarity {polarity!r}")
            if (text, polarity) in seen:
                violations.append(f"prompt {idx}: duplicate entry {text!r} ({polarity:+d})")
            seen.add((text, polarity))
        if violations:
            raise ValidationError(violations)

    @property
    def n(self) -> int:
        return len(self.prompts)

    @property
    def texts(self) -> tuple[str, ...]:
        return tuple(t for t, _ in self.prompts)

    @property
    def polarities(self) -> np.ndarray:
        arr = np.array([p for _, p in self.prompts], dtype=float)
        arr.flags.writeable = False
        return arr

    def content_hash(self) -> str:
        """SHA-256 over the ordered (polarity, text) pairs."""
        blob = "\n".join(f"{p:+d}\t{t}" for t, p in self.prompts)
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()

    def to_dict(self) -> dict:
        return {"prompts": [{"text": t, "polarity": p} for t, p in self.prompts]}

    @classmethod
    def from_dict(cls, d: dict) -> "PromptSet":
        return cls(tuple((e["text"], int(e["polarity"])) for e in d["prompts"]))


def validate_prompt_set(entries: Iterable[tuple[str, int]]) -> PromptSet:
    """Build a PromptSet from (text, polarity) pairs, preserving order."""
    return PromptSet(tuple((str(t), int(p)) for t, p in entries))


@dataclass(frozen=True)
class SimilaritySeries:
    """T x N matrix of per-prompt cosine similarities over time."""

    values: np.ndarray
    sample_rate_hz: float
    timestamps: np.ndarray | None = None
    clamp_warnings: int = 0  # entries clamped on lenient ingest

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        values.flags.writeable = False
        object.__setattr__(self, "values", values)
        violations = []
        if values.ndim != 2:
            violations.append(f"similarity matrix must be 2-D, got shape {values.shape}")
            raise ValidationError(violations)
        if values.shape[0] < 2:
            violations.append(f"T < 2 (got T={values.shape[0]})")
        if not np.isfinite(values).all():
            violations.append("similarity matrix contains non-finite entries")
        if not (self.sample_rate_hz > 0):
            violations.append(f"sample rate must be positive (got {self.sample_rate_hz})")
        if self.timestamps is not None:
            ts = np.asarray(self.timestamps, dtype=float)
            ts.flags.writeable = False
            object.__setattr__(self, "timestamps", ts)
            if ts.shape != (values.shape[0],):
                violations.append("timestamps length does not match T")
            elif not np.all(np.diff(ts) > 0):
                violations.append("timestamps are not strictly increasing")
        if violations:
            raise ValidationError(violations)

    @property
    def t(self) -> int:
        return self.values.shape[0]

    @property
    def n(self) -> int:
        return self.values.shape[1]

    def times(self) -> np.ndarray:
        """Per-frame times in seconds: explicit timestamps, else (k-1)/rate."""
        if self.timestamps is not None:
            return self.timestamps
        out = np.arange(self.t, dtype=float) / self.sample_rate_hz
        out.flags.writeable = False
        return out

    def to_dict(self) -> dict:
        return {
            "values": self.values.tolist(),
            "sample_rate_hz": self.sample_rate_hz,
            "timestamps": None if self.timestamps is None else self.timestamps.tolist(),
            "clamp_warnings": self.clamp_warnings,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SimilaritySeries":
        ts = d.get("timestamps")
        return cls(
            values=np.asarray(d["values"], dtype=float),
            sample_rate_hz=float(d["sample_rate_hz"]),
            timestamps=None if ts is None else np.asarray(ts, dtype=float),
            clamp_warnings=int(d.get("clamp_warnings", 0)),
        )


def validate_series(
    raw: Sequence[Sequence[float]] | np.ndarray,
    sample_rate_hz: float,
    timestamps: Sequence[float] | None = None,
    strict: bool = True,
    n_expected: int | None = None,
) -> SimilaritySeries:
    """Validate a raw similarity matrix and wrap it as a SimilaritySeries.

    In strict mode entries outside [-1, 1] are rejected; in lenient mode they
    are clamped and counted (embedding backends can emit values a hair outside
    the bound).
    """
    violations = []
    if not isinstance(raw, np.ndarray):
        rows = [list(r) for r in raw]
        lengths = {len(r) for r in rows}
        if len(lengths) > 1:
            raise ValidationError([f"ragged rows: row lengths {sorted(lengths)}"])
        values = np.array(rows, dtype=float)
    else:
        values = np.asarray(raw, dtype=float)
    if values.ndim != 2:
        raise ValidationError([f"similarity matrix must be 2-D, got shape {values.shape}"])
    if n_expected is not None and values.shape[1] != n_expected:
        violations.append(f"expected N={n_expected} columns, got {values.shape[1]}")
    clamp_warnings = 0
    if np.isfinite(values).all():
        out_of_range = (values < -1.0 - SIMILARITY_EPS) | (values > 1.0 + SIMILARITY_EPS)
        if out_of_range.any():
            if strict:
                bad = np.argwhere(out_of_range)[0]
                violations.append(
                    f"similarity out of range at row {bad[0]}, column {bad[1]}: "
                    f"{values[bad[0], bad[1]]}"
                )
            else:
                clamp_warnings = int(out_of_range.sum())
        if not strict:
            values = np.clip(values, -1.0, 1.0)
    if violations:
        raise ValidationError(violations)
    return SimilaritySeries(
        values=values,
        sample_rate_hz=sample_rate_hz,
        timestamps=None if timestamps is None else np.asarray(timestamps, dtype=float),
        clamp_warnings=clamp_warnings,
    )


@dataclass(frozen=True)
class WeightVector:
    """Per-prompt weights in [0, 1]. An all-zero vector is not a valid artifact."""

    weights: tuple[float, ...]

    def __post_init__(self):
        violations = []
        arr = np.array(self.weights, dtype=float)
        if arr.size == 0:
            violations.append("weight vector is empty")
        if np.any(arr < 0) or np.any(arr > 1):
            violations.append("weights must lie in [0, 1]")
        if arr.size and arr.sum() <= 0:
            violations.append("sum of weights must be positive")
        if violations:
            raise ValidationError(violations)

    @property
    def n(self) -> int:
        return len(self.weights)

    def as_array(self) -> np.ndarray:
        arr = np.array(self.weights, dtype=float)
        arr.flags.writeable = False
        return arr

    def to_dict(self) -> dict:
        return {"weights": list(self.weights)}

    @classmethod
    def from_dict(cls, d: dict) -> "WeightVector":
        return cls(tuple(float(w) for w in d["weights"]))


@dataclass(frozen=True)
class NormalizationParams:
    """Min-max bounds of the moving-averaged aggregate, frozen for inference."""

    a_min: float
    a_max: float
    window_samples: int

    def __post_init__(self):
        violations = []
        if not (self.a_max > self.a_min):
            violations.append(f"a_max ({self.a_max}) must exceed a_min ({self.a_min})")
        if self.window_samples < 0:
            violations.append("window_samples must be non-negative")
        if violations:
            raise ValidationError(violations)

    def to_dict(self) -> dict:
        return {"a_min": self.a_min, "a_max": self.a_max, "window_samples": self.window_samples}

    @classmethod
    def from_dict(cls, d: dict) -> "NormalizationParams":
        return cls(float(d["a_min"]), float(d["a_max"]), int(d["window_samples"]))


@dataclass(frozen=True)
class SigmoidFit:
    """Fitted transition curve: slope alpha, center beta (sample indices), RMSE
    sigma, and the evaluation value alpha*beta/max(sigma, floor)."""

    alpha: float
    beta: float
    sigma: float
    e_value: float
    converged: bool

    def __post_init__(self):
        violations = []
        if self.alpha < 0 or self.beta < 0:
            violations.append("alpha and beta must be non-negative")
        if self.sigma < 0:
            violations.append("sigma must be non-negative")
        if self.e_value < 0:
            violations.append("e_value must be non-negative")
        if not self.converged and self.e_value != 0:
            violations.append("non-converged fits must carry e_value = 0")
        if violations:
            raise ValidationError(violations)

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "beta": self.beta,
            "sigma": self.sigma,
            "e_value": self.e_value,
            "converged": self.converged,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SigmoidFit":
        return cls(
            alpha=float(d["alpha"]),
            beta=float(d["beta"]),
            sigma=float(d["sigma"]),
            e_value=float(d["e_value"]),
            converged=bool(d["converged"]),
        )


@dataclass(frozen=True)
class DetectionReport:
    """Outcome of threshold-crossing detection against an optional annotation.

    ``trace`` rows are (time, raw_value, averaged_value) with both values in
    normalized units, matching the scale the threshold applies to.
    """

    threshold: float
    t_detected: float | None = None
    t_data: float | None = None
    trace: tuple[tuple[float, float, float], ...] = field(default_factory=tuple)

    def __post_init__(self):
        if self.t_detected is not None and self.t_detected < 0:
            raise ValidationError(["t_detected must be non-negative"])

    @property
    def detected(self) -> bool:
        return self.t_detected is not None

    @property
    def t_diff(self) -> float | None:
        """|t_detected - t_data|; present only when both times are known."""
        if self.t_detected is None or self.t_data is None:
            return None
        return abs(self.t_detected - self.t_data)

    def to_dict(self) -> dict:
        return {
            "threshold": self.threshold,
            "t_detected": self.t_detected,
            "t_data": self.t_data,
            "t_diff": self.t_diff,
            "detected": self.detected,
            "trace": [list(row) for row in self.trace],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DetectionReport":
        return cls(
            threshold=float(d["threshold"]),
            t_detected=None if d.get("t_detected") is None else float(d["t_detected"]),
            t_data=None if d.get("t_data") is None else float(d["t_data"]),
            trace=tuple(tuple(float(v) for v in row) for row in d.get("trace", [])),
        )


@dataclass(frozen=True)
class Dataset:
    """A recorded series in its workflow role.

    Evaluation runs must normalize with parameters frozen from an optimization
    run; the annotation (if any) is the hand-labelled change time in seconds.
    """

    role: str  # "optimization" | "evaluation"
    series: SimilaritySeries
    annotation: float | None = None

    def __post_init__(self):
        if self.role not in ("optimization", "evaluation"):
            raise ValidationError([f"unknown dataset role {self.role!r}"])

    def to_dict(self) -> dict:
        return {
            "role": self.role,
            "series": self.series.to_dict(),
            "annotation": self.annotation,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Dataset":
        ann = d.get("annotation")
        return cls(
            role=d["role"],
            series=SimilaritySeries.from_dict(d["series"]),
            annotation=None if ann is None else float(ann),
        )
