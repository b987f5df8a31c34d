"""On-disk formats: similarity recordings, prompt lists, weight artifacts,
annotations, and plot-ready traces.

Similarity files are columnar text with a '#' header block (prompts,
polarities, sample rate, content hash) so a recording is self-describing and
diff-able. Weight artifacts are JSON and carry everything inference needs:
the weights, the prompt hash they belong to, the frozen normalization bounds,
and the fit that produced them. Loading verifies the prompt hash so weights
can never be silently applied to the wrong (or reordered) prompt list.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._version import __version__
from .fitting import FitConfig
from .model import (
    NormalizationParams,
    PromptSet,
    SigmoidFit,
    SimilaritySeries,
    ValidationError,
    WeightVector,
    validate_series,
)
from .optimizer import GaConfig, OptimizationResult

SIMILARITY_MAGIC = "# simstate similarity v1"
PROMPTS_MAGIC = "# simstate prompts v1"
TRACE_MAGIC = "# simstate trace v1"
WEIGHTS_FORMAT = "simstate-weights/v1"
ANNOTATION_FORMAT = "simstate-annotation/v1"
EVALUATION_FORMAT = "simstate-evaluation/v1"
DETECTION_FORMAT = "simstate-detection/v1"

TRACE_COLUMNS = ("time", "raw", "average", "sigmoid", "detected")


def file_sha256(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


@dataclass(frozen=True)
class RunManifest:
    """Everything needed to re-derive an output artifact byte for byte."""

    command: str
    args: dict
    input_hashes: dict = field(default_factory=dict)
    rng_seed: int | None = None
    tool_version: str = __version__

    def to_dict(self) -> dict:
        return {
            "command": self.command,
            "args": self.args,
            "input_hashes": self.input_hashes,
            "rng_seed": self.rng_seed,
            "tool_version": self.tool_version,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RunManifest":
        return cls(
            command=d["command"],
            args=dict(d.get("args", {})),
            input_hashes=dict(d.get("input_hashes", {})),
            rng_seed=d.get("rng_seed"),
            tool_version=d.get("tool_version", __version__),
        )


def _dump_json(obj: dict) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


# ---------------------------------------------------------------------------
# prompt files


def parse_prompt_lines(lines) -> PromptSet:
    entries = []
    violations = []
    for lineno, raw in enumerate(lines, start=1):
        line = raw.rstrip("\n").rstrip("\r")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        parts = line.split(maxsplit=1)
        if parts[0] not in ("+1", "-1") or len(parts) != 2:
            violations.append(f"line {lineno}: expected '<+1|-1> <text>', got {line!r}")
            continue
        entries.append((parts[1], int(parts[0])))
    if violations:
        raise ValidationError(violations)
    return PromptSet(tuple(entries))


def read_prompt_file(path: str | Path) -> PromptSet:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_prompt_lines(fh)


def write_prompt_file(path: str | Path, prompts: PromptSet):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(PROMPTS_MAGIC + "\n")
        for text, polarity in prompts.prompts:
            fh.write(f"{polarity:+d} {text}\n")


# ---------------------------------------------------------------------------
# similarity files


def write_similarity_file(
    path: str | Path,
    prompts: PromptSet,
    series: SimilaritySeries,
    manifest: RunManifest | None = None,
):
    with_time = series.timestamps is not None
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(SIMILARITY_MAGIC + "\n")
        fh.write(f"# sample_rate_hz: {series.sample_rate_hz!r}\n")
        fh.write(f"# n_prompts: {prompts.n}\n")
        fh.write(f"# prompt_hash: {prompts.content_hash()}\n")
        fh.write(f"# has_time: {'true' if with_time else 'false'}\n")
        if manifest is not None:
            fh.write(f"# manifest: {json.dumps(manifest.to_dict(), sort_keys=True)}\n")
        for text, polarity in prompts.prompts:
            fh.write(f"# prompt: {polarity:+d} {text}\n")
        times = series.timestamps
        for k in range(series.t):
            cells = [repr(float(v)) for v in series.values[k]]
            if with_time:
                cells.insert(0, repr(float(times[k])))
            fh.write("\t".join(cells) + "\n")


def read_similarity_file(
    path: str | Path, strict: bool = True
) -> tuple[PromptSet, SimilaritySeries, RunManifest | None]:
    header: dict = {}
    entries: list[tuple[str, int]] = []
    manifest = None
    rows: list[list[float]] = []
    violations: list[str] = []
    with open(path, "r", encoding="utf-8") as fh:
        first = fh.readline().rstrip("\n")
        if first != SIMILARITY_MAGIC:
            raise ValidationError([f"not a similarity file (bad magic line {first!r})"])
        for lineno, raw in enumerate(fh, start=2):
            line = raw.rstrip("\n").rstrip("\r")
            if not line.strip():
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                key, _, value = body.partition(":")
                key = key.strip()
                value = value.strip()
                if key == "prompt":
                    parts = value.split(maxsplit=1)
                    if parts[0] not in ("+1", "-1") or len(parts) != 2:
                        violations.append(f"line {lineno}: malformed prompt header {line!r}")
                    else:
                        entries.append((parts[1], int(parts[0])))
                elif key == "manifest":
                    manifest = RunManifest.from_dict(json.loads(value))
                else:
                    header[key] = value
                continue
            try:
                rows.append([float(tok) for tok in line.split()])
            except ValueError:
                violations.append(f"line {lineno}: non-numeric cell in {line!r}")
    if violations:
        raise ValidationError(violations)
    if "sample_rate_hz" not in header:
        raise ValidationError(["missing sample_rate_hz header"])
    prompts = PromptSet(tuple(entries))
    declared_n = int(header.get("n_prompts", prompts.n))
    if declared_n != prompts.n:
        raise ValidationError(
            [f"header declares {declared_n} prompts but {prompts.n} are listed"]
        )
    declared_hash = header.get("prompt_hash")
    if declared_hash is not None and declared_hash != prompts.content_hash():
        raise ValidationError(
            ["prompt hash mismatch: file prompts were edited or reordered"]
        )
    has_time = header.get("has_time", "false") == "true"
    timestamps = None
    if has_time:
        widths = {len(r) for r in rows}
        if widths and widths != {prompts.n + 1}:
            raise ValidationError(
                [f"ragged rows: expected {prompts.n + 1} cells, got widths {sorted(widths)}"]
            )
        timestamps = [r[0] for r in rows]
        rows = [r[1:] for r in rows]
    series = validate_series(
        rows,
        sample_rate_hz=float(header["sample_rate_hz"]),
        timestamps=timestamps,
        strict=strict,
        n_expected=prompts.n,
    )
    return prompts, series, manifest


# ---------------------------------------------------------------------------
# annotations


def write_annotation_file(path: str | Path, t_data: float, manifest: RunManifest | None = None):
    doc = {"format": ANNOTATION_FORMAT, "t_data": t_data}
    if manifest is not None:
        doc["manifest"] = manifest.to_dict()
    Path(path).write_text(_dump_json(doc), encoding="utf-8")


def read_annotation_file(path: str | Path) -> float:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if doc.get("format") != ANNOTATION_FORMAT:
        raise ValidationError([f"not an annotation file: {path}"])
    return float(doc["t_data"])


# ---------------------------------------------------------------------------
# weight artifacts


@dataclass(frozen=True)
class WeightsArtifact:
    """Self-contained optimization output used for detection and evaluation."""

    mode: str
    prompt_hash: str
    prompts: PromptSet
    weights: WeightVector
    normalization: NormalizationParams | None
    window_seconds: float
    fit_config: FitConfig
    best_fit: SigmoidFit
    history: tuple[tuple[float, float], ...]
    no_signal: bool
    ga_config: GaConfig | None = None
    manifest: RunManifest | None = None

    def require_normalization(self) -> NormalizationParams:
        if self.normalization is None:
            raise ValidationError(
                ["artifact carries no normalization (optimization found no signal)"]
            )
        return self.normalization

    def check_prompt_hash(self, other_hash: str):
        if self.prompt_hash != other_hash:
            raise ValidationError(
                ["prompt hash mismatch: weights belong to a different prompt set"]
            )


def write_weights_artifact(
    path: str | Path,
    result: OptimizationResult,
    prompts: PromptSet,
    manifest: RunManifest | None = None,
):
    doc = {
        "format": WEIGHTS_FORMAT,
        "mode": result.mode,
        "prompt_hash": prompts.content_hash(),
        "prompts": prompts.to_dict()["prompts"],
        "weights": list(result.best_weights.weights),
        "normalization": None
        if result.normalization is None
        else result.normalization.to_dict(),
        "window_seconds": result.window_seconds,
        "fit_config": result.fit_config.to_dict(),
        "ga_config": None if result.ga_config is None else result.ga_config.to_dict(),
        "best_fit": result.best_fit.to_dict(),
        "history": [list(h) for h in result.history],
        "no_signal": result.no_signal,
    }
    if manifest is not None:
        doc["manifest"] = manifest.to_dict()
    Path(path).write_text(_dump_json(doc), encoding="utf-8")


def read_weights_artifact(path: str | Path) -> WeightsArtifact:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if doc.get("format") != WEIGHTS_FORMAT:
        raise ValidationError([f"not a weights artifact: {path}"])
    prompts = PromptSet.from_dict({"prompts": doc["prompts"]})
    if prompts.content_hash() != doc["prompt_hash"]:
        raise ValidationError(["weights artifact is corrupt: stored prompt hash mismatch"])
    norm = doc.get("normalization")
    ga = doc.get("ga_config")
    return WeightsArtifact(
        mode=doc["mode"],
        prompt_hash=doc["prompt_hash"],
        prompts=prompts,
        weights=WeightVector(tuple(float(w) for w in doc["weights"])),
        normalization=None if norm is None else NormalizationParams.from_dict(norm),
        window_seconds=float(doc["window_seconds"]),
        fit_config=FitConfig.from_dict(doc["fit_config"]),
        best_fit=SigmoidFit.from_dict(doc["best_fit"]),
        history=tuple((float(b), float(m)) for b, m in doc.get("history", [])),
        no_signal=bool(doc.get("no_signal", False)),
        ga_config=None if ga is None else GaConfig.from_dict(ga),
        manifest=None
        if doc.get("manifest") is None
        else RunManifest.from_dict(doc["manifest"]),
    )


# ---------------------------------------------------------------------------
# plot-ready traces


def write_trace_file(path: str | Path, rows, manifest: RunManifest | None = None):
    """Columnar plot data; columns fixed to (time, raw, average, sigmoid,
    detected), in that order."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(TRACE_MAGIC + "\n")
        if manifest is not None:
            fh.write(f"# manifest: {json.dumps(manifest.to_dict(), sort_keys=True)}\n")
        fh.write("\t".join(TRACE_COLUMNS) + "\n")
        for row in rows:
            if len(row) != len(TRACE_COLUMNS):
                raise ValueError(f"trace rows need {len(TRACE_COLUMNS)} cells, got {len(row)}")
            fh.write("\t".join(repr(float(v)) for v in row) + "\n")


def read_trace_file(path: str | Path) -> tuple[list[str], np.ndarray]:
    columns: list[str] | None = None
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        first = fh.readline().rstrip("\n")
        if first != TRACE_MAGIC:
            raise ValidationError([f"not a trace file (bad magic line {first!r})"])
        for raw in fh:
            line = raw.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            if columns is None:
                columns = line.split("\t")
                continue
            rows.append([float(tok) for tok in line.split("\t")])
    return columns or [], np.asarray(rows, dtype=float)
