"""Command-line surface: synth, optimize, detect, evaluate, validate.

Exit codes: 0 success, 2 validation failure, 3 no signal found / nothing
detected (distinguishable for scripting around the detector).
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from ._version import __version__
from .detector import ChangeDetector, evaluate_detection
from .fileio import (
    DETECTION_FORMAT,
    EVALUATION_FORMAT,
    RunManifest,
    WeightsArtifact,
    file_sha256,
    read_annotation_file,
    read_prompt_file,
    read_similarity_file,
    read_weights_artifact,
    write_annotation_file,
    write_similarity_file,
    write_trace_file,
    write_weights_artifact,
)
from .fitting import FitConfig, evaluate_frozen, sigmoid
from .model import DetectionReport, ValidationError
from .optimizer import GaConfig, optimize, select_all, select_one
from .signal import window_samples
from .synth import PATTERNS, SynthSpec, generate

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NO_SIGNAL = 3


def _add_fit_flags(p: argparse.ArgumentParser):
    g = p.add_argument_group("fitting")
    g.add_argument("--alpha-init", type=float, default=0.1)
    g.add_argument("--beta-init-fraction", type=float, default=0.5)
    g.add_argument("--max-iterations", type=int, default=200)
    g.add_argument("--residual-tolerance", type=float, default=1e-10)
    g.add_argument("--sigma-floor", type=float, default=1e-6)


def _fit_config(args) -> FitConfig:
    return FitConfig(
        alpha_init=args.alpha_init,
        beta_init_fraction=args.beta_init_fraction,
        max_iterations=args.max_iterations,
        residual_tolerance=args.residual_tolerance,
        sigma_floor=args.sigma_floor,
    )


def _add_ga_flags(p: argparse.ArgumentParser):
    g = p.add_argument_group("genetic algorithm")
    g.add_argument("--population", type=int, default=300)
    g.add_argument("--generations", type=int, default=300)
    g.add_argument("--crossover-prob", type=float, default=0.5)
    g.add_argument("--mutation-prob", type=float, default=0.2)
    g.add_argument("--mutation-mean", type=float, default=0.0)
    g.add_argument("--mutation-sigma", type=float, default=math.sqrt(0.1))
    g.add_argument("--tournament-size", type=int, default=5)
    g.add_argument("--blend-alpha", type=float, default=0.5)
    g.add_argument(
        "--gene-mutation-prob",
        type=float,
        default=None,
        help="per-gene perturbation probability inside a mutating individual (default 1/N)",
    )


def _ga_config(args) -> GaConfig:
    return GaConfig(
        population_size=args.population,
        generations=args.generations,
        crossover_prob=args.crossover_prob,
        mutation_prob=args.mutation_prob,
        mutation_mean=args.mutation_mean,
        mutation_sigma=args.mutation_sigma,
        tournament_size=args.tournament_size,
        blend_alpha=args.blend_alpha,
        gene_mutation_prob=args.gene_mutation_prob,
        rng_seed=args.seed,
    )


def _manifest(command: str, args, inputs: list[str], seed: int | None = None) -> RunManifest:
    arg_snapshot = {
        k: v for k, v in sorted(vars(args).items()) if k != "func" and v is not None
    }
    return RunManifest(
        command=command,
        args=arg_snapshot,
        input_hashes={p: file_sha256(p) for p in inputs},
        rng_seed=seed,
        tool_version=__version__,
    )


def _detection_trace_rows(series, prompts, weights, normalization, threshold, fit, window):
    """Rows of (time, raw, average, sigmoid, detected) in normalized units."""
    report = evaluate_detection(
        series, prompts, weights, normalization, threshold=threshold, window_samples=window
    )
    t_idx = np.arange(1, series.t + 1, dtype=float)
    curve = sigmoid(t_idx, fit.alpha, fit.beta)
    rows = []
    for k, (time, raw, avg) in enumerate(report.trace):
        detected = (
            1.0 if report.t_detected is not None and time >= report.t_detected else 0.0
        )
        rows.append((time, raw, avg, float(curve[k]), detected))
    return report, rows


# ---------------------------------------------------------------------------
# subcommands


def cmd_synth(args) -> int:
    spec = SynthSpec(
        pattern=args.pattern,
        frames=args.frames,
        sample_rate_hz=args.rate,
        n_informative=args.informative,
        n_noise=args.noise,
        noise_sd=args.noise_sd,
        true_alpha=args.alpha,
        true_beta=args.beta,
        rng_seed=args.seed,
    )
    result = generate(spec)
    manifest = _manifest("synth", args, inputs=[], seed=args.seed)
    write_similarity_file(args.out, result.prompts, result.series, manifest)
    annotation_path = args.annotation or args.out + ".annotation.json"
    write_annotation_file(annotation_path, result.t_data, manifest)
    print(
        f"wrote {args.out} ({result.series.t}x{result.series.n} at "
        f"{spec.sample_rate_hz} Hz) and {annotation_path} (t_data={result.t_data:.3f} s)"
    )
    return EXIT_OK


def cmd_optimize(args) -> int:
    prompts, series, _ = read_similarity_file(args.similarity, strict=not args.lenient)
    if args.prompts is not None:
        declared = read_prompt_file(args.prompts)
        if declared.content_hash() != prompts.content_hash():
            raise ValidationError(
                ["prompt file does not match the similarity file header prompts"]
            )
    fit_cfg = _fit_config(args)
    if args.mode == "opt":
        result = optimize(
            series,
            prompts,
            ga=_ga_config(args),
            fit=fit_cfg,
            window_seconds=args.window_seconds,
        )
    elif args.mode == "one":
        result = select_one(series, prompts, fit=fit_cfg, window_seconds=args.window_seconds)
    else:
        result = select_all(series, prompts, fit=fit_cfg, window_seconds=args.window_seconds)

    manifest = _manifest(
        "optimize",
        args,
        inputs=[args.similarity] + ([args.prompts] if args.prompts else []),
        seed=args.seed,
    )
    write_weights_artifact(args.out, result, prompts, manifest)
    if args.trace is not None and result.normalization is not None:
        window = window_samples(args.window_seconds, series.sample_rate_hz)
        _, rows = _detection_trace_rows(
            series,
            prompts,
            result.best_weights,
            result.normalization,
            args.threshold,
            result.best_fit,
            window,
        )
        write_trace_file(args.trace, rows, manifest)
    fit = result.best_fit
    print(
        f"mode={result.mode} E={fit.e_value:.6g} alpha={fit.alpha:.6g} "
        f"beta={fit.beta:.6g} sigma={fit.sigma:.6g} converged={fit.converged}"
    )
    if result.no_signal:
        print("no signal found: every candidate scored zero", file=sys.stderr)
        return EXIT_NO_SIGNAL
    return EXIT_OK


def _report_out(doc: dict, path: str | None):
    text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if path is not None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        print(text, end="")


def cmd_detect(args) -> int:
    artifact = read_weights_artifact(args.weights)
    normalization = artifact.require_normalization()
    threshold = args.threshold
    if args.stream:
        return _detect_stream(args, artifact, normalization, threshold)
    if args.similarity is None:
        raise ValidationError(["detect needs --similarity FILE or --stream"])
    prompts, series, _ = read_similarity_file(args.similarity, strict=not args.lenient)
    artifact.check_prompt_hash(prompts.content_hash())
    window = window_samples(artifact.window_seconds, series.sample_rate_hz)
    report = evaluate_detection(
        series,
        prompts,
        artifact.weights,
        normalization,
        threshold=threshold,
        window_samples=window,
    )
    manifest = _manifest("detect", args, inputs=[args.weights, args.similarity])
    doc = {"format": DETECTION_FORMAT, **report.to_dict(), "manifest": manifest.to_dict()}
    _report_out(doc, args.report)
    if report.detected:
        print(f"detected at t={report.t_detected:.3f} s", file=sys.stderr)
        return EXIT_OK
    print("not detected", file=sys.stderr)
    return EXIT_NO_SIGNAL


def _detect_stream(args, artifact: WeightsArtifact, normalization, threshold) -> int:
    window = window_samples(artifact.window_seconds, args.rate)
    det = ChangeDetector(
        artifact.prompts,
        artifact.weights,
        normalization,
        threshold=threshold,
        window_samples=window,
    )
    trace = []
    event = None
    k = 0
    for line in sys.stdin:
        if not line.strip():
            continue
        row = [float(tok) for tok in line.split()]
        time = k / args.rate
        fired = det.step(row, time)
        trace.append((time, det.last_raw, det.last_averaged))
        if fired is not None:
            event = fired
            print(
                json.dumps(
                    {
                        "event": "change_detected",
                        "t_detected": fired.t_detected,
                        "sample_index": fired.sample_index,
                        "value": fired.value,
                    }
                ),
                flush=True,
            )
        k += 1
    manifest = _manifest("detect", args, inputs=[args.weights])
    doc = {
        "format": DETECTION_FORMAT,
        "threshold": threshold,
        "t_detected": None if event is None else event.t_detected,
        "t_data": None,
        "t_diff": None,
        "detected": event is not None,
        "trace": [list(r) for r in trace],
        "manifest": manifest.to_dict(),
    }
    _report_out(doc, args.report)
    return EXIT_OK if event is not None else EXIT_NO_SIGNAL


def cmd_evaluate(args) -> int:
    artifact = read_weights_artifact(args.weights)
    normalization = artifact.require_normalization()
    prompts, series, _ = read_similarity_file(args.similarity, strict=not args.lenient)
    artifact.check_prompt_hash(prompts.content_hash())
    t_data = None
    if args.annotation is not None:
        t_data = read_annotation_file(args.annotation)

    fit, signal = evaluate_frozen(
        series,
        prompts,
        artifact.weights,
        normalization,
        artifact.window_seconds,
        artifact.fit_config,
    )
    window = signal.window_samples
    report, rows = _detection_trace_rows(
        series, prompts, artifact.weights, normalization, args.threshold, fit, window
    )
    report = DetectionReport(
        threshold=report.threshold,
        t_detected=report.t_detected,
        t_data=t_data,
        trace=report.trace,
    )
    inputs = [args.weights, args.similarity] + (
        [args.annotation] if args.annotation else []
    )
    manifest = _manifest("evaluate", args, inputs=inputs)
    if args.trace is not None:
        write_trace_file(args.trace, rows, manifest)
    norm_values = signal.normalized
    doc = {
        "format": EVALUATION_FORMAT,
        "t_detected": report.t_detected,
        "t_data": t_data,
        "t_diff": report.t_diff,
        "detected": report.detected,
        "threshold": args.threshold,
        "reference_e": fit.e_value,
        "reference_e_note": "reference-only: normalization is frozen from the optimization run",
        "fit": fit.to_dict(),
        "beta_seconds": fit.beta / series.sample_rate_hz,
        "normalized_min": float(norm_values.min()),
        "normalized_max": float(norm_values.max()),
        "exceeds_unit_interval": bool(
            (norm_values < 0).any() or (norm_values > 1).any()
        ),
        "manifest": manifest.to_dict(),
    }
    _report_out(doc, args.report)
    if not report.detected:
        print("not detected", file=sys.stderr)
        return EXIT_NO_SIGNAL
    return EXIT_OK


def cmd_validate(args) -> int:
    prompts, series, _ = read_similarity_file(args.similarity, strict=not args.lenient)
    if args.prompts is not None:
        declared = read_prompt_file(args.prompts)
        if declared.content_hash() != prompts.content_hash():
            raise ValidationError(
                ["prompt file does not match the similarity file header prompts"]
            )
    print(
        f"OK: {series.t} frames x {series.n} prompts at {series.sample_rate_hz} Hz"
        + (f", {series.clamp_warnings} values clamped" if series.clamp_warnings else "")
    )
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="simstate",
        description="Continuous state recognition from prompt-similarity time series.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic similarity recording")
    p.add_argument("--pattern", choices=PATTERNS, required=True)
    p.add_argument("--frames", type=int, default=600)
    p.add_argument("--rate", type=float, default=10.0)
    p.add_argument("--informative", type=int, default=1)
    p.add_argument("--noise", type=int, default=0)
    p.add_argument("--noise-sd", type=float, default=0.0)
    p.add_argument("--alpha", type=float, default=None, help="transition slope (per sample)")
    p.add_argument("--beta", type=float, default=None, help="transition center (sample index)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="similarity file to write")
    p.add_argument("--annotation", default=None, help="annotation file (default <out>.annotation.json)")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("optimize", help="fit prompt weights on a recording")
    p.add_argument("similarity", help="similarity file (optimization dataset)")
    p.add_argument("--mode", choices=("opt", "one", "all"), default="opt")
    p.add_argument("--prompts", default=None, help="prompt file to cross-check against the header")
    p.add_argument("--out", required=True, help="weights artifact to write (JSON)")
    p.add_argument("--trace", default=None, help="plot-ready trace file to write")
    p.add_argument("--window-seconds", type=float, default=3.0)
    p.add_argument("--threshold", type=float, default=0.8)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--lenient", action="store_true", help="clamp out-of-range similarities")
    _add_ga_flags(p)
    _add_fit_flags(p)
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("detect", help="run threshold detection with frozen weights")
    p.add_argument("weights", help="weights artifact from optimize")
    p.add_argument("--similarity", default=None, help="recorded similarity file to replay")
    p.add_argument("--stream", action="store_true", help="read rows from stdin")
    p.add_argument("--rate", type=float, default=10.0, help="sample rate for stream rows")
    p.add_argument("--threshold", type=float, default=0.8)
    p.add_argument("--report", default=None, help="write the detection report JSON here")
    p.add_argument("--lenient", action="store_true")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("evaluate", help="evaluate frozen weights on a held-out recording")
    p.add_argument("weights", help="weights artifact from optimize")
    p.add_argument("similarity", help="held-out similarity file")
    p.add_argument("--annotation", default=None, help="annotation file with t_data")
    p.add_argument("--threshold", type=float, default=0.8)
    p.add_argument("--report", default=None, help="write the evaluation report JSON here")
    p.add_argument("--trace", default=None, help="plot-ready trace file to write")
    p.add_argument("--lenient", action="store_true")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("validate", help="validate a similarity file")
    p.add_argument("similarity")
    p.add_argument("--prompts", default=None)
    p.add_argument("--lenient", action="store_true")
    p.set_defaults(func=cmd_validate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        for violation in exc.violations:
            print(f"validation error: {violation}", file=sys.stderr)
        return EXIT_VALIDATION
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
