"""Two-parameter sigmoid fitting and the weight evaluation value.

The fit minimizes sum_t (y_t - f(t))^2 over alpha >= 0, beta >= 0 with
f(t) = 1/(1 + exp(-alpha*(t - beta))) and t in sample indices 1..T. The
evaluation value E = alpha*beta/max(sigma, sigma_floor) rewards sharp, late,
low-residual transitions.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .model import (
    DegenerateWeightsError,
    FlatSignalError,
    NormalizationParams,
    PromptSet,
    SigmoidFit,
    SimilaritySeries,
    ValidationError,
    WeightVector,
)
from .signal import (
    AggregateSignal,
    aggregate_pipeline,
    moving_average_samples,
    normalize,
    weighted_similarity,
    window_samples,
)

EXP_CLAMP = 500.0  # |exponent| cap before exponentiation
_LAMBDA_MAX = 1e12  # damping ceiling: no descent direction left, treat as stalled


@dataclass(frozen=True)
class FitConfig:
    """Solver knobs. Defaults follow the toolkit-wide conventions: start at
    (0.1, T/2), stop on a 1e-10 step norm, floor sigma at 1e-6."""

    alpha_init: float = 0.1
    beta_init_fraction: float = 0.5
    max_iterations: int = 200
    residual_tolerance: float = 1e-10
    sigma_floor: float = 1e-6

    def __post_init__(self):
        violations = []
        if self.alpha_init <= 0:
            violations.append("alpha_init must be positive")
        if not (0 < self.beta_init_fraction < 1):
            violations.append("beta_init_fraction must lie in (0, 1)")
        if self.max_iterations < 1:
            violations.append("max_iterations must be positive")
        if self.sigma_floor <= 0:
            violations.append("sigma_floor must be positive")
        if violations:
            raise ValidationError(violations)

    def to_dict(self) -> dict:
        return {
            "alpha_init": self.alpha_init,
            "beta_init_fraction": self.beta_init_fraction,
            "max_iterations": self.max_iterations,
            "residual_tolerance": self.residual_tolerance,
            "sigma_floor": self.sigma_floor,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FitConfig":
        return cls(
            alpha_init=float(d["alpha_init"]),
            beta_init_fraction=float(d["beta_init_fraction"]),
            max_iterations=int(d["max_iterations"]),
            residual_tolerance=float(d["residual_tolerance"]),
            sigma_floor=float(d["sigma_floor"]),
        )


def sigmoid(t, alpha: float, beta: float):
    """f(t) = 1/(1 + exp(-alpha*(t - beta))), overflow-safe."""
    z = np.clip(alpha * (np.asarray(t, dtype=float) - beta), -EXP_CLAMP, EXP_CLAMP)
    return 1.0 / (1.0 + np.exp(-z))


def sigmoid_partials(t, alpha: float, beta: float) -> tuple[np.ndarray, np.ndarray]:
    """(df/dalpha, df/dbeta) = ((t-beta)*f*(1-f), -alpha*f*(1-f))."""
    t = np.asarray(t, dtype=float)
    f = sigmoid(t, alpha, beta)
    s = f * (1.0 - f)
    return (t - beta) * s, -alpha * s


def _sse(y: np.ndarray, t: np.ndarray, alpha: float, beta: float) -> float:
    r = y - sigmoid(t, alpha, beta)
    return float(r @ r)


def _newton_polish(y: np.ndarray, t: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """Collapse an interior LM solution onto the exact stationary point.

    The least-squares basin is flat enough that the LM endpoint wanders by
    ~1e-7 depending on iteration path; a few full-Hessian Newton steps pin the
    minimizer so that equal-up-to-rounding inputs produce equal fits (this is
    what keeps the evaluation value scale-invariant at the 1e-9 level).
    Guarded: bails out on large steps, singular systems, or boundary contact.
    """
    for _ in range(3):
        f = sigmoid(t, theta[0], theta[1])
        s = f * (1.0 - f)
        fa = (t - theta[1]) * s
        fb = -theta[0] * s
        r = y - f
        g = np.array([-(fa @ r), -(fb @ r)])
        w = 1.0 - 2.0 * f
        faa = (t - theta[1]) ** 2 * s * w
        fab = -s - theta[0] * (t - theta[1]) * w * s
        fbb = theta[0] ** 2 * w * s
        h = np.array(
            [
                [fa @ fa - r @ faa, fa @ fb - r @ fab],
                [fa @ fb - r @ fab, fb @ fb - r @ fbb],
            ]
        )
        try:
            step = np.linalg.solve(h, -g)
        except np.linalg.LinAlgError:
            break
        if not np.isfinite(step).all() or float(np.linalg.norm(step)) > 1e-3:
            break
        candidate = theta + step
        if candidate.min() <= 0:
            break
        theta = candidate
    return theta


def fit_sigmoid(normalized: Sequence[float] | np.ndarray, config: FitConfig | None = None) -> SigmoidFit:
    """Box-constrained least-squares fit of the sigmoid to a normalized signal.

    Damped Gauss-Newton (Levenberg-Marquardt) with the analytic Jacobian;
    candidate steps are projected onto alpha >= 0, beta >= 0. Convergence
    means the iteration reached a stationary point (tiny accepted step, zero
    residual, or damping exhausted); running out of iterations while still
    descending reports converged=False and a zero evaluation value.
    """
    cfg = config or FitConfig()
    y = np.asarray(normalized, dtype=float)
    if y.ndim != 1 or y.size < 3:
        raise ValueError("need a 1-D signal with at least 3 samples")
    if not np.isfinite(y).all():
        raise ValueError("signal contains non-finite values")
    T = y.size
    t = np.arange(1, T + 1, dtype=float)

    theta = np.array([cfg.alpha_init, cfg.beta_init_fraction * T])
    sse = _sse(y, t, theta[0], theta[1])
    lam = 1e-3
    converged = False

    for _ in range(cfg.max_iterations):
        f = sigmoid(t, theta[0], theta[1])
        s = f * (1.0 - f)
        # Jacobian of the residuals r = y - f
        j_alpha = -(t - theta[1]) * s
        j_beta = theta[0] * s
        r = y - f
        g = np.array([j_alpha @ r, j_beta @ r])
        h = np.array(
            [
                [j_alpha @ j_alpha, j_alpha @ j_beta],
                [j_alpha @ j_beta, j_beta @ j_beta],
            ]
        )
        if sse == 0.0:
            converged = True
            break
        accepted = False
        while lam <= _LAMBDA_MAX:
            damped = h + lam * np.diag(np.maximum(np.diag(h), 1e-12))
            try:
                step = np.linalg.solve(damped, -g)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            candidate = np.maximum(theta + step, 0.0)
            cand_sse = _sse(y, t, candidate[0], candidate[1])
            if cand_sse < sse:
                moved = float(np.linalg.norm(candidate - theta))
                theta, sse = candidate, cand_sse
                lam = max(lam / 10.0, 1e-12)
                accepted = True
                if moved < cfg.residual_tolerance:
                    converged = True
                break
            lam *= 10.0
        if not accepted:
            # No damping level improves: stationary (possibly on the boundary).
            converged = True
            break
        if converged:
            break

    if converged and sse > 0.0 and theta.min() > 0.0:
        polished = _newton_polish(y, t, theta.copy())
        polished_sse = _sse(y, t, polished[0], polished[1])
        if polished_sse <= sse * (1.0 + 1e-9):
            theta, sse = polished, polished_sse

    alpha, beta = float(theta[0]), float(theta[1])
    sigma = float(np.sqrt(sse / T))
    e_value = alpha * beta / max(sigma, cfg.sigma_floor) if converged else 0.0
    return SigmoidFit(alpha=alpha, beta=beta, sigma=sigma, e_value=e_value, converged=converged)


@dataclass(frozen=True)
class WeightEvaluation:
    """Result of scoring one weight vector: the fit plus the artifacts needed
    to reuse it (normalization bounds, signal trace). ``reason`` explains a
    zero-fitness outcome."""

    fit: SigmoidFit
    normalization: NormalizationParams | None
    signal: AggregateSignal | None
    reason: str | None = None

    @property
    def e_value(self) -> float:
        return self.fit.e_value


_ZERO_FIT = SigmoidFit(alpha=0.0, beta=0.0, sigma=0.0, e_value=0.0, converged=False)


def evaluate_weights(
    series: SimilaritySeries,
    prompts: PromptSet,
    weights: WeightVector | Sequence[float] | np.ndarray,
    window_seconds: float,
    config: FitConfig | None = None,
) -> WeightEvaluation:
    """Run the full pipeline for one weight vector and score it.

    Degenerate weights, flat signals, or series too short to fit are scored
    zero with a reason instead of raising, so optimization runs never abort.
    """
    cfg = config or FitConfig()
    try:
        signal, params = aggregate_pipeline(series, prompts, weights, window_seconds)
    except DegenerateWeightsError:
        return WeightEvaluation(_ZERO_FIT, None, None, reason="degenerate weights")
    except FlatSignalError:
        return WeightEvaluation(_ZERO_FIT, None, None, reason="flat signal")
    if series.t < 3:
        return WeightEvaluation(_ZERO_FIT, params, signal, reason="series too short to fit")
    fit = fit_sigmoid(signal.normalized, cfg)
    reason = None if fit.converged else "fit did not converge"
    return WeightEvaluation(fit, params, signal, reason=reason)


def evaluate_frozen(
    series: SimilaritySeries,
    prompts: PromptSet,
    weights: WeightVector | Sequence[float] | np.ndarray,
    normalization: NormalizationParams,
    window_seconds: float,
    config: FitConfig | None = None,
) -> tuple[SigmoidFit, AggregateSignal]:
    """Score a held-out series with normalization bounds frozen elsewhere.

    The normalized signal may leave [0, 1]; the refit still runs and its
    evaluation value is reference-only.
    """
    cfg = config or FitConfig()
    raw = weighted_similarity(series, prompts, weights)
    window = window_samples(window_seconds, series.sample_rate_hz)
    averaged = moving_average_samples(raw, window)
    normalized = normalize(averaged, normalization)
    fit = fit_sigmoid(normalized, cfg)
    return fit, AggregateSignal(raw, averaged, normalized, window)
