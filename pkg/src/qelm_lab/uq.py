"""Uncertainty quantification: prediction distributions and scoring rules.

Distributions of predictions come from two resampling strategies:

    bootstrap_distribution   refits only the readout on resampled rows of the
                             cached training features; the quantum front end
                             stays fixed.
    ensemble_distribution    trains independently re-seeded reservoirs end to
                             end and pools their predictions.

On top of a distribution: empirical prediction intervals, CRPS, the check
(pinball) score, the interval score, reliability diagrams, the Brier score,
and log loss. Quantiles interpolate linearly between order statistics at
position (n - 1) * q.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    EmptyInput,
    InsufficientMembers,
    InsufficientSamples,
    InvalidInterval,
    LengthMismatch,
    ValidationError,
)
from .qelm import (
    FeatureCache,
    QelmFront,
    QelmModel,
    feature_matrix,
    train,
    with_reservoir_seed,
)
from .readout import fit_readout
from .rng import Rng, derive_seed


@dataclass
class PredictionDistribution:
    """Per-input prediction samples.

    regression: samples has shape (n_inputs, n_samples).
    classification: shape (n_inputs, n_samples, 2) of probability vectors.
    """

    task: str
    samples: np.ndarray
    source: tuple[str, int]  # ("bootstrap", B) or ("ensemble", M)

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=float)
        expected = 2 if self.task == "regression" else 3
        if self.samples.ndim != expected:
            raise ValidationError(
                f"{self.task} samples must be {expected}-dimensional, got {self.samples.ndim}"
            )
        if self.task == "classification":
            sums = self.samples.sum(axis=2)
            if np.abs(sums - 1.0).max() > 1e-9:
                raise ValidationError("classification samples must be probability vectors")

    @property
    def n_inputs(self) -> int:
        return self.samples.shape[0]

    @property
    def n_samples(self) -> int:
        return self.samples.shape[1]

    def mean_predictions(self) -> np.ndarray:
        """Per-input mean: floats for regression, probability vectors for
        classification."""
        return self.samples.mean(axis=1)


def bootstrap_distribution(
    model: QelmModel,
    train_inputs: np.ndarray,
    train_targets: np.ndarray,
    test_inputs: np.ndarray,
    train_backend,
    test_backend,
    b: int = 100,
    seed: int = 0,
    train_seed: int = 0,
    test_seed: int = 0,
    cache: FeatureCache | None = None,
) -> PredictionDistribution:
    """Resample training rows with replacement and refit only the readout.

    Quantum features are extracted once per row and reused across all B
    refits, so the reservoir and encoder are untouched by construction.
    """
    if b < 2:
        raise InsufficientMembers(f"bootstrap needs B >= 2, got {b}")
    cache = cache if cache is not None else FeatureCache()
    train_features = feature_matrix(model.front, train_inputs, train_backend, train_seed, cache)
    test_features = feature_matrix(model.front, test_inputs, test_backend, test_seed, cache)
    targets = np.asarray(train_targets, dtype=float)
    n = len(targets)
    per_input = []
    for k in range(b):
        idx = Rng(derive_seed(seed, "bootstrap", k)).integers(n, 0, n)
        readout = fit_readout(train_features[idx], targets[idx], model.readout_kind, model.readout_hyper)
        if model.task == "regression":
            per_input.append(readout.predict(test_features))
        else:
            per_input.append(readout.predict_proba(test_features))
    stacked = np.stack(per_input, axis=1)
    return PredictionDistribution(model.task, stacked, ("bootstrap", b))


def ensemble_distribution(
    front: QelmFront,
    readout_kind: str,
    task: str,
    train_inputs: np.ndarray,
    train_targets: np.ndarray,
    test_inputs: np.ndarray,
    train_backend,
    test_backend,
    m: int = 30,
    seed: int = 0,
    train_seed: int = 0,
    test_seed: int = 0,
    cache: FeatureCache | None = None,
    readout_hyper: dict | None = None,
    member_seeds: list[int] | None = None,
) -> PredictionDistribution:
    """Train M fully independent models whose reservoir seeds derive from
    (seed, member index); every member shares the same backends."""
    if m < 2:
        raise InsufficientMembers(f"ensemble needs M >= 2, got {m}")
    if member_seeds is not None and len(member_seeds) != m:
        raise ValidationError("member_seeds must supply one seed per member")
    cache = cache if cache is not None else FeatureCache()
    per_input = []
    for i in range(m):
        res_seed = member_seeds[i] if member_seeds is not None else derive_seed(seed, "member", i)
        member_front = with_reservoir_seed(front, res_seed)
        member = train(
            train_inputs,
            train_targets,
            task,
            member_front,
            readout_kind,
            train_backend,
            seed=train_seed,
            cache=cache,
            readout_hyper=readout_hyper,
        )
        test_features = feature_matrix(member_front, test_inputs, test_backend, test_seed, cache)
        if task == "regression":
            per_input.append(member.readout.predict(test_features))
        else:
            per_input.append(member.readout.predict_proba(test_features))
    stacked = np.stack(per_input, axis=1)
    return PredictionDistribution(task, stacked, ("ensemble", m))


# ---------------------------------------------------------------------------
# scoring rules

def prediction_interval(samples, alpha: float) -> tuple[float, float]:
    """Empirical (alpha/2, 1 - alpha/2) quantiles with linear interpolation
    between order statistics."""
    samples = np.asarray(samples, dtype=float).reshape(-1)
    if len(samples) < 2:
        raise InsufficientSamples("need at least 2 samples for an interval")
    if not 0.0 < alpha < 1.0:
        raise ValidationError(f"alpha must lie in (0, 1), got {alpha}")
    lo, hi = np.quantile(samples, [alpha / 2.0, 1.0 - alpha / 2.0], method="linear")
    return float(lo), float(hi)


def crps(samples, y: float) -> float:
    """Continuous ranked probability score of the empirical distribution.

    Uses the pair identity mean|x_i - y| - mean|x_i - x_j| / 2, which equals
    the integral of (F(z) - 1{y <= z})^2 for the empirical CDF F.
    """
    samples = np.sort(np.asarray(samples, dtype=float).reshape(-1))
    n = len(samples)
    if n == 0:
        raise EmptyInput("crps needs at least one sample")
    term1 = float(np.abs(samples - y).mean())
    # sum over ordered pairs |x_i - x_j| via sorted prefix weights
    weights = 2.0 * np.arange(n) - (n - 1)
    pair_sum = 2.0 * float(np.sum(weights * samples))
    return term1 - pair_sum / (2.0 * n * n)


def check_score(y: float, q: float, tau: float) -> float:
    """Pinball loss of the quantile prediction q at level tau."""
    if not 0.0 < tau < 1.0:
        raise ValidationError(f"tau must lie in (0, 1), got {tau}")
    if y >= q:
        return tau * (y - q)
    return (1.0 - tau) * (q - y)


def interval_score(y: float, lo: float, hi: float, alpha: float) -> float:
    """Interval width plus (2/alpha)-scaled penalties for missed coverage."""
    if lo > hi:
        raise InvalidInterval(f"interval lower bound {lo} exceeds upper bound {hi}")
    if not 0.0 < alpha < 1.0:
        raise ValidationError(f"alpha must lie in (0, 1), got {alpha}")
    score = hi - lo
    if y < lo:
        score += (2.0 / alpha) * (lo - y)
    elif y > hi:
        score += (2.0 / alpha) * (y - hi)
    return score


@dataclass
class ReliabilityDiagram:
    """Per-bin calibration data over equal-width bins of [0, 1].

    Empty bins carry count 0 and NaN statistics. The final bin is
    right-closed so probability 1.0 lands in it.
    """

    edges: np.ndarray  # length n_bins + 1
    mean_confidence: np.ndarray  # NaN where empty
    observed_frequency: np.ndarray  # NaN where empty
    counts: np.ndarray

    @property
    def n_bins(self) -> int:
        return len(self.counts)

    def to_dict(self) -> dict:
        def clean(arr):
            return [None if math.isnan(v) else float(v) for v in arr]

        return {
            "edges": [float(e) for e in self.edges],
            "mean_confidence": clean(self.mean_confidence),
            "observed_frequency": clean(self.observed_frequency),
            "counts": [int(c) for c in self.counts],
        }


def reliability_diagram(probs, labels, n_bins: int = 10) -> ReliabilityDiagram:
    """Bin positive-class probabilities and compare mean confidence with the
    observed positive fraction per bin."""
    probs = np.asarray(probs, dtype=float).reshape(-1)
    labels = np.asarray(labels, dtype=float).reshape(-1)
    if len(probs) != len(labels):
        raise LengthMismatch(f"{len(probs)} probabilities vs {len(labels)} labels")
    if len(probs) == 0:
        raise EmptyInput("reliability diagram needs at least one prediction")
    if np.any(probs < 0.0) or np.any(probs > 1.0):
        raise ValidationError("probabilities must lie in [0, 1]")
    idx = np.minimum((probs * n_bins).astype(int), n_bins - 1)
    counts = np.bincount(idx, minlength=n_bins)
    conf = np.full(n_bins, np.nan)
    freq = np.full(n_bins, np.nan)
    for b in range(n_bins):
        mask = idx == b
        if counts[b] > 0:
            conf[b] = probs[mask].mean()
            freq[b] = labels[mask].mean()
    return ReliabilityDiagram(
        edges=np.linspace(0.0, 1.0, n_bins + 1),
        mean_confidence=conf,
        observed_frequency=freq,
        counts=counts,
    )


def brier(probs, labels) -> float:
    """Mean squared error between positive-class probabilities and labels."""
    probs = np.asarray(probs, dtype=float).reshape(-1)
    labels = np.asarray(labels, dtype=float).reshape(-1)
    if len(probs) != len(labels):
        raise LengthMismatch(f"{len(probs)} probabilities vs {len(labels)} labels")
    if len(probs) == 0:
        raise EmptyInput("brier needs at least one prediction")
    return float(np.mean((probs - labels) ** 2))


def log_loss(probs, labels, epsilon: float = 1e-15) -> float:
    """Mean negative log likelihood with probabilities clamped to
    [epsilon, 1 - epsilon] so saturated outputs stay finite."""
    probs = np.asarray(probs, dtype=float).reshape(-1)
    labels = np.asarray(labels, dtype=float).reshape(-1)
    if len(probs) != len(labels):
        raise LengthMismatch(f"{len(probs)} probabilities vs {len(labels)} labels")
    if len(probs) == 0:
        raise EmptyInput("log loss needs at least one prediction")
    p = np.clip(probs, epsilon, 1.0 - epsilon)
    return float(-np.mean(labels * np.log(p) + (1.0 - labels) * np.log(1.0 - p)))


# ---------------------------------------------------------------------------
# distribution summaries

DEFAULT_TAU_GRID = tuple(round(0.05 * i, 2) for i in range(1, 20))


def regression_uq_metrics(
    dist: PredictionDistribution,
    y_true,
    alpha: float = 0.05,
    tau_grid: tuple[float, ...] = DEFAULT_TAU_GRID,
) -> dict:
    """Interval table and mean scoring rules for a regression distribution.

    The check score averages the pinball loss of the empirical tau-quantiles
    over ``tau_grid``.
    """
    y_true = np.asarray(y_true, dtype=float).reshape(-1)
    if dist.task != "regression":
        raise ValidationError("regression metrics need a regression distribution")
    if len(y_true) != dist.n_inputs:
        raise LengthMismatch(f"{dist.n_inputs} inputs vs {len(y_true)} targets")
    rows = []
    crps_vals, cs_vals, is_vals, widths, covered = [], [], [], [], []
    for i, y in enumerate(y_true):
        samples = dist.samples[i]
        lo, hi = prediction_interval(samples, alpha)
        width = hi - lo
        inside = lo <= y <= hi
        crps_i = crps(samples, y)
        cs_i = float(
            np.mean(
                [check_score(y, float(np.quantile(samples, t, method="linear")), t) for t in tau_grid]
            )
        )
        is_i = interval_score(y, lo, hi, alpha)
        rows.append(
            {
                "index": i,
                "y_true": float(y),
                "mean": float(samples.mean()),
                "lower": lo,
                "upper": hi,
                "width": width,
                "covered": bool(inside),
            }
        )
        crps_vals.append(crps_i)
        cs_vals.append(cs_i)
        is_vals.append(is_i)
        widths.append(width)
        covered.append(inside)
    return {
        "alpha": alpha,
        "mean_interval_width": float(np.mean(widths)),
        "coverage": float(np.mean(covered)),
        "crps": float(np.mean(crps_vals)),
        "check_score": float(np.mean(cs_vals)),
        "interval_score": float(np.mean(is_vals)),
        "intervals": rows,
    }


def classification_uq_metrics(
    dist: PredictionDistribution, y_true, n_bins: int = 10
) -> dict:
    """Calibration metrics of the per-input mean probability vector."""
    y_true = np.asarray(y_true, dtype=float).reshape(-1)
    if dist.task != "classification":
        raise ValidationError("classification metrics need a classification distribution")
    if len(y_true) != dist.n_inputs:
        raise LengthMismatch(f"{dist.n_inputs} inputs vs {len(y_true)} targets")
    p_pos = dist.mean_predictions()[:, 1]
    diagram = reliability_diagram(p_pos, y_true, n_bins)
    return {
        "brier": brier(p_pos, y_true),
        "log_loss": log_loss(p_pos, y_true),
        "reliability": diagram.to_dict(),
        "positive_probabilities": [float(p) for p in p_pos],
    }


# ---------------------------------------------------------------------------
# CSV emission

def intervals_to_csv(rows: list[dict]) -> str:
    lines = ["index,y_true,mean,lower,upper,width,covered"]
    for r in rows:
        lines.append(
            f"{r['index']},{r['y_true']!r},{r['mean']!r},{r['lower']!r},"
            f"{r['upper']!r},{r['width']!r},{int(r['covered'])}"
        )
    return "\n".join(lines) + "\n"


def reliability_to_csv(diagram: ReliabilityDiagram) -> str:
    lines = ["bin_low,bin_high,mean_confidence,observed_frequency,count"]
    for b in range(diagram.n_bins):
        conf = diagram.mean_confidence[b]
        freq = diagram.observed_frequency[b]
        conf_s = "" if math.isnan(conf) else repr(float(conf))
        freq_s = "" if math.isnan(freq) else repr(float(freq))
        lines.append(
            f"{diagram.edges[b]!r},{diagram.edges[b + 1]!r},{conf_s},{freq_s},"
            f"{int(diagram.counts[b])}"
        )
    return "\n".join(lines) + "\n"
