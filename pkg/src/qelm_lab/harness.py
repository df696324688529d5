"""Scenario runner: synthetic datasets, the experiment matrix, percentage
change from the ideal baseline, rank statistics, and report emission.

A scenario id fixes which backend runs the training and testing phase:

    C1_1  ideal train, noisy test        C1_2  noisy train, noisy test
    C2_1  ideal train, mitigated test    C2_2  mitigated train and test
    C3_1..C3_4  the same four pairs with mandatory uncertainty artifacts

Every repeat re-seeds the reservoir, trains and evaluates on the configured
backends, and records the metric next to a matched ideal run (same seeds,
ideal backends), so percentage changes are paired per repeat. Reports are
replayable: the same config and dataset reproduce results.json byte for
byte.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path

import numpy as np

from . import __version__ as _package_version
from .errors import EmptyInput, TooFewSamples, ValidationError
from .mitigation import (
    MitigatedBackend,
    QlearMitigator,
    ZneConfig,
    ZneMitigator,
    calibration_circuits,
    qlear_train,
)
from .noise import NoiseProfile
from .qelm import (
    EncoderSpec,
    FeatureCache,
    FeatureMapSpec,
    IdealBackend,
    NoisyBackend,
    QelmFront,
    ReservoirSpec,
    exact_feature_front,
    predict_batch,
    train,
)
from .rng import Rng, derive_seed
from .svg import render_box_plot, render_interval_chart, render_reliability_chart
from .uq import (
    ReliabilityDiagram,
    bootstrap_distribution,
    classification_uq_metrics,
    ensemble_distribution,
    intervals_to_csv,
    regression_uq_metrics,
    reliability_to_csv,
)

DATASET_KINDS = ("regression3", "classification4", "classification8")
SCENARIO_IDS = ("C1_1", "C1_2", "C2_1", "C2_2", "C3_1", "C3_2", "C3_3", "C3_4")
SCENARIO_BACKENDS = {
    "C1_1": ("ideal", "noisy"),
    "C1_2": ("noisy", "noisy"),
    "C2_1": ("ideal", "mitigated"),
    "C2_2": ("mitigated", "mitigated"),
    "C3_1": ("ideal", "noisy"),
    "C3_2": ("noisy", "noisy"),
    "C3_3": ("ideal", "mitigated"),
    "C3_4": ("mitigated", "mitigated"),
}


# ---------------------------------------------------------------------------
# datasets

@dataclass
class Dataset:
    features: np.ndarray
    targets: np.ndarray
    task: str  # "regression" | "classification"
    train_idx: np.ndarray
    test_idx: np.ndarray
    kind: str = "custom"
    seed: int = 0
    noise_level: float = 0.0

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=float)
        self.targets = np.asarray(self.targets, dtype=float)
        if self.task not in ("regression", "classification"):
            raise ValidationError(f"unknown task {self.task!r}")
        if len(self.features) != len(self.targets):
            raise ValidationError("feature rows must match target count")
        if self.task == "classification" and not np.all(np.isin(self.targets, (0.0, 1.0))):
            raise ValidationError("classification labels must be 0 or 1")

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    @property
    def train_features(self) -> np.ndarray:
        return self.features[self.train_idx]

    @property
    def train_targets(self) -> np.ndarray:
        return self.targets[self.train_idx]

    @property
    def test_features(self) -> np.ndarray:
        return self.features[self.test_idx]

    @property
    def test_targets(self) -> np.ndarray:
        return self.targets[self.test_idx]


def _split_indices(n: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    # fixed 70/30 split from a seeded permutation
    perm = Rng(derive_seed(seed, "split")).permutation(n)
    n_train = int(round(0.7 * n))
    return np.sort(perm[:n_train]), np.sort(perm[n_train:])


def generate_dataset(kind: str, n_samples: int, seed: int, noise_level: float = 0.1) -> Dataset:
    """Deterministic synthetic tasks with 3, 4, or 8 features.

    regression3       linear plus a smooth nonlinearity with additive noise
    classification4   two uniform clusters, separable at noise_level 0
    classification8   two Gaussian clusters whose overlap grows with
                      noise_level
    """
    if kind not in DATASET_KINDS:
        raise ValidationError(f"unknown dataset kind {kind!r}")
    if n_samples < 20:
        raise ValidationError(f"need at least 20 samples, got {n_samples}")
    if noise_level < 0:
        raise ValidationError("noise_level must be non-negative")
    rng = Rng(derive_seed(seed, kind))
    if kind == "regression3":
        x = rng.uniforms(3 * n_samples).reshape(n_samples, 3)
        eps = rng.normals(n_samples)
        y = 2.0 + 1.5 * x[:, 0] - 2.0 * x[:, 1] + 1.2 * np.cos(np.pi * x[:, 2])
        y = y + noise_level * eps
        task = "regression"
    elif kind == "classification4":
        centers = {
            0: np.array([0.3, 0.35, 0.65, 0.3]),
            1: np.array([0.7, 0.6, 0.35, 0.7]),
        }
        half_width = 0.15 + noise_level
        y = np.arange(n_samples) % 2
        jitter = (rng.uniforms(4 * n_samples).reshape(n_samples, 4) * 2.0 - 1.0) * half_width
        x = np.clip(np.vstack([centers[int(c)] for c in y]) + jitter, 0.0, 1.0)
        task = "classification"
    else:
        signs = np.array([1.0, -1.0] * 4)
        sigma = 0.04 + 0.5 * noise_level
        y = np.arange(n_samples) % 2
        offsets = np.where(y[:, None] == 0, -0.2 * signs, 0.2 * signs)
        jitter = sigma * rng.normals(8 * n_samples).reshape(n_samples, 8)
        x = np.clip(0.5 + offsets + jitter, 0.0, 1.0)
        task = "classification"
    train_idx, test_idx = _split_indices(n_samples, seed)
    return Dataset(
        features=x,
        targets=np.asarray(y, dtype=float),
        task=task,
        train_idx=train_idx,
        test_idx=test_idx,
        kind=kind,
        seed=seed,
        noise_level=noise_level,
    )


def load_csv_dataset(path: str | Path, task: str, split_seed: int = 0) -> Dataset:
    """CSV with a header row; the final column is the target."""
    with open(path, newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header is None or len(header) < 2:
            raise ValidationError(f"{path}: need a header and at least two columns")
        rows = [[float(v) for v in row] for row in reader if row]
    if len(rows) < 2:
        raise ValidationError(f"{path}: need at least two data rows")
    data = np.asarray(rows, dtype=float)
    train_idx, test_idx = _split_indices(len(data), split_seed)
    return Dataset(
        features=data[:, :-1],
        targets=data[:, -1],
        task=task,
        train_idx=train_idx,
        test_idx=test_idx,
        kind="csv",
        seed=split_seed,
    )


# ---------------------------------------------------------------------------
# metrics and statistics

def mse(y_true, y_pred) -> float:
    y_true = np.asarray(y_true, dtype=float)
    y_pred = np.asarray(y_pred, dtype=float)
    return float(np.mean((y_true - y_pred) ** 2))


def accuracy(y_true, labels) -> float:
    y_true = np.asarray(y_true, dtype=float)
    labels = np.asarray(labels, dtype=float)
    return float(np.mean(y_true == labels))


def percent_change(ideal: float, observed: float, metric: str) -> float:
    """Percentage change from the ideal value.

    ``error`` metrics report the percentage increase, ``accuracy`` metrics
    the percentage decrease. An out-of-domain baseline (ideal <= 0, or an
    accuracy outside (0, 1]) yields NaN so callers can flag the run instead
    of crashing.
    """
    if metric == "error":
        if ideal <= 0.0:
            return math.nan
        return 100.0 * (observed - ideal) / ideal
    if metric == "accuracy":
        if not 0.0 < ideal <= 1.0:
            return math.nan
        return 100.0 * (ideal - observed) / ideal
    raise ValidationError(f"unknown metric direction {metric!r}")


def _u_statistic(a: np.ndarray, b: np.ndarray) -> float:
    wins = (a[:, None] > b[None, :]).sum()
    ties = (a[:, None] == b[None, :]).sum()
    return float(wins) + 0.5 * float(ties)


def mann_whitney_u(a, b, method: str = "auto") -> tuple[float, float]:
    """Two-sided Mann-Whitney test; returns (U of the first sample, p value).

    ``auto`` enumerates the exact null distribution when the pooled size is
    at most 16 and otherwise uses the normal approximation with tie
    correction and continuity correction.
    """
    a = np.asarray(a, dtype=float).reshape(-1)
    b = np.asarray(b, dtype=float).reshape(-1)
    if len(a) < 3 or len(b) < 3:
        raise TooFewSamples("each group needs at least 3 values")
    if method not in ("auto", "exact", "approx"):
        raise ValidationError(f"unknown method {method!r}")
    u_obs = _u_statistic(a, b)
    m, n = len(a), len(b)
    if method == "exact" or (method == "auto" and m + n <= 16):
        pooled = np.concatenate([a, b])
        total = 0
        count_le = 0
        count_ge = 0
        for subset in combinations(range(m + n), m):
            mask = np.zeros(m + n, dtype=bool)
            mask[list(subset)] = True
            u = _u_statistic(pooled[mask], pooled[~mask])
            total += 1
            if u <= u_obs + 1e-12:
                count_le += 1
            if u >= u_obs - 1e-12:
                count_ge += 1
        p = min(1.0, 2.0 * min(count_le, count_ge) / total)
        return u_obs, p
    big_n = m + n
    mu = m * n / 2.0
    _, tie_counts = np.unique(np.concatenate([a, b]), return_counts=True)
    tie_term = float(np.sum(tie_counts**3 - tie_counts)) / (big_n * (big_n - 1))
    sigma_sq = m * n / 12.0 * ((big_n + 1) - tie_term)
    if sigma_sq <= 0.0:
        return u_obs, 1.0
    z = max(abs(u_obs - mu) - 0.5, 0.0) / math.sqrt(sigma_sq)
    p = min(1.0, math.erfc(z / math.sqrt(2.0)))
    return u_obs, p


def a12(a, b) -> float:
    """Probability that a value from ``a`` exceeds one from ``b``, counting
    ties as one half."""
    a = np.asarray(a, dtype=float).reshape(-1)
    b = np.asarray(b, dtype=float).reshape(-1)
    if len(a) == 0 or len(b) == 0:
        raise EmptyInput("effect size needs non-empty samples")
    return _u_statistic(a, b) / (len(a) * len(b))


# ---------------------------------------------------------------------------
# scenario configuration

@dataclass(frozen=True)
class UqSpec:
    method: str  # "bootstrap" | "ensemble"
    samples: int = 0  # 0 picks the method default (100 / 30)

    def __post_init__(self):
        if self.method not in ("bootstrap", "ensemble"):
            raise ValidationError(f"unknown uq method {self.method!r}")
        if self.samples < 0:
            raise ValidationError("uq samples must be non-negative")

    @property
    def resolved_samples(self) -> int:
        if self.samples:
            return self.samples
        return 100 if self.method == "bootstrap" else 30


@dataclass(frozen=True)
class ModelSpec:
    """Everything needed to assemble a QELM for a dataset."""

    reservoir_style: str = "ising"
    layers: int = 2
    trotter_steps: int = 3
    evolution_time: float = 1.0
    j_range: tuple[float, float] = (-1.0, 1.0)
    h_range: tuple[float, float] = (-1.0, 1.0)
    feature_map: str = "probabilities"
    shots: int = 0
    readout: str = "linear"
    entangle: bool = True
    readout_hyper: tuple = ()

    def hyper_dict(self) -> dict:
        return dict(self.readout_hyper)

    def front(self, feature_range: tuple, reservoir_seed: int) -> QelmFront:
        n_qubits = len(feature_range)
        encoder = EncoderSpec(feature_range=feature_range, entangle=self.entangle)
        reservoir = ReservoirSpec(
            style=self.reservoir_style,
            n_qubits=n_qubits,
            seed=reservoir_seed,
            layers=self.layers,
            j_range=self.j_range,
            h_range=self.h_range,
            time=self.evolution_time,
            trotter_steps=self.trotter_steps,
        )
        return QelmFront(encoder, reservoir, FeatureMapSpec(self.feature_map, self.shots))

    def to_dict(self) -> dict:
        return {
            "reservoir_style": self.reservoir_style,
            "layers": self.layers,
            "trotter_steps": self.trotter_steps,
            "evolution_time": self.evolution_time,
            "j_range": list(self.j_range),
            "h_range": list(self.h_range),
            "feature_map": self.feature_map,
            "shots": self.shots,
            "readout": self.readout,
            "entangle": self.entangle,
            "readout_hyper": dict(self.readout_hyper),
        }


def default_model_spec(dataset: Dataset, shots: int = 0) -> ModelSpec:
    """Best-performing configuration per task shape, found in preliminary
    sweeps: linear readout for regression, tree for small classification
    tasks, logistic for wider ones. The gentler evolution time keeps the
    reservoir expressive without scrambling smooth targets, which matters
    most for the regression task."""
    if dataset.task == "regression":
        return ModelSpec(readout="linear", evolution_time=0.25, shots=shots)
    if dataset.n_features <= 4:
        return ModelSpec(readout="tree", evolution_time=0.5, shots=shots)
    return ModelSpec(readout="logistic", evolution_time=0.5, shots=shots)


def encoder_ranges(train_features: np.ndarray) -> tuple:
    """Per-feature (min, max) from the training split; constant columns get
    a widened range so scaling stays defined."""
    ranges = []
    for j in range(train_features.shape[1]):
        lo = float(train_features[:, j].min())
        hi = float(train_features[:, j].max())
        if hi - lo < 1e-12:
            lo, hi = lo - 0.5, hi + 0.5
        ranges.append((lo, hi))
    return tuple(ranges)


@dataclass(frozen=True)
class ScenarioConfig:
    scenario_id: str
    profile: NoiseProfile
    repeats: int = 10
    seed: int = 0
    mitigator: str | None = None  # "zne" | "qlear"
    zne: ZneConfig | None = None
    qlear_corpus: int = 24
    qlear_trees: int = 20
    qlear_max_depth: int = 6
    uq: UqSpec | None = None
    jobs: int | None = None

    def __post_init__(self):
        if self.scenario_id not in SCENARIO_IDS:
            raise ValidationError(f"unknown scenario id {self.scenario_id!r}")
        if self.repeats < 1:
            raise ValidationError("repeats must be at least 1")
        mitigated = "mitigated" in SCENARIO_BACKENDS[self.scenario_id]
        if mitigated and self.mitigator is None:
            raise ValidationError(
                f"scenario {self.scenario_id} uses a mitigated backend; set mitigator"
            )
        if not mitigated and self.mitigator is not None:
            raise ValidationError(
                f"scenario {self.scenario_id} has no mitigated backend; drop mitigator"
            )
        if self.mitigator is not None and self.mitigator not in ("zne", "qlear"):
            raise ValidationError(f"unknown mitigator {self.mitigator!r}")
        if self.scenario_id.startswith("C3") and self.uq is None:
            raise ValidationError(f"scenario {self.scenario_id} requires a uq setting")

    @property
    def backend_pair(self) -> tuple[str, str]:
        return SCENARIO_BACKENDS[self.scenario_id]


@dataclass
class ScenarioReport:
    scenario_id: str
    profile_name: str
    metric_name: str
    seed: int
    repeats: int
    dataset_info: dict
    model_info: dict
    runs: list
    ideal_baseline: float | None
    statistics: dict | None
    uq: dict | None
    mitigation: dict | None
    flags: list = field(default_factory=list)
    package_version: str = _package_version

    def to_dict(self) -> dict:
        return {
            "schema": "scenario-report/1",
            "scenario": self.scenario_id,
            "profile": self.profile_name,
            "metric": self.metric_name,
            "seed": self.seed,
            "repeats": self.repeats,
            "dataset": self.dataset_info,
            "model": self.model_info,
            "runs": self.runs,
            "ideal_baseline": self.ideal_baseline,
            "statistics": self.statistics,
            "uq": self.uq,
            "mitigation": self.mitigation,
            "flags": self.flags,
            "package_version": self.package_version,
        }


def _jsonable(value):
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, (np.floating, float)):
        v = float(value)
        return None if (math.isnan(v) or math.isinf(v)) else v
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    return value


def report_json_bytes(report: "ScenarioReport | dict") -> bytes:
    payload = report.to_dict() if isinstance(report, ScenarioReport) else report
    text = json.dumps(_jsonable(payload), sort_keys=True, indent=2)
    return (text + "\n").encode("utf-8")


# ---------------------------------------------------------------------------
# scenario execution

def evaluate_model(model, inputs, targets, backend, seed, cache) -> float:
    if model.task == "regression":
        preds = predict_batch(model, inputs, backend, seed, cache)
        return mse(targets, preds)
    labels, _ = predict_batch(model, inputs, backend, seed, cache)
    return accuracy(targets, labels)


def _build_mitigator(config: ScenarioConfig, model_spec: ModelSpec, n_qubits: int):
    if config.mitigator == "zne":
        mitigator = ZneMitigator(config.zne or ZneConfig())
        info = {"kind": "zne", "config": mitigator.config.to_dict()}
        return mitigator, info
    corpus = calibration_circuits(
        n_qubits, config.qlear_corpus, derive_seed(config.seed, "qlear-corpus")
    )
    model = qlear_train(
        corpus,
        config.profile,
        seed=derive_seed(config.seed, "qlear-train"),
        n_trees=config.qlear_trees,
        max_depth=config.qlear_max_depth,
        feature_map=FeatureMapSpec(model_spec.feature_map, 0),
        min_corpus=min(20, config.qlear_corpus),
    )
    info = {
        "kind": "qlear",
        "corpus_size": model.corpus_size,
        "held_out_mae": model.held_out_mae,
    }
    return QlearMitigator(model), info


def _resolve_backends(config: ScenarioConfig, mitigator):
    def build(kind: str):
        if kind == "ideal":
            return IdealBackend()
        if kind == "noisy":
            return NoisyBackend(config.profile)
        return MitigatedBackend(config.profile, mitigator)

    train_kind, test_kind = config.backend_pair
    return build(train_kind), build(test_kind)


def _uq_artifacts(config, dataset, model_spec, feature_range, train_backend, test_backend, cache):
    uq_seed = derive_seed(config.seed, "uq")
    front = model_spec.front(feature_range, derive_seed(uq_seed, "reservoir"))
    train_seed = derive_seed(uq_seed, "train-features")
    test_seed = derive_seed(uq_seed, "test-features")
    spec = config.uq
    n = spec.resolved_samples

    def run(backends, run_front) -> dict:
        tr_backend, te_backend = backends
        if spec.method == "bootstrap":
            model = train(
                dataset.train_features,
                dataset.train_targets,
                dataset.task,
                run_front,
                model_spec.readout,
                tr_backend,
                seed=train_seed,
                cache=cache,
                readout_hyper=model_spec.hyper_dict(),
            )
            dist = bootstrap_distribution(
                model,
                dataset.train_features,
                dataset.train_targets,
                dataset.test_features,
                tr_backend,
                te_backend,
                b=n,
                seed=uq_seed,
                train_seed=train_seed,
                test_seed=test_seed,
                cache=cache,
            )
        else:
            dist = ensemble_distribution(
                run_front,
                model_spec.readout,
                dataset.task,
                dataset.train_features,
                dataset.train_targets,
                dataset.test_features,
                tr_backend,
                te_backend,
                m=n,
                seed=uq_seed,
                train_seed=train_seed,
                test_seed=test_seed,
                cache=cache,
                readout_hyper=model_spec.hyper_dict(),
            )
        if dataset.task == "regression":
            return regression_uq_metrics(dist, dataset.test_targets)
        return classification_uq_metrics(dist, dataset.test_targets)

    ideal = IdealBackend()
    return {
        "method": spec.method,
        "samples": n,
        "configured": run((train_backend, test_backend), front),
        "ideal": run((ideal, ideal), exact_feature_front(front)),
    }


def run_uq(
    config: ScenarioConfig, dataset: Dataset, model_spec: ModelSpec | None = None
) -> dict:
    """Compute only the uncertainty artifacts for a configuration (the
    configured backends next to an all-ideal reference)."""
    if config.uq is None:
        raise ValidationError("run_uq needs a uq setting on the config")
    model_spec = model_spec or default_model_spec(dataset)
    feature_range = encoder_ranges(dataset.train_features)
    mitigator = None
    if config.mitigator is not None:
        mitigator, _ = _build_mitigator(config, model_spec, dataset.n_features)
    train_backend, test_backend = _resolve_backends(config, mitigator)
    return _uq_artifacts(
        config, dataset, model_spec, feature_range, train_backend, test_backend, FeatureCache()
    )


def run_scenario(
    config: ScenarioConfig, dataset: Dataset, model_spec: ModelSpec | None = None
) -> ScenarioReport:
    """Execute one scenario end to end and assemble its report."""
    model_spec = model_spec or default_model_spec(dataset)
    feature_range = encoder_ranges(dataset.train_features)
    metric_name = "mse" if dataset.task == "regression" else "accuracy"
    direction = "error" if dataset.task == "regression" else "accuracy"

    mitigator, mitigation_info = (None, None)
    if config.mitigator is not None:
        mitigator, mitigation_info = _build_mitigator(config, model_spec, dataset.n_features)
    train_backend, test_backend = _resolve_backends(config, mitigator)
    ideal_backend = IdealBackend()
    cache = FeatureCache()
    flags: list[str] = []

    def one_repeat(i: int) -> dict:
        repeat_seed = derive_seed(config.seed, "repeat", i)
        front = model_spec.front(feature_range, derive_seed(repeat_seed, "reservoir"))
        baseline_front = exact_feature_front(front)  # ideal baselines never sample
        train_seed = derive_seed(repeat_seed, "train-features")
        test_seed = derive_seed(repeat_seed, "test-features")
        record = {"repeat": i, "seed": repeat_seed}
        try:
            model = train(
                dataset.train_features,
                dataset.train_targets,
                dataset.task,
                front,
                model_spec.readout,
                train_backend,
                seed=train_seed,
                cache=cache,
                readout_hyper=model_spec.hyper_dict(),
            )
            metric = evaluate_model(
                model, dataset.test_features, dataset.test_targets, test_backend, test_seed, cache
            )
            if train_backend.key == ideal_backend.key and baseline_front is front:
                ideal_model = model
            else:
                ideal_model = train(
                    dataset.train_features,
                    dataset.train_targets,
                    dataset.task,
                    baseline_front,
                    model_spec.readout,
                    ideal_backend,
                    seed=train_seed,
                    cache=cache,
                    readout_hyper=model_spec.hyper_dict(),
                )
            ideal_metric = evaluate_model(
                ideal_model,
                dataset.test_features,
                dataset.test_targets,
                ideal_backend,
                test_seed,
                cache,
            )
            record.update(
                metric=metric,
                ideal_metric=ideal_metric,
                pct_change=percent_change(ideal_metric, metric, direction),
                error=None,
            )
        except Exception as exc:  # record per-repeat failures, keep the batch
            record.update(metric=None, ideal_metric=None, pct_change=None, error=str(exc))
        return record

    jobs = config.jobs or min(config.repeats, os.cpu_count() or 1)
    if jobs > 1 and config.repeats > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            runs = list(pool.map(one_repeat, range(config.repeats)))
    else:
        runs = [one_repeat(i) for i in range(config.repeats)]

    observed = [r["metric"] for r in runs if r["error"] is None]
    ideal_metrics = [r["ideal_metric"] for r in runs if r["error"] is None]
    if any(r["error"] is not None for r in runs):
        flags.append("partial_failures")
    if any(
        r["pct_change"] is not None and math.isnan(r["pct_change"])
        for r in runs
        if r["error"] is None
    ):
        flags.append("undefined_percent_change")

    statistics = None
    if len(observed) >= 3:
        u, p = mann_whitney_u(observed, ideal_metrics)
        statistics = {
            "u": u,
            "p_value": p,
            "a12_observed_vs_ideal": a12(observed, ideal_metrics),
            "method": "exact" if len(observed) + len(ideal_metrics) <= 16 else "approx",
        }

    uq_payload = None
    if config.uq is not None:
        uq_payload = _uq_artifacts(
            config, dataset, model_spec, feature_range, train_backend, test_backend, cache
        )

    return ScenarioReport(
        scenario_id=config.scenario_id,
        profile_name=config.profile.name,
        metric_name=metric_name,
        seed=config.seed,
        repeats=config.repeats,
        dataset_info={
            "kind": dataset.kind,
            "seed": dataset.seed,
            "n_samples": len(dataset.targets),
            "noise_level": dataset.noise_level,
            "task": dataset.task,
            "n_features": dataset.n_features,
        },
        model_info=model_spec.to_dict(),
        runs=runs,
        ideal_baseline=float(np.median(ideal_metrics)) if ideal_metrics else None,
        statistics=statistics,
        uq=uq_payload,
        mitigation=mitigation_info,
        flags=flags,
    )


# ---------------------------------------------------------------------------
# report emission

def _metrics_csv(runs: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["repeat", "seed", "metric", "ideal_metric", "pct_change", "error"])
    for r in runs:
        writer.writerow(
            [
                r["repeat"],
                r["seed"],
                "" if r["metric"] is None else repr(r["metric"]),
                "" if r["ideal_metric"] is None else repr(r["ideal_metric"]),
                ""
                if r["pct_change"] is None or math.isnan(r["pct_change"])
                else repr(r["pct_change"]),
                r["error"] or "",
            ]
        )
    return buf.getvalue()


def _reliability_from_payload(payload: dict) -> ReliabilityDiagram:
    rel = payload["reliability"]
    return ReliabilityDiagram(
        edges=np.asarray(rel["edges"], dtype=float),
        mean_confidence=np.asarray(
            [math.nan if v is None else v for v in rel["mean_confidence"]], dtype=float
        ),
        observed_frequency=np.asarray(
            [math.nan if v is None else v for v in rel["observed_frequency"]], dtype=float
        ),
        counts=np.asarray(rel["counts"], dtype=int),
    )


def emit_report(report: "ScenarioReport | dict", out_dir: str | Path) -> list[Path]:
    """Write results.json, metrics.csv, and the SVG charts; returns the
    written paths. Identical reports produce identical bytes."""
    payload = report.to_dict() if isinstance(report, ScenarioReport) else report
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    results = out / "results.json"
    results.write_bytes(report_json_bytes(payload))
    written.append(results)

    metrics = out / "metrics.csv"
    metrics.write_text(_metrics_csv(payload["runs"]), encoding="utf-8")
    written.append(metrics)

    pct = [
        r["pct_change"]
        for r in payload["runs"]
        if r.get("error") is None and r.get("pct_change") is not None
    ]
    pct = [v for v in pct if not math.isnan(v)]
    box = out / "pct_change_box.svg"
    box.write_text(
        render_box_plot(
            [(payload["scenario"], pct)],
            f"percentage change from ideal ({payload['metric']})",
            "percent",
        ),
        encoding="utf-8",
    )
    written.append(box)

    uq_payload = payload.get("uq")
    if uq_payload:
        for variant in ("configured", "ideal"):
            summary = uq_payload[variant]
            if "intervals" in summary:
                table = out / f"uq_intervals_{variant}.csv"
                table.write_text(intervals_to_csv(summary["intervals"]), encoding="utf-8")
                chart = out / f"uq_intervals_{variant}.svg"
                chart.write_text(
                    render_interval_chart(
                        summary["intervals"],
                        f"{payload['scenario']} {variant}: 95% prediction intervals",
                    ),
                    encoding="utf-8",
                )
                written.extend([table, chart])
            else:
                table = out / f"uq_reliability_{variant}.csv"
                table.write_text(
                    reliability_to_csv(_reliability_from_payload(summary)), encoding="utf-8"
                )
                chart = out / f"uq_reliability_{variant}.svg"
                chart.write_text(
                    render_reliability_chart(
                        summary["reliability"],
                        f"{payload['scenario']} {variant}: reliability",
                    ),
                    encoding="utf-8",
                )
                written.extend([table, chart])
    return written
