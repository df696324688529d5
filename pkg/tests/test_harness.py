import json
import math

import numpy as np
import pytest
import scipy.stats
from hypothesis import given, settings
from hypothesis import strategies as st

from qelm_lab import harness
from qelm_lab.errors import EmptyInput, TooFewSamples, ValidationError
from qelm_lab.harness import (
    Dataset,
    ScenarioConfig,
    UqSpec,
    a12,
    emit_report,
    generate_dataset,
    load_csv_dataset,
    mann_whitney_u,
    percent_change,
    report_json_bytes,
    run_scenario,
    run_uq,
)
from qelm_lab.noise import zero_noise_profile
from qelm_lab.readout import DecisionTree


# ---------------------------------------------------------------------------
# datasets

def test_generate_dataset_is_deterministic():
    a = generate_dataset("regression3", 40, seed=5)
    b = generate_dataset("regression3", 40, seed=5)
    assert np.array_equal(a.features, b.features)
    assert np.array_equal(a.targets, b.targets)
    assert np.array_equal(a.train_idx, b.train_idx)
    c = generate_dataset("regression3", 40, seed=6)
    assert not np.array_equal(a.features, c.features)


def test_dataset_shapes_and_split():
    for kind, d in (("regression3", 3), ("classification4", 4), ("classification8", 8)):
        ds = generate_dataset(kind, 50, seed=1)
        assert ds.features.shape == (50, d)
        assert len(ds.train_idx) == 35
        assert len(ds.test_idx) == 15
        assert set(ds.train_idx) | set(ds.test_idx) == set(range(50))
        assert set(ds.train_idx) & set(ds.test_idx) == set()


def test_generate_dataset_validates_inputs():
    with pytest.raises(ValidationError):
        generate_dataset("regression3", 10, seed=1)
    with pytest.raises(ValidationError):
        generate_dataset("mystery", 40, seed=1)


def test_noiseless_classification4_is_tree_separable():
    ds = generate_dataset("classification4", 60, seed=2, noise_level=0.0)
    tree = DecisionTree("classification", max_depth=3).fit(ds.features, ds.targets)
    assert (tree.predict(ds.features) == ds.targets).all()


def test_regression3_signal_dominates_noise():
    ds = generate_dataset("regression3", 400, seed=3)
    assert float(np.var(ds.targets)) > ds.noise_level**2 * 10


def test_classification8_overlap_grows_with_noise_level():
    clean = generate_dataset("classification8", 200, seed=4, noise_level=0.0)
    messy = generate_dataset("classification8", 200, seed=4, noise_level=1.5)

    def margin(ds):
        mu0 = ds.features[ds.targets == 0].mean(axis=0)
        mu1 = ds.features[ds.targets == 1].mean(axis=0)
        spread = ds.features.std(axis=0).mean()
        return np.linalg.norm(mu1 - mu0) / spread

    assert margin(clean) > margin(messy)


def test_csv_round_trip(tmp_path):
    path = tmp_path / "data.csv"
    path.write_text("a,b,target\n0.1,0.2,1.0\n0.3,0.4,2.0\n0.5,0.6,3.0\n0.7,0.8,4.0\n")
    ds = load_csv_dataset(path, "regression")
    assert ds.features.shape == (4, 2)
    assert ds.targets.tolist() == [1.0, 2.0, 3.0, 4.0]
    assert ds.kind == "csv"


def test_dataset_label_validation():
    with pytest.raises(ValidationError):
        Dataset(
            features=np.zeros((4, 2)),
            targets=np.array([0.0, 1.0, 2.0, 0.0]),
            task="classification",
            train_idx=np.array([0, 1]),
            test_idx=np.array([2, 3]),
        )


# ---------------------------------------------------------------------------
# percentage change

def test_percent_change_error_direction():
    assert percent_change(10.0, 35.0, "error") == pytest.approx(250.0)
    assert percent_change(10.0, 10.0, "error") == 0.0


def test_percent_change_accuracy_direction():
    assert percent_change(1.0, 0.5, "accuracy") == pytest.approx(50.0)
    assert percent_change(0.9, 0.9, "accuracy") == 0.0


def test_percent_change_flags_bad_baseline_with_nan():
    assert math.isnan(percent_change(0.0, 1.0, "error"))
    assert math.isnan(percent_change(0.0, 0.5, "accuracy"))
    assert math.isnan(percent_change(1.5, 0.5, "accuracy"))
    with pytest.raises(ValidationError):
        percent_change(1.0, 1.0, "banana")


# ---------------------------------------------------------------------------
# rank statistics

def test_mann_whitney_disjoint_groups_exact():
    u, p = mann_whitney_u([1.0, 2.0, 3.0], [4.0, 5.0, 6.0])
    assert u == 0.0
    assert p == pytest.approx(0.1)


def test_mann_whitney_identical_lists():
    _, p = mann_whitney_u([1.0, 2.0, 3.0], [1.0, 2.0, 3.0])
    assert p == pytest.approx(1.0)


def test_mann_whitney_is_permutation_invariant():
    a = [3.0, 1.0, 2.0, 5.0]
    b = [4.0, 0.5, 2.5]
    u1, p1 = mann_whitney_u(a, b)
    u2, p2 = mann_whitney_u([5.0, 2.0, 1.0, 3.0], b)
    assert (u1, p1) == (u2, p2)


def test_mann_whitney_requires_three_per_group():
    with pytest.raises(TooFewSamples):
        mann_whitney_u([1.0, 2.0], [3.0, 4.0, 5.0])


def test_mann_whitney_exact_and_approx_agree_at_boundary():
    rng = np.random.default_rng(0)
    for _ in range(6):
        a = rng.normal(size=8)
        b = rng.normal(loc=rng.uniform(0, 1.5), size=8)
        _, p_exact = mann_whitney_u(a, b, method="exact")
        _, p_approx = mann_whitney_u(a, b, method="approx")
        assert abs(p_exact - p_approx) <= 0.02
    a17 = rng.normal(size=9)
    b17 = rng.normal(size=8)
    _, p_auto = mann_whitney_u(a17, b17)  # pooled size 17 -> approx path
    _, p_exact = mann_whitney_u(a17, b17, method="exact")
    assert abs(p_auto - p_exact) <= 0.02


def test_mann_whitney_tracks_scipy_oracle():
    rng = np.random.default_rng(1)
    for _ in range(5):
        a = rng.normal(size=12)
        b = rng.normal(loc=0.8, size=10)
        u, p = mann_whitney_u(a, b)
        ref = scipy.stats.mannwhitneyu(a, b, alternative="two-sided", method="asymptotic")
        assert u == pytest.approx(float(ref.statistic))
        assert p == pytest.approx(float(ref.pvalue), abs=5e-3)


def test_a12_worked_cases():
    assert a12([1.0, 2.0], [1.0, 2.0]) == pytest.approx(0.5)
    assert a12([5.0, 6.0], [1.0, 2.0]) == 1.0
    assert a12([1.0, 3.0], [2.0, 4.0]) == pytest.approx(0.25)
    with pytest.raises(EmptyInput):
        a12([], [1.0])


@settings(max_examples=60, deadline=None)
@given(
    a=st.lists(st.floats(-5, 5), min_size=1, max_size=12),
    b=st.lists(st.floats(-5, 5), min_size=1, max_size=12),
)
def test_a12_complement_sums_to_one(a, b):
    assert a12(a, b) + a12(b, a) == pytest.approx(1.0)


# ---------------------------------------------------------------------------
# scenario configs and runs

def test_scenario_config_validation(zero_profile):
    with pytest.raises(ValidationError):
        ScenarioConfig("C9_9", zero_profile)
    with pytest.raises(ValidationError):
        ScenarioConfig("C2_1", zero_profile)  # mitigated backend, no mitigator
    with pytest.raises(ValidationError):
        ScenarioConfig("C1_1", zero_profile, mitigator="zne")
    with pytest.raises(ValidationError):
        ScenarioConfig("C3_1", zero_profile)  # uq mandatory
    config = ScenarioConfig("C3_2", zero_profile, uq=UqSpec("bootstrap"))
    assert config.backend_pair == ("noisy", "noisy")
    assert config.uq.resolved_samples == 100
    assert UqSpec("ensemble").resolved_samples == 30


def _small_scenario(repeats=3, scenario="C1_1", profile=None, seed=9):
    dataset = generate_dataset("regression3", 24, seed=2)
    profile = profile or zero_noise_profile(3)
    config = ScenarioConfig(scenario, profile, repeats=repeats, seed=seed, jobs=1)
    return config, dataset


def test_zero_noise_scenario_has_zero_percent_changes():
    config, dataset = _small_scenario()
    report = run_scenario(config, dataset)
    assert len(report.runs) == config.repeats
    for run in report.runs:
        assert run["error"] is None
        assert abs(run["pct_change"]) < 1e-6


def test_scenario_records_statistics_and_baseline():
    config, dataset = _small_scenario(repeats=4)
    report = run_scenario(config, dataset)
    assert report.statistics is not None
    assert 0.0 <= report.statistics["p_value"] <= 1.0
    assert report.statistics["method"] == "exact"
    assert report.ideal_baseline is not None
    assert report.metric_name == "mse"


def test_scenario_records_per_repeat_failures_without_aborting():
    dataset = generate_dataset("regression3", 24, seed=2)
    config = ScenarioConfig("C1_1", zero_noise_profile(2), repeats=2, seed=1, jobs=1)
    report = run_scenario(config, dataset)  # profile covers too few qubits
    assert all(r["error"] is not None for r in report.runs)
    assert "partial_failures" in report.flags
    assert report.statistics is None


def test_report_emission_files_and_determinism(tmp_path):
    config, dataset = _small_scenario()
    report = run_scenario(config, dataset)
    out1 = tmp_path / "one"
    out2 = tmp_path / "two"
    files = emit_report(report, out1)
    names = {f.name for f in files}
    assert names == {"results.json", "metrics.csv", "pct_change_box.svg"}
    emit_report(report, out2)
    for name in names:
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()
    rows = (out1 / "metrics.csv").read_text().strip().splitlines()
    assert len(rows) == 1 + config.repeats
    payload = json.loads((out1 / "results.json").read_text())
    assert payload["scenario"] == "C1_1"
    assert len(payload["runs"]) == config.repeats


def test_rerunning_a_scenario_reproduces_bytes():
    config, dataset = _small_scenario(repeats=2)
    first = report_json_bytes(run_scenario(config, dataset))
    second = report_json_bytes(run_scenario(config, dataset))
    assert first == second


def test_uq_scenario_emits_uq_files(tmp_path):
    dataset = generate_dataset("regression3", 24, seed=2)
    config = ScenarioConfig(
        "C3_2", zero_noise_profile(3), repeats=2, seed=1, uq=UqSpec("bootstrap", 20), jobs=1
    )
    report = run_scenario(config, dataset)
    assert report.uq is not None
    assert report.uq["samples"] == 20
    files = {f.name for f in emit_report(report, tmp_path / "uq")}
    assert "uq_intervals_configured.csv" in files
    assert "uq_intervals_ideal.svg" in files


def test_run_uq_requires_uq_spec():
    config, dataset = _small_scenario()
    with pytest.raises(ValidationError):
        run_uq(config, dataset)


def test_scenario_is_schedule_independent():
    dataset = generate_dataset("regression3", 24, seed=2)
    profile = zero_noise_profile(3)
    serial = ScenarioConfig("C1_1", profile, repeats=4, seed=9, jobs=1)
    threaded = ScenarioConfig("C1_1", profile, repeats=4, seed=9, jobs=4)
    assert report_json_bytes(run_scenario(serial, dataset)) == report_json_bytes(
        run_scenario(threaded, dataset)
    )
