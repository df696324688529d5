import numpy as np
import pytest

from qelm_lab import circuit as circ
from qelm_lab import qelm
from qelm_lab.errors import DimensionMismatch, ValidationError
from qelm_lab.noise import bundled_profile, zero_noise_profile
from qelm_lab.simulator import measure_distribution, run_ideal

from conftest import make_depol_profile

UNIT = ((0.0, 1.0),)


def unit_ranges(n):
    return UNIT * n


def test_encode_at_range_minimum_is_identity_up_to_ring():
    spec = qelm.EncoderSpec(unit_ranges(3))
    c = qelm.encode(np.zeros(3), spec, 3)
    dist = measure_distribution(run_ideal(c))
    assert dist.probabilities == pytest.approx({"000": 1.0})


def test_encode_midpoint_gives_equal_superposition():
    spec = qelm.EncoderSpec(unit_ranges(1), entangle=False)
    c = qelm.encode(np.array([0.5]), spec, 1)
    dist = measure_distribution(run_ideal(c))
    assert dist.probabilities["0"] == pytest.approx(0.5)
    assert dist.probabilities["1"] == pytest.approx(0.5)


def test_encode_clamps_out_of_range_values():
    spec = qelm.EncoderSpec(unit_ranges(1), entangle=False)
    c = qelm.encode(np.array([7.0]), spec, 1)
    assert c.gates[0].params[0] == pytest.approx(np.pi)


def test_encode_dimension_mismatch():
    spec = qelm.EncoderSpec(unit_ranges(3))
    with pytest.raises(DimensionMismatch):
        qelm.encode(np.zeros(4), spec, 3)


def test_encoder_spec_validates_ranges():
    with pytest.raises(ValidationError):
        qelm.EncoderSpec(((0.5, 0.5),))


def test_reservoir_is_seed_deterministic():
    spec = qelm.ReservoirSpec("ising", n_qubits=3, seed=21)
    assert qelm.build_reservoir(spec) == qelm.build_reservoir(spec)
    other = qelm.ReservoirSpec("ising", n_qubits=3, seed=22)
    assert qelm.build_reservoir(spec) != qelm.build_reservoir(other)


def test_ising_gate_count_formula():
    spec = qelm.ReservoirSpec("ising", n_qubits=3, seed=0, trotter_steps=2)
    c = qelm.build_reservoir(spec)
    # per step: C(3,2) ZZ couplings plus 3 RX fields
    assert len(c.gates) == 2 * (3 + 3)
    kinds = {g.kind for g in c.gates}
    assert kinds == {"ZZ", "RX"}


def test_rotation_layer_structure():
    spec = qelm.ReservoirSpec("rotation", n_qubits=2, seed=0, layers=1)
    c = qelm.build_reservoir(spec)
    assert len(c.gates) == 3  # 2 rotations + 1 CX
    assert c.gates[2].kind == "CX"
    assert all(g.kind in ("RX", "RY", "RZ") for g in c.gates[:2])


def test_feature_map_dimensions():
    assert qelm.FeatureMapSpec("probabilities").n_features(3) == 8
    assert qelm.FeatureMapSpec("z_expectations").n_features(3) == 3
    assert qelm.FeatureMapSpec("z_and_zz_expectations").n_features(4) == 4 + 6


def test_probability_features_on_entangling_pair(bell):
    dist = measure_distribution(run_ideal(bell))
    feats = qelm.distribution_features(dist, qelm.FeatureMapSpec("probabilities"), seed=0)
    assert np.abs(feats - np.array([0.5, 0.0, 0.0, 0.5])).max() < 1e-12
    backend = qelm.IdealBackend()
    assert np.allclose(
        backend.circuit_features(bell, qelm.FeatureMapSpec("probabilities"), 0), feats
    )


def test_ideal_and_zero_noise_backends_agree():
    front = qelm.QelmFront(
        qelm.EncoderSpec(unit_ranges(2)),
        qelm.ReservoirSpec("ising", n_qubits=2, seed=5),
        qelm.FeatureMapSpec("probabilities", shots=0),
    )
    x = np.array([0.2, 0.8])
    ideal = qelm.extract_features(front, x, qelm.IdealBackend(), seed=3)
    noisy = qelm.extract_features(front, x, qelm.NoisyBackend(zero_noise_profile(2)), seed=3)
    assert np.abs(ideal - noisy).max() < 1e-10
    # with sampling, matched seeds keep the two backends identical
    front_shots = qelm.QelmFront(
        front.encoder, front.reservoir, qelm.FeatureMapSpec("probabilities", shots=512)
    )
    a = qelm.extract_features(front_shots, x, qelm.IdealBackend(), seed=3)
    b = qelm.extract_features(front_shots, x, qelm.NoisyBackend(zero_noise_profile(2)), seed=3)
    assert np.array_equal(a, b)


def test_probability_features_sum_to_one_per_row():
    front = qelm.QelmFront(
        qelm.EncoderSpec(unit_ranges(3)),
        qelm.ReservoirSpec("rotation", n_qubits=3, seed=9),
        qelm.FeatureMapSpec("probabilities", shots=256),
    )
    profile = make_depol_profile(0.02, 0.05, 3)
    rows = qelm.feature_matrix(
        front, np.random.default_rng(0).uniform(size=(6, 3)), qelm.NoisyBackend(profile), 4
    )
    assert np.abs(rows.sum(axis=1) - 1.0).max() < 1e-9


def test_expectation_features_lie_in_unit_interval_of_z():
    front = qelm.QelmFront(
        qelm.EncoderSpec(unit_ranges(2)),
        qelm.ReservoirSpec("ising", n_qubits=2, seed=1),
        qelm.FeatureMapSpec("z_and_zz_expectations"),
    )
    feats = qelm.extract_features(front, np.array([0.3, 0.9]), qelm.IdealBackend())
    assert feats.shape == (3,)
    assert np.all(np.abs(feats) <= 1.0 + 1e-12)


def _linear_fixture(n=80, seed=0):
    rng = np.random.default_rng(seed)
    x = rng.uniform(size=(n, 3))
    y = 1.0 + 2.0 * x[:, 0] - 1.0 * x[:, 1] + 0.5 * x[:, 2] + 0.05 * rng.normal(size=n)
    return x[: int(0.7 * n)], y[: int(0.7 * n)], x[int(0.7 * n) :], y[int(0.7 * n) :]


def _front(n_qubits, seed=11, shots=0):
    return qelm.QelmFront(
        qelm.EncoderSpec(unit_ranges(n_qubits)),
        qelm.ReservoirSpec("ising", n_qubits=n_qubits, seed=seed),
        qelm.FeatureMapSpec("probabilities", shots=shots),
    )


def test_train_beats_constant_predictor_on_linear_fixture():
    x_train, y_train, x_test, y_test = _linear_fixture()
    backend = qelm.IdealBackend()
    model = qelm.train(x_train, y_train, "regression", _front(3), "linear", backend, seed=2)
    preds = qelm.predict_batch(model, x_test, backend, 3)
    mse = float(np.mean((preds - y_test) ** 2))
    const = float(np.mean((y_train.mean() - y_test) ** 2))
    assert mse * 2.0 <= const


def test_classification_accuracy_on_separable_fixture():
    rng = np.random.default_rng(1)
    n = 80
    y = np.arange(n) % 2
    centers = np.where(y[:, None] == 0, 0.25, 0.75)
    x = np.clip(centers + rng.uniform(-0.1, 0.1, size=(n, 4)), 0.0, 1.0)
    backend = qelm.IdealBackend()
    model = qelm.train(x[:56], y[:56], "classification", _front(4), "tree", backend, seed=5)
    labels, probs = qelm.predict_batch(model, x[56:], backend, 6)
    assert np.mean(labels == y[56:]) >= 0.9
    assert np.abs(probs.sum(axis=1) - 1.0).max() < 1e-9
    assert np.array_equal(labels, np.argmax(probs, axis=1))


def test_predict_rejects_wrong_dimension():
    x_train, y_train, _, _ = _linear_fixture(40)
    model = qelm.train(
        x_train, y_train, "regression", _front(3), "linear", qelm.IdealBackend(), seed=2
    )
    with pytest.raises(DimensionMismatch):
        qelm.predict(model, np.zeros(4), qelm.IdealBackend())


def test_training_leaves_reservoir_untouched():
    front = _front(3)
    before = qelm.build_reservoir(front.reservoir)
    x_train, y_train, _, _ = _linear_fixture(40)
    qelm.train(x_train, y_train, "regression", front, "linear", qelm.IdealBackend(), seed=2)
    assert qelm.build_reservoir(front.reservoir) == before


def test_exact_features_make_training_deterministic():
    x_train, y_train, x_test, _ = _linear_fixture(40)
    backend = qelm.IdealBackend()
    m1 = qelm.train(x_train, y_train, "regression", _front(3), "linear", backend, seed=2)
    m2 = qelm.train(x_train, y_train, "regression", _front(3), "linear", backend, seed=2)
    assert np.array_equal(
        qelm.predict_batch(m1, x_test, backend, 3), qelm.predict_batch(m2, x_test, backend, 3)
    )


def test_feature_cache_reuses_rows():
    cache = qelm.FeatureCache()
    front = _front(2)
    x = np.array([[0.1, 0.2], [0.3, 0.4]])
    backend = qelm.IdealBackend()
    qelm.feature_matrix(front, x, backend, 7, cache)
    assert cache.misses == 2
    qelm.feature_matrix(front, x, backend, 7, cache)
    assert cache.hits == 2
    # a different seed or backend is a different cache entry
    qelm.feature_matrix(front, x, backend, 8, cache)
    assert cache.misses == 4


def test_sampled_features_depend_only_on_seed_and_row():
    front = _front(2, shots=128)
    backend = qelm.NoisyBackend(bundled_profile("device-a"))
    x = np.array([[0.2, 0.6]])
    a = qelm.feature_matrix(front, x, backend, 3)
    b = qelm.feature_matrix(front, x, backend, 3)
    c = qelm.feature_matrix(front, x, backend, 4)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_model_json_round_trip():
    x_train, y_train, x_test, _ = _linear_fixture(40)
    backend = qelm.IdealBackend()
    model = qelm.train(x_train, y_train, "regression", _front(3), "linear", backend, seed=2)
    clone = qelm.model_from_dict(qelm.model_to_dict(model))
    assert clone.front == model.front
    assert np.allclose(
        qelm.predict_batch(model, x_test, backend, 3),
        qelm.predict_batch(clone, x_test, backend, 3),
    )


def test_single_prediction_shapes():
    x_train, y_train, x_test, _ = _linear_fixture(40)
    backend = qelm.IdealBackend()
    model = qelm.train(x_train, y_train, "regression", _front(3), "linear", backend, seed=2)
    assert isinstance(qelm.predict(model, x_test[0], backend), float)
    y_cls = (y_train > y_train.mean()).astype(float)
    cls = qelm.train(x_train, y_cls, "classification", _front(3), "logistic", backend, seed=2)
    label, probs = qelm.predict(cls, x_test[0], backend)
    assert label in (0, 1)
    assert probs.shape == (2,)
    assert probs.sum() == pytest.approx(1.0)
