import numpy as np
import pytest

from qelm_lab import circuit as circ
from qelm_lab import simulator as sim
from qelm_lab.errors import CapExceeded, IncompatibleProfile, InvalidTarget, ValidationError
from qelm_lab.noise import KrausChannel, depolarizing_channel, zero_noise_profile

from conftest import make_depol_profile, random_gate_list


def test_empty_circuit_stays_in_ground_state():
    state = sim.run_ideal(circ.Circuit(1))
    assert np.allclose(state.amplitudes, [1.0, 0.0])


def test_hadamard_gives_equal_superposition():
    state = sim.run_ideal(circ.Circuit(1, (circ.h(0),)))
    assert np.abs(state.amplitudes - np.array([1, 1]) / np.sqrt(2)).max() < 1e-12


def test_bell_distribution(bell):
    dist = sim.measure_distribution(sim.run_ideal(bell))
    assert dist.probabilities == pytest.approx({"00": 0.5, "11": 0.5})


def test_qubit_caps():
    with pytest.raises(CapExceeded):
        sim.run_ideal(circ.Circuit(3), cap=2)
    with pytest.raises(CapExceeded):
        sim.run_noisy(circ.Circuit(13), zero_noise_profile(13))


def test_profile_must_cover_circuit(bell):
    small = zero_noise_profile(1)
    with pytest.raises(IncompatibleProfile):
        sim.run_noisy(bell, small)
    with pytest.raises(IncompatibleProfile):
        sim.measure_distribution(sim.run_ideal(bell), small)


def test_zero_noise_profile_matches_ideal():
    rng = np.random.default_rng(17)
    profile = zero_noise_profile(4)
    for _ in range(10):
        n = int(rng.integers(1, 5))
        c = circ.Circuit(n, tuple(random_gate_list(rng, n, int(rng.integers(1, 10)))))
        p_ideal = sim.measure_distribution(sim.run_ideal(c)).vector
        p_noisy = sim.measure_distribution(sim.run_noisy(c, profile), profile).vector
        assert np.abs(p_ideal - p_noisy).max() < 1e-10


def test_depolarizing_bell_leaks_into_odd_states(bell):
    profile = make_depol_profile(0.05, 0.05, n_qubits=2)
    dist = sim.measure_distribution(sim.run_noisy(bell, profile), profile)
    assert dist.probabilities.get("01", 0.0) > 0.0
    assert dist.probabilities.get("10", 0.0) > 0.0


def test_depolarizing_contraction_single_qubit():
    p = 0.05
    profile = make_depol_profile(p, n_qubits=1)
    mixed = sim.maximally_mixed(1)
    for g in (3, 7):
        c = circ.Circuit(1, tuple(circ.h(0) for _ in range(g)))
        observed = sim.trace_distance(sim.run_noisy(c, profile), mixed)
        assert abs(observed - 0.5 * (1 - p) ** g) < 1e-9


def test_unitary_preserves_distance_to_maximally_mixed():
    rng = np.random.default_rng(3)
    state = sim.run_noisy(
        circ.Circuit(2, (circ.h(0), circ.cx(0, 1))), make_depol_profile(0.1, 0.1, 2)
    )
    mixed = sim.maximally_mixed(2)
    before = sim.trace_distance(state, mixed)
    for gate in random_gate_list(rng, 2, 6):
        state = sim.apply_gate_density(state, gate)
        assert abs(sim.trace_distance(state, mixed) - before) < 1e-10


def test_global_depolarizing_channel_contracts_distance():
    p = 0.07
    channel = depolarizing_channel(p, 2)
    state = sim.density_from_state(sim.run_ideal(circ.Circuit(2, (circ.h(0), circ.cx(0, 1)))))
    mixed = sim.maximally_mixed(2)
    before = sim.trace_distance(state, mixed)
    after = sim.trace_distance(sim.apply_channel_density(state, channel, (0, 1)), mixed)
    assert abs(after - (1 - p) * before) < 1e-9


def test_readout_confusion_matches_tensor_oracle(bell):
    flip = ((0.9, 0.1), (0.1, 0.9))
    profile = make_depol_profile(0.0, 0.0, 2)
    profile = profile.__class__(
        name="flip",
        depol_1q=0.0,
        depol_2q=0.0,
        t1_us=profile.t1_us[:2],
        t2_us=profile.t2_us[:2],
        gate_time_1q_us=0.0,
        gate_time_2q_us=0.0,
        readout_confusion=(flip, flip),
    )
    dist = sim.measure_distribution(sim.run_ideal(bell), profile)
    # oracle: p_out = p_in @ (M kron M)
    m = np.array(flip)
    expected = np.array([0.5, 0.0, 0.0, 0.5]) @ np.kron(m, m)
    assert np.abs(dist.vector - expected).max() < 1e-12
    assert dist.probabilities["00"] == pytest.approx(0.41)
    assert dist.probabilities["01"] == pytest.approx(0.09)


def test_distribution_sums_to_one_under_any_profile(bell):
    profile = make_depol_profile(0.2, 0.3, 2)
    dist = sim.measure_distribution(sim.run_noisy(bell, profile), profile)
    assert abs(dist.vector.sum() - 1.0) < 1e-9
    assert np.all(dist.vector >= 0.0)
    assert np.all(dist.vector <= 1.0)


def test_sample_point_mass():
    dist = sim.OutcomeDistribution(2, np.array([1.0, 0.0, 0.0, 0.0]))
    counts = sim.sample(dist, 100, seed=1)
    assert counts.counts == {"00": 100}


def test_sample_is_deterministic_and_concentrates():
    dist = sim.OutcomeDistribution(2, np.array([0.5, 0.0, 0.0, 0.5]))
    a = sim.sample(dist, 10_000, seed=7)
    b = sim.sample(dist, 10_000, seed=7)
    assert a.counts == b.counts
    sigma = np.sqrt(10_000 * 0.25)
    assert abs(a.counts["00"] - 5000) < 4 * sigma
    assert abs(a.counts["11"] - 5000) < 4 * sigma


def test_sample_requires_positive_shots():
    dist = sim.OutcomeDistribution(1, np.array([1.0, 0.0]))
    with pytest.raises(ValidationError):
        sim.sample(dist, 0, seed=0)


def test_expectation_z_cases(bell):
    point = sim.OutcomeDistribution(1, np.array([1.0, 0.0]))
    assert sim.expectation_z(point, 0) == pytest.approx(1.0)
    uniform = sim.OutcomeDistribution(1, np.array([0.5, 0.5]))
    assert sim.expectation_z(uniform, 0) == pytest.approx(0.0)
    bell_dist = sim.measure_distribution(sim.run_ideal(bell))
    assert sim.expectation_z(bell_dist, 0) == pytest.approx(0.0)
    assert sim.expectation_zz(bell_dist, 0, 1) == pytest.approx(1.0)
    with pytest.raises(InvalidTarget):
        sim.expectation_z(bell_dist, 2)


def test_state_invariants_are_enforced():
    with pytest.raises(ValidationError):
        sim.StateVector(1, np.array([1.0, 1.0]))
    with pytest.raises(ValidationError):
        sim.DensityMatrix(1, np.array([[0.9, 0.0], [0.0, 0.0]]))
    with pytest.raises(ValidationError):
        sim.OutcomeDistribution(1, np.array([0.7, 0.2]))


def test_shot_counts_round_trip():
    counts = sim.ShotCounts(8, {"00": 6, "11": 2}, 2)
    dist = counts.to_distribution()
    assert dist.vector.tolist() == [0.75, 0.0, 0.0, 0.25]


def test_apply_channel_validates_dimension():
    state = sim.maximally_mixed(2)
    with pytest.raises(ValidationError):
        sim.apply_channel_density(state, KrausChannel((np.eye(2, dtype=complex),)), (0, 1))
