import numpy as np
import pytest

from qelm_lab import circuit as circ
from qelm_lab.noise import NoiseProfile, zero_noise_profile


@pytest.fixture
def bell():
    return circ.Circuit(2, (circ.h(0), circ.cx(0, 1)))


@pytest.fixture
def zero_profile():
    return zero_noise_profile(4)


def make_depol_profile(p1q: float, p2q: float = 0.0, n_qubits: int = 4, name: str = "depol"):
    """A profile with only depolarizing noise (no relaxation, no readout error)."""
    identity = ((1.0, 0.0), (0.0, 1.0))
    return NoiseProfile(
        name=name,
        depol_1q=p1q,
        depol_2q=p2q,
        t1_us=(100.0,) * n_qubits,
        t2_us=(100.0,) * n_qubits,
        gate_time_1q_us=0.0,
        gate_time_2q_us=0.0,
        readout_confusion=(identity,) * n_qubits,
    )


def random_gate_list(rng: np.random.Generator, n_qubits: int, n_gates: int):
    """Random gates for property tests (numpy Generator is fine here; these
    seeds never have to be stable across platforms)."""
    gates = []
    for _ in range(n_gates):
        if n_qubits >= 2 and rng.random() < 0.35:
            kind = rng.choice(["CX", "ZZ"])
            a, b = rng.choice(n_qubits, size=2, replace=False)
            params = (float(rng.uniform(0, 2 * np.pi)),) if kind == "ZZ" else ()
            gates.append(circ.Gate(kind, (int(a), int(b)), params))
        else:
            kind = rng.choice(["H", "X", "RX", "RY", "RZ"])
            params = (
                (float(rng.uniform(0, 2 * np.pi)),) if kind in ("RX", "RY", "RZ") else ()
            )
            gates.append(circ.Gate(kind, (int(rng.integers(n_qubits)),), params))
    return gates
