"""State-vector and density-matrix circuit execution.

Two backends share one gate-application core:

    run_ideal   pure states, exact unitary evolution, up to 20 qubits
    run_noisy   density matrices with per-gate Kraus channels, up to 12 qubits

Bit convention: qubit 0 is the most significant bit of an outcome string,
so basis index  b = sum_q bit_q * 2^(n-1-q)  and ``format(b, "0nb")`` reads
as |q0 q1 ... q_{n-1}>. States always start from |0...0>.

Measurement produces an OutcomeDistribution (exact basis probabilities,
optionally pushed through per-qubit readout confusion matrices), which can
then be sampled into ShotCounts with the package's deterministic RNG.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .circuit import Circuit, Gate
from .errors import CapExceeded, IncompatibleProfile, InvalidTarget, ValidationError
from .noise import KrausChannel, NoiseProfile, channel_for_gate
from .rng import Rng

IDEAL_QUBIT_CAP = 20
DENSITY_QUBIT_CAP = 12

_SQRT1_2 = 1.0 / math.sqrt(2.0)
_H = np.array([[_SQRT1_2, _SQRT1_2], [_SQRT1_2, -_SQRT1_2]], dtype=complex)
_X = np.array([[0, 1], [1, 0]], dtype=complex)
_CX = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
)


@lru_cache(maxsize=4096)
def _gate_matrix_cached(kind: str, params: tuple[float, ...]) -> np.ndarray:
    if kind == "H":
        return _H
    if kind == "X":
        return _X
    if kind == "CX":
        return _CX
    if kind == "RX":
        t = params[0] / 2.0
        return np.array(
            [[math.cos(t), -1j * math.sin(t)], [-1j * math.sin(t), math.cos(t)]], dtype=complex
        )
    if kind == "RY":
        t = params[0] / 2.0
        return np.array(
            [[math.cos(t), -math.sin(t)], [math.sin(t), math.cos(t)]], dtype=complex
        )
    if kind == "RZ":
        t = params[0] / 2.0
        return np.diag([np.exp(-1j * t), np.exp(1j * t)]).astype(complex)
    if kind == "ZZ":
        t = params[0] / 2.0
        lo, hi = np.exp(-1j * t), np.exp(1j * t)
        return np.diag([lo, hi, hi, lo]).astype(complex)
    raise ValidationError(f"no matrix for gate kind {kind!r}")


def gate_matrix(gate: Gate) -> np.ndarray:
    """The unitary matrix of a gate (2x2 or 4x4)."""
    return _gate_matrix_cached(gate.kind, gate.params)


@dataclass
class StateVector:
    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if self.amplitudes.size != 2**self.n_qubits:
            raise ValidationError("amplitude count must be 2^n_qubits")
        norm = float(np.sum(np.abs(self.amplitudes) ** 2))
        if abs(norm - 1.0) > 1e-9:
            raise ValidationError(f"state norm {norm} deviates from 1 beyond 1e-9")

    def probabilities_vector(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2


@dataclass
class DensityMatrix:
    n_qubits: int
    entries: np.ndarray

    def __post_init__(self):
        dim = 2**self.n_qubits
        self.entries = np.asarray(self.entries, dtype=complex).reshape(dim, dim)
        self.validate()

    def validate(self) -> None:
        trace = complex(np.trace(self.entries))
        if abs(trace - 1.0) > 1e-9:
            raise ValidationError(f"density matrix trace {trace} deviates from 1 beyond 1e-9")
        if float(np.abs(self.entries - self.entries.conj().T).max()) > 1e-9:
            raise ValidationError("density matrix is not Hermitian within 1e-9")
        min_eig = float(np.linalg.eigvalsh(self.entries).min())
        if min_eig < -1e-8:
            raise ValidationError(f"density matrix has eigenvalue {min_eig} below -1e-8")

    def probabilities_vector(self) -> np.ndarray:
        return np.clip(np.real(np.diag(self.entries)), 0.0, None)


@dataclass
class OutcomeDistribution:
    n_qubits: int
    vector: np.ndarray

    def __post_init__(self):
        self.vector = np.asarray(self.vector, dtype=float).reshape(-1)
        if self.vector.size != 2**self.n_qubits:
            raise ValidationError("probability vector length must be 2^n_qubits")
        if np.any(self.vector < -1e-12) or np.any(self.vector > 1.0 + 1e-12):
            raise ValidationError("probabilities must lie in [0, 1]")
        total = float(self.vector.sum())
        if abs(total - 1.0) > 1e-9:
            raise ValidationError(f"probabilities sum to {total}, beyond 1e-9 of 1")
        self.vector = np.clip(self.vector, 0.0, 1.0)

    @property
    def probabilities(self) -> dict[str, float]:
        """Bitstring -> probability, omitting exactly-zero outcomes."""
        n = self.n_qubits
        return {
            format(i, f"0{n}b"): float(p) for i, p in enumerate(self.vector) if p != 0.0
        }


@dataclass
class ShotCounts:
    shots: int
    counts: dict[str, int]
    n_qubits: int

    def __post_init__(self):
        if self.shots < 1:
            raise ValidationError("shots must be positive")
        if sum(self.counts.values()) != self.shots:
            raise ValidationError("counts must sum to shots")

    def to_distribution(self) -> OutcomeDistribution:
        vec = np.zeros(2**self.n_qubits)
        for bits, c in self.counts.items():
            vec[int(bits, 2)] = c / self.shots
        return OutcomeDistribution(self.n_qubits, vec)


# ---------------------------------------------------------------------------
# tensor kernels

def _apply_unitary_sv(tensor: np.ndarray, op: np.ndarray, qubits: tuple[int, ...]) -> np.ndarray:
    k = len(qubits)
    op_t = op.reshape((2,) * (2 * k))
    out = np.tensordot(op_t, tensor, axes=(tuple(range(k, 2 * k)), qubits))
    return np.moveaxis(out, tuple(range(k)), qubits)


def _apply_op_dm(tensor: np.ndarray, op: np.ndarray, qubits: tuple[int, ...], n: int) -> np.ndarray:
    """A rho A(dagger) on the rank-2n density tensor (ket axes then bra axes)."""
    k = len(qubits)
    op_t = op.reshape((2,) * (2 * k))
    ins = tuple(range(k, 2 * k))
    out = np.tensordot(op_t, tensor, axes=(ins, qubits))
    out = np.moveaxis(out, tuple(range(k)), qubits)
    bra = tuple(n + q for q in qubits)
    out = np.tensordot(out, op_t.conj(), axes=(bra, ins))
    return np.moveaxis(out, tuple(range(2 * n - k, 2 * n)), bra)


def _apply_kraus_dm(
    tensor: np.ndarray, ops: tuple[np.ndarray, ...], qubits: tuple[int, ...], n: int
) -> np.ndarray:
    if len(ops) == 1:
        return _apply_op_dm(tensor, ops[0], qubits, n)
    acc = np.zeros_like(tensor)
    for op in ops:
        acc += _apply_op_dm(tensor, op, qubits, n)
    return acc


@lru_cache(maxsize=16384)
def _noisy_gate_superop(profile: NoiseProfile, gate: Gate) -> np.ndarray:
    """Superoperator tensor for (gate unitary, then its noise channel).

    With A_i = K_i U over the gate's composed Kraus set, the map is
    rho -> sum_i A_i rho A_i^dagger, packed as sum_i kron(A_i, conj(A_i))
    and reshaped to a (2,)*(4k) tensor: output ket/bra bits first, then
    input ket/bra bits. One contraction applies gate and noise together.
    """
    unitary = gate_matrix(gate)
    k = gate.n_targets
    dim = 2**k
    super_op = np.zeros((dim * dim, dim * dim), dtype=complex)
    for kraus in channel_for_gate(profile, gate).operators:
        op = kraus @ unitary
        super_op += np.kron(op, op.conj())
    return super_op.reshape((2,) * (4 * k))


def _apply_superop_dm(
    tensor: np.ndarray, super_tensor: np.ndarray, qubits: tuple[int, ...], n: int
) -> np.ndarray:
    k = len(qubits)
    axes_in = tuple(range(2 * k, 4 * k))
    targets = qubits + tuple(n + q for q in qubits)
    out = np.tensordot(super_tensor, tensor, axes=(axes_in, targets))
    return np.moveaxis(out, tuple(range(2 * k)), targets)


# ---------------------------------------------------------------------------
# execution

def run_ideal(circuit: Circuit, cap: int = IDEAL_QUBIT_CAP) -> StateVector:
    """Apply the gate list to |0...0> and return the final pure state."""
    n = circuit.n_qubits
    if n > cap:
        raise CapExceeded(f"{n} qubits exceeds the ideal-backend cap of {cap}")
    tensor = np.zeros((2,) * n, dtype=complex)
    tensor[(0,) * n] = 1.0
    for gate in circuit.gates:
        tensor = _apply_unitary_sv(tensor, gate_matrix(gate), gate.targets)
    return StateVector(n, tensor.reshape(-1))


def run_noisy(circuit: Circuit, profile: NoiseProfile, cap: int = DENSITY_QUBIT_CAP) -> DensityMatrix:
    """Evolve |0...0><0...0| through the circuit, applying each gate's unitary
    followed by the profile's noise channel for that gate."""
    n = circuit.n_qubits
    if n > cap:
        raise CapExceeded(f"{n} qubits exceeds the density-backend cap of {cap}")
    if profile.n_qubits < n:
        raise IncompatibleProfile(
            f"profile {profile.name!r} covers {profile.n_qubits} qubits, circuit needs {n}"
        )
    tensor = np.zeros((2,) * (2 * n), dtype=complex)
    tensor[(0,) * (2 * n)] = 1.0
    for gate in circuit.gates:
        tensor = _apply_superop_dm(tensor, _noisy_gate_superop(profile, gate), gate.targets, n)
    return DensityMatrix(n, tensor.reshape(2**n, 2**n))


def apply_gate_density(state: DensityMatrix, gate: Gate) -> DensityMatrix:
    """Apply one gate unitary to a density matrix."""
    n = state.n_qubits
    for t in gate.targets:
        if t >= n:
            raise InvalidTarget(f"gate target {t} out of range for {n} qubits")
    tensor = state.entries.reshape((2,) * (2 * n))
    tensor = _apply_op_dm(tensor, gate_matrix(gate), gate.targets, n)
    return DensityMatrix(n, tensor.reshape(2**n, 2**n))


def apply_channel_density(
    state: DensityMatrix, channel: KrausChannel, qubits: tuple[int, ...]
) -> DensityMatrix:
    """Apply a Kraus channel to the given qubits of a density matrix."""
    n = state.n_qubits
    if len(qubits) != int(math.log2(channel.dim)):
        raise ValidationError("channel dimension does not match the qubit tuple")
    for t in qubits:
        if t >= n:
            raise InvalidTarget(f"channel qubit {t} out of range for {n} qubits")
    tensor = state.entries.reshape((2,) * (2 * n))
    tensor = _apply_kraus_dm(tensor, channel.operators, tuple(qubits), n)
    return DensityMatrix(n, tensor.reshape(2**n, 2**n))


# ---------------------------------------------------------------------------
# measurement

def measure_distribution(
    state: StateVector | DensityMatrix, profile: NoiseProfile | None = None
) -> OutcomeDistribution:
    """Computational-basis outcome probabilities.

    With a profile, each qubit's marginal is pushed through its 2x2 readout
    confusion matrix (independent per-qubit model) and the result is
    renormalized.
    """
    n = state.n_qubits
    vec = state.probabilities_vector().astype(float)
    if profile is not None:
        if profile.n_qubits < n:
            raise IncompatibleProfile(
                f"profile {profile.name!r} covers {profile.n_qubits} qubits, state has {n}"
            )
        tensor = vec.reshape((2,) * n)
        for q in range(n):
            m = profile.confusion_matrix(q)
            tensor = np.moveaxis(np.tensordot(tensor, m, axes=([q], [0])), -1, q)
        vec = tensor.reshape(-1)
    vec = np.clip(vec, 0.0, None)
    vec = vec / vec.sum()
    return OutcomeDistribution(n, vec)


def sample(dist: OutcomeDistribution, shots: int, seed: int) -> ShotCounts:
    """Multinomial draw from the distribution, deterministic given the seed."""
    if shots < 1:
        raise ValidationError(f"shots must be >= 1, got {shots}")
    counts_vec = Rng(seed).multinomial(dist.vector, shots)
    n = dist.n_qubits
    counts = {
        format(i, f"0{n}b"): int(c) for i, c in enumerate(counts_vec) if c > 0
    }
    return ShotCounts(shots, counts, n)


def expectation_z(dist: OutcomeDistribution, qubit: int) -> float:
    """<Z_qubit> of the outcome distribution: +1 for bit 0, -1 for bit 1."""
    n = dist.n_qubits
    if not 0 <= qubit < n:
        raise InvalidTarget(f"qubit {qubit} out of range for {n}-qubit distribution")
    bits = (np.arange(2**n) >> (n - 1 - qubit)) & 1
    return float(np.sum(dist.vector * (1.0 - 2.0 * bits)))


def expectation_zz(dist: OutcomeDistribution, q_a: int, q_b: int) -> float:
    """<Z_a Z_b> of the outcome distribution."""
    n = dist.n_qubits
    for q in (q_a, q_b):
        if not 0 <= q < n:
            raise InvalidTarget(f"qubit {q} out of range for {n}-qubit distribution")
    idx = np.arange(2**n)
    bits_a = (idx >> (n - 1 - q_a)) & 1
    bits_b = (idx >> (n - 1 - q_b)) & 1
    return float(np.sum(dist.vector * (1.0 - 2.0 * bits_a) * (1.0 - 2.0 * bits_b)))


# ---------------------------------------------------------------------------
# helpers

def maximally_mixed(n_qubits: int) -> DensityMatrix:
    dim = 2**n_qubits
    return DensityMatrix(n_qubits, np.eye(dim, dtype=complex) / dim)


def density_from_state(state: StateVector) -> DensityMatrix:
    amps = state.amplitudes
    return DensityMatrix(state.n_qubits, np.outer(amps, amps.conj()))


def trace_distance(a: DensityMatrix, b: DensityMatrix) -> float:
    """(1/2) * trace norm of (a - b)."""
    if a.n_qubits != b.n_qubits:
        raise ValidationError("trace distance needs states on equal qubit counts")
    eigs = np.linalg.eigvalsh(a.entries - b.entries)
    return 0.5 * float(np.abs(eigs).sum())
