"""Dense statevector simulation, exact expectation values and shot sampling.

Amplitude ``k`` belongs to the basis state whose bit ``q`` is the value of
qubit ``q`` (qubit 0 least significant).  Rotations follow
``R_P(theta) = exp(-i theta P / 2)``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from kitaev_vqe.pauli import PauliString, PauliSum

NORM_TOLERANCE = 1e-10
IMAG_TOLERANCE = 1e-10

_PAULI_2 = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}
_HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
_SDG = np.array([[1, 0], [0, -1j]], dtype=complex)


class UnsupportedObservableError(ValueError):
    """Observable has a term outside the Z / XX / YY measurement scheme."""


class GateKind(str, enum.Enum):
    RX = "rx"
    RY = "ry"
    RZ = "rz"
    H = "h"
    SDG = "sdg"
    CNOT = "cnot"
    # exp(i * angle * G) for a two-qubit Pauli generator G
    EXP2 = "exp2"
    # global phase exp(i * angle)
    PHASE = "phase"


_ROTATIONS = {GateKind.RX, GateKind.RY, GateKind.RZ}
_PARAMETRIC = _ROTATIONS | {GateKind.EXP2, GateKind.PHASE}
_ARITY = {
    GateKind.RX: 1, GateKind.RY: 1, GateKind.RZ: 1, GateKind.H: 1,
    GateKind.SDG: 1, GateKind.CNOT: 2, GateKind.EXP2: 2, GateKind.PHASE: 0,
}


@dataclass(frozen=True)
class Gate:
    """One circuit instruction.

    The angle of a parametric gate is either ``angle`` (fixed) or
    ``scale * params[slot]``.  For ``CNOT`` the qubits are ``(control, target)``.
    For ``EXP2`` the generator is a tuple of ``(axes, coefficient)`` pairs where
    ``axes[0]`` acts on ``qubits[0]``.
    """

    kind: GateKind
    qubits: tuple[int, ...] = ()
    angle: float | None = None
    slot: int | None = None
    scale: float = 1.0
    generator: tuple[tuple[str, float], ...] = ()

    def __post_init__(self) -> None:
        if len(self.qubits) != _ARITY[self.kind]:
            raise ValueError(f"{self.kind.value} acts on {_ARITY[self.kind]} qubits")
        if len(set(self.qubits)) != len(self.qubits):
            raise ValueError(f"repeated qubit in {self.qubits}")
        if self.kind in _PARAMETRIC and (self.angle is None) == (self.slot is None):
            raise ValueError(f"{self.kind.value} needs exactly one of angle or slot")
        if self.kind not in _PARAMETRIC and (self.angle is not None or self.slot is not None):
            raise ValueError(f"{self.kind.value} takes no angle")
        if self.kind is GateKind.EXP2 and not self.generator:
            raise ValueError("exp2 gate needs a generator")

    def resolve(self, params: Sequence[float]) -> float:
        if self.slot is None:
            return float(self.angle)
        return self.scale * float(params[self.slot])


@dataclass(frozen=True)
class Circuit:
    n_qubits: int
    gates: tuple[Gate, ...]
    n_params: int

    def __post_init__(self) -> None:
        if self.n_qubits < 1:
            raise ValueError("a circuit needs at least one qubit")
        used = set()
        for gate in self.gates:
            if any(not 0 <= q < self.n_qubits for q in gate.qubits):
                raise ValueError(f"gate {gate} addresses a qubit outside {self.n_qubits}")
            if gate.slot is not None:
                if not 0 <= gate.slot < self.n_params:
                    raise ValueError(f"slot {gate.slot} outside [0, {self.n_params})")
                used.add(gate.slot)
        missing = set(range(self.n_params)) - used
        if missing:
            raise ValueError(f"parameter slots never used: {sorted(missing)}")

    def count(self, kind: GateKind) -> int:
        return sum(g.kind is kind for g in self.gates)


@dataclass
class StateVector:
    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self) -> None:
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex)
        if self.amplitudes.shape != (1 << self.n_qubits,):
            raise ValueError(
                f"expected {1 << self.n_qubits} amplitudes, got {self.amplitudes.shape}"
            )

    @classmethod
    def zero(cls, n_qubits: int) -> "StateVector":
        amps = np.zeros(1 << n_qubits, dtype=complex)
        amps[0] = 1.0
        return cls(n_qubits, amps)

    @classmethod
    def basis(cls, n_qubits: int, index: int) -> "StateVector":
        amps = np.zeros(1 << n_qubits, dtype=complex)
        amps[index] = 1.0
        return cls(n_qubits, amps)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def copy(self) -> "StateVector":
        return StateVector(self.n_qubits, self.amplitudes.copy())


def rotation_matrix(kind: GateKind, angle: float) -> np.ndarray:
    c, s = np.cos(angle / 2), np.sin(angle / 2)
    if kind is GateKind.RX:
        return np.array([[c, -1j * s], [-1j * s, c]])
    if kind is GateKind.RY:
        return np.array([[c, -s], [s, c]], dtype=complex)
    if kind is GateKind.RZ:
        return np.array([[c - 1j * s, 0], [0, c + 1j * s]])
    raise ValueError(f"{kind} is not a rotation")


def generator_matrix(generator: tuple[tuple[str, float], ...]) -> np.ndarray:
    """4x4 matrix of a two-qubit Pauli generator; first axis is the low bit."""
    out = np.zeros((4, 4), dtype=complex)
    for axes, coeff in generator:
        out += coeff * np.kron(_PAULI_2[axes[1]], _PAULI_2[axes[0]])
    return out


@lru_cache(maxsize=256)
def _generator_eigh(generator: tuple[tuple[str, float], ...]):
    return np.linalg.eigh(generator_matrix(generator))


def exp2_matrix(generator: tuple[tuple[str, float], ...], angle: float) -> np.ndarray:
    w, v = _generator_eigh(generator)
    return (v * np.exp(1j * angle * w)) @ v.conj().T


@lru_cache(maxsize=512)
def _cnot_permutation(n: int, control: int, target: int) -> np.ndarray:
    idx = np.arange(1 << n, dtype=np.int64)
    return idx ^ (((idx >> control) & 1) << target)


def _apply_1q(psi: np.ndarray, q: int, u: np.ndarray) -> np.ndarray:
    v = psi.reshape(-1, 2, 1 << q)
    a, b = v[:, 0, :], v[:, 1, :]
    out = np.empty_like(v)
    out[:, 0, :] = u[0, 0] * a + u[0, 1] * b
    out[:, 1, :] = u[1, 0] * a + u[1, 1] * b
    return out.reshape(-1)


def _apply_rz(psi: np.ndarray, q: int, angle: float) -> np.ndarray:
    v = psi.reshape(-1, 2, 1 << q).copy()
    v[:, 0, :] *= np.exp(-0.5j * angle)
    v[:, 1, :] *= np.exp(0.5j * angle)
    return v.reshape(-1)


def _apply_2q(psi: np.ndarray, n: int, qa: int, qb: int, u: np.ndarray) -> np.ndarray:
    tensor = psi.reshape((2,) * n)
    ax_a, ax_b = n - 1 - qa, n - 1 - qb
    # local index = bit_a + 2 * bit_b  ->  (b_out, a_out, b_in, a_in)
    u4 = u.reshape(2, 2, 2, 2)
    out = np.tensordot(u4, tensor, axes=([2, 3], [ax_b, ax_a]))
    return np.moveaxis(out, [0, 1], [ax_b, ax_a]).reshape(-1)


def apply_gate(psi: np.ndarray, n: int, gate: Gate, params: Sequence[float] = ()) -> np.ndarray:
    """Return a new amplitude array with ``gate`` applied."""
    kind = gate.kind
    if kind is GateKind.RZ:
        return _apply_rz(psi, gate.qubits[0], gate.resolve(params))
    if kind in _ROTATIONS:
        return _apply_1q(psi, gate.qubits[0], rotation_matrix(kind, gate.resolve(params)))
    if kind is GateKind.H:
        return _apply_1q(psi, gate.qubits[0], _HADAMARD)
    if kind is GateKind.SDG:
        return _apply_1q(psi, gate.qubits[0], _SDG)
    if kind is GateKind.CNOT:
        return psi[_cnot_permutation(n, *gate.qubits)]
    if kind is GateKind.EXP2:
        u = exp2_matrix(gate.generator, gate.resolve(params))
        return _apply_2q(psi, n, gate.qubits[0], gate.qubits[1], u)
    if kind is GateKind.PHASE:
        return psi * np.exp(1j * gate.resolve(params))
    raise ValueError(f"unknown gate kind {kind}")


def run_circuit(
    circuit: Circuit,
    params: Sequence[float] = (),
    initial: StateVector | None = None,
) -> StateVector:
    params = np.asarray(params, dtype=float).reshape(-1)
    if params.shape[0] != circuit.n_params:
        raise ValueError(
            f"circuit takes {circuit.n_params} parameters, got {params.shape[0]}"
        )
    if initial is None:
        psi = StateVector.zero(circuit.n_qubits).amplitudes
    else:
        if initial.n_qubits != circuit.n_qubits:
            raise ValueError("initial state and circuit disagree on qubit count")
        psi = initial.amplitudes.copy()
    for gate in circuit.gates:
        psi = apply_gate(psi, circuit.n_qubits, gate, params)
    return StateVector(circuit.n_qubits, psi)


@dataclass(frozen=True)
class _CompiledObservable:
    diagonal: np.ndarray
    # (flip mask, per-basis-state factor c with P|x> = c[x] |x ^ mask>)
    offdiagonal: tuple[tuple[int, np.ndarray], ...]


@lru_cache(maxsize=128)
def _compile(h: PauliSum) -> _CompiledObservable:
    dim = 1 << h.n_qubits
    idx = np.arange(dim, dtype=np.int64)
    diagonal = np.full(dim, h.constant, dtype=float)
    groups: dict[int, np.ndarray] = {}
    for term in h.terms:
        x, y, z = term.masks()
        signs = np.where(np.bitwise_count(idx & (y | z)) & 1, -1.0, 1.0)
        factor = term.coefficient * (1j ** bin(y).count("1")) * signs
        flip = x | y
        if flip == 0:
            diagonal = diagonal + factor.real
        else:
            groups[flip] = groups.get(flip, 0) + factor
    return _CompiledObservable(diagonal, tuple(sorted(groups.items())))


def expectation(state: StateVector, h: PauliSum) -> float:
    """``<psi|h|psi>`` including the constant term."""
    if state.n_qubits != h.n_qubits:
        raise ValueError(f"state has {state.n_qubits} qubits, observable {h.n_qubits}")
    psi = state.amplitudes
    compiled = _compile(h)
    value = complex(np.dot(compiled.diagonal, np.abs(psi) ** 2))
    idx = np.arange(psi.shape[0], dtype=np.int64)
    for flip, factor in compiled.offdiagonal:
        value += np.vdot(psi[idx ^ flip], factor * psi)
    if abs(value.imag) > IMAG_TOLERANCE * max(1.0, abs(value.real)):
        raise ArithmeticError(f"expectation has imaginary part {value.imag:.3e}")
    return float(value.real)


class Basis(str, enum.Enum):
    Z = "Z"
    X = "X"
    Y = "Y"


_BASIS_ORDER = (Basis.Z, Basis.X, Basis.Y)


@dataclass(frozen=True)
class MeasurementGroup:
    basis: Basis
    terms: tuple[PauliString, ...]

    @property
    def stream(self) -> int:
        return _BASIS_ORDER.index(self.basis)


def _term_basis(term: PauliString) -> Basis:
    axes = {term.axes[q] for q in term.support}
    if len(axes) != 1:
        raise UnsupportedObservableError(f"mixed-axis term {term.label()}")
    axis = axes.pop()
    weight = len(term.support)
    if axis == "Z" and weight == 1:
        return Basis.Z
    if axis in "XY" and weight == 2:
        return Basis(axis)
    raise UnsupportedObservableError(f"unsupported term shape {term.label()}")


def measurement_groups(h: PauliSum) -> list[MeasurementGroup]:
    """Split ``h`` into at most three commuting groups measured in one basis each."""
    buckets: dict[Basis, list[PauliString]] = {b: [] for b in _BASIS_ORDER}
    for term in h.terms:
        buckets[_term_basis(term)].append(term)
    return [MeasurementGroup(b, tuple(buckets[b])) for b in _BASIS_ORDER if buckets[b]]


def rotate_to_basis(state: StateVector, basis: Basis) -> StateVector:
    psi = state.amplitudes
    if basis is Basis.Z:
        return state.copy()
    for q in range(state.n_qubits):
        if basis is Basis.Y:
            psi = _apply_1q(psi, q, _SDG)
        psi = _apply_1q(psi, q, _HADAMARD)
    return StateVector(state.n_qubits, psi)


def sample_counts(state: StateVector, shots: int, rng: np.random.Generator) -> np.ndarray:
    """Histogram of ``shots`` computational-basis outcomes."""
    probs = state.probabilities()
    probs = probs / probs.sum()
    return rng.multinomial(shots, probs)


def group_rng(seed: int, stream: int) -> np.random.Generator:
    """PCG64 generator keyed by ``SeedSequence((seed, stream))``."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence((seed, stream))))


def estimate_from_state(
    state: StateVector, h: PauliSum, shots: int, seed: int
) -> float:
    if shots < 1:
        raise ValueError(f"shots must be >= 1, got {shots}")
    if state.n_qubits != h.n_qubits:
        raise ValueError(f"state has {state.n_qubits} qubits, observable {h.n_qubits}")
    groups = measurement_groups(h)
    idx = np.arange(1 << state.n_qubits, dtype=np.int64)
    energy = h.constant
    for group in groups:
        counts = sample_counts(
            rotate_to_basis(state, group.basis), shots, group_rng(seed, group.stream)
        )
        for term in group.terms:
            support = sum(1 << q for q in term.support)
            eigenvalues = np.where(np.bitwise_count(idx & support) & 1, -1.0, 1.0)
            energy += term.coefficient * float(np.dot(counts, eigenvalues)) / shots
    return float(energy)


def estimate_energy_shots(
    circuit: Circuit,
    params: Sequence[float],
    h: PauliSum,
    shots: int,
    seed: int,
) -> float:
    """Shot-based energy: every measurement group gets the full ``shots`` budget."""
    if shots < 1:
        raise ValueError(f"shots must be >= 1, got {shots}")
    measurement_groups(h)
    return estimate_from_state(run_circuit(circuit, params), h, shots, seed)
