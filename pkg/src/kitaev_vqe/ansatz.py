"""Variational circuits: Even, Odd, EfficientSU2 and the Hamiltonian variational ansatz."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from kitaev_vqe.model import ChainParams, Parity
from kitaev_vqe.sim import Circuit, Gate, GateKind, StateVector


class AnsatzKind(str, enum.Enum):
    EVEN = "even"
    ODD = "odd"
    SU2 = "su2"
    HVA = "hva"

    @classmethod
    def parse(cls, name: str) -> "AnsatzKind":
        aliases = {"efficientsu2": "su2", "efficient_su2": "su2"}
        key = aliases.get(name.lower(), name.lower())
        try:
            return cls(key)
        except ValueError:
            choices = ", ".join(k.value for k in cls)
            raise ValueError(f"unknown ansatz {name!r} (choose from {choices})") from None


@dataclass(frozen=True)
class AnsatzSpec:
    kind: AnsatzKind
    n_qubits: int
    layers: int

    def __post_init__(self) -> None:
        if self.n_qubits < 2:
            raise ValueError(f"ansatz needs n >= 2, got {self.n_qubits}")
        if self.layers < 1:
            raise ValueError(f"layers must be >= 1, got {self.layers}")

    @property
    def parameter_count(self) -> int:
        return parameter_count(self.kind, self.n_qubits, self.layers)

    def build(self, params: ChainParams | None = None) -> Circuit:
        if self.kind is AnsatzKind.HVA:
            if params is None or params.n != self.n_qubits:
                raise ValueError("HVA needs chain parameters with matching n")
            return build_hva(params, self.layers)
        builder = {
            AnsatzKind.EVEN: build_even,
            AnsatzKind.ODD: build_odd,
            AnsatzKind.SU2: build_su2,
        }[self.kind]
        return builder(self.n_qubits, self.layers)


def parameter_count(kind: AnsatzKind, n: int, layers: int) -> int:
    return {
        AnsatzKind.EVEN: layers * (n + 1),
        AnsatzKind.ODD: layers * 2 * n,
        AnsatzKind.SU2: (layers + 1) * 2 * n,
        AnsatzKind.HVA: 3 * layers,
    }[kind]


def _check_sizes(n: int, layers: int) -> None:
    if n < 2:
        raise ValueError(f"ansatz needs n >= 2 qubits, got {n}")
    if layers < 1:
        raise ValueError(f"layers must be >= 1, got {layers}")


def _cnot_ladders(n: int) -> list[Gate]:
    forward = [Gate(GateKind.CNOT, (i, i + 1)) for i in range(n - 1)]
    reverse = [Gate(GateKind.CNOT, (i + 1, i)) for i in reversed(range(n - 1))]
    return forward + reverse


def build_even(n: int, layers: int = 1, axis: str = "y") -> Circuit:
    """Rotation on every qubit, CNOT ladders both ways, then RZ on qubit 0.

    ``axis`` selects the leading rotation.  With ``"y"`` the real product
    state spreads over the even configurations after the ladders; ``"x"``
    gives the RX variant, whose single-layer states have vanishing bond
    correlations.
    """
    _check_sizes(n, layers)
    kind = {"x": GateKind.RX, "y": GateKind.RY}[axis.lower()]
    gates: list[Gate] = []
    slot = 0
    for _ in range(layers):
        for q in range(n):
            gates.append(Gate(kind, (q,), slot=slot))
            slot += 1
        gates.extend(_cnot_ladders(n))
        gates.append(Gate(GateKind.RZ, (0,), slot=slot))
        slot += 1
    return Circuit(n, tuple(gates), slot)


def build_odd(n: int, layers: int = 1) -> Circuit:
    _check_sizes(n, layers)
    gates: list[Gate] = []
    slot = 0
    for _ in range(layers):
        for q in range(n):
            gates.append(Gate(GateKind.RY, (q,), slot=slot))
            slot += 1
        gates.extend(_cnot_ladders(n))
        for q in range(n):
            gates.append(Gate(GateKind.RZ, (q,), slot=slot))
            slot += 1
    return Circuit(n, tuple(gates), slot)


def build_su2(n: int, reps: int = 1) -> Circuit:
    """EfficientSU2 with RY/RZ rotation blocks and linear CNOT entanglement.

    A final rotation block follows the last entangler, giving ``(reps + 1) * 2n``
    parameters.
    """
    _check_sizes(n, reps)
    gates: list[Gate] = []
    slot = 0

    def rotation_block() -> None:
        nonlocal slot
        for q in range(n):
            gates.append(Gate(GateKind.RY, (q,), slot=slot))
            gates.append(Gate(GateKind.RZ, (q,), slot=slot + 1))
            slot += 2

    rotation_block()
    for _ in range(reps):
        gates.extend(Gate(GateKind.CNOT, (i, i + 1)) for i in range(n - 1))
        rotation_block()
    return Circuit(n, tuple(gates), slot)


def _trotter_bonds(
    n: int, generator: tuple[tuple[str, float], ...], slot: int
) -> list[Gate]:
    """Symmetric split ``A/2, B, A/2`` over even-start (A) and odd-start (B) bonds."""
    even = [i for i in range(n - 1) if i % 2 == 0]
    odd = [i for i in range(n - 1) if i % 2 == 1]

    def sweep(bonds: list[int], scale: float) -> list[Gate]:
        return [
            Gate(GateKind.EXP2, (i, i + 1), slot=slot, scale=scale, generator=generator)
            for i in bonds
        ]

    return sweep(even, 0.5) + sweep(odd, 1.0) + sweep(even, 0.5)


def build_hva(params: ChainParams, layers: int = 1) -> Circuit:
    """Hamiltonian variational ansatz ``prod_k U_t U_delta U_mu`` on ``|0...0>``.

    Per layer the slots are ``(theta_t, theta_delta, theta_mu)``.  ``U_mu`` is
    exact (RZ on each qubit plus the global phase of the constant); the bond
    sums of ``U_t`` and ``U_delta`` use the second-order split.
    """
    n = params.n
    _check_sizes(n, layers)
    hop = (("XX", params.t / 2), ("YY", params.t / 2))
    pair = (("XX", -params.delta / 2), ("YY", params.delta / 2))
    gates: list[Gate] = []
    for k in range(layers):
        s_t, s_d, s_mu = 3 * k, 3 * k + 1, 3 * k + 2
        # exp(i theta (mu/2) Z) = RZ(-mu theta); exp(i theta (-mu n / 2)) is a phase
        gates.extend(
            Gate(GateKind.RZ, (q,), slot=s_mu, scale=-params.mu) for q in range(n)
        )
        gates.append(Gate(GateKind.PHASE, (), slot=s_mu, scale=-params.mu * n / 2))
        gates.extend(_trotter_bonds(n, pair, s_d))
        gates.extend(_trotter_bonds(n, hop, s_t))
    return Circuit(n, tuple(gates), 3 * layers)


def parity_leakage(state: StateVector, parity: Parity) -> float:
    """Population outside the requested fermion-parity sector."""
    idx = np.arange(1 << state.n_qubits, dtype=np.int64)
    outside = (np.bitwise_count(idx) & 1) != parity.value
    return float(state.probabilities()[outside].sum())
