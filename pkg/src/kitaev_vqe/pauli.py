"""Pauli strings, the Jordan-Wigner spin Hamiltonian and dense realizations.

Qubit ``q`` carries site ``q + 1`` and is the ``q``-th least significant bit
of a basis-state label, so labels coincide with the configuration integers of
:mod:`kitaev_vqe.model`.  Qubit ``|1>`` is an occupied site (spin up) and
``|0>`` an empty one (spin down), hence ``n_i = (1 - Z_i) / 2``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from kitaev_vqe.model import ChainParams, Parity, diagonalize, sector_eigenvalues

MERGE_TOLERANCE = 1e-14
HERMITIAN_TOLERANCE = 1e-12
MAX_DENSE_QUBITS = 14

_SINGLE = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}

# (a, b) -> (phase, c) with a @ b = phase * c
_PRODUCT = {
    ("X", "Y"): (1j, "Z"), ("Y", "X"): (-1j, "Z"),
    ("Y", "Z"): (1j, "X"), ("Z", "Y"): (-1j, "X"),
    ("Z", "X"): (1j, "Y"), ("X", "Z"): (-1j, "Y"),
}


class DenseLimitError(MemoryError):
    """Requested dense matrix would exceed the supported size."""


@dataclass(frozen=True)
class PauliString:
    """``coefficient * P_0 P_1 ... P_{n-1}`` with ``axes[q]`` acting on qubit ``q``."""

    axes: str
    coefficient: complex = 1.0

    def __post_init__(self) -> None:
        if not self.axes or set(self.axes) - set("IXYZ"):
            raise ValueError(f"invalid Pauli axes {self.axes!r}")

    @property
    def n_qubits(self) -> int:
        return len(self.axes)

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(q for q, a in enumerate(self.axes) if a != "I")

    @property
    def is_identity(self) -> bool:
        return not self.support

    def masks(self) -> tuple[int, int, int]:
        """Bit masks of qubits carrying X, Y and Z."""
        x = y = z = 0
        for q, a in enumerate(self.axes):
            if a == "X":
                x |= 1 << q
            elif a == "Y":
                y |= 1 << q
            elif a == "Z":
                z |= 1 << q
        return x, y, z

    def label(self) -> str:
        return "".join(f"{a}{q}" for q, a in enumerate(self.axes) if a != "I") or "I"

    def __mul__(self, other):
        if isinstance(other, PauliString):
            if other.n_qubits != self.n_qubits:
                raise ValueError("qubit counts differ")
            phase = complex(self.coefficient * other.coefficient)
            axes = []
            for a, b in zip(self.axes, other.axes):
                if a == "I":
                    axes.append(b)
                elif b == "I":
                    axes.append(a)
                elif a == b:
                    axes.append("I")
                else:
                    p, c = _PRODUCT[(a, b)]
                    phase *= p
                    axes.append(c)
            return PauliString("".join(axes), phase)
        return PauliString(self.axes, self.coefficient * other)

    __rmul__ = __mul__


def _sort_key(axes: str) -> tuple:
    support = [q for q, a in enumerate(axes) if a != "I"]
    return (len(support), support, [axes[q] for q in support])


@dataclass(frozen=True)
class PauliSum:
    """Real constant plus merged, non-identity Pauli terms."""

    n_qubits: int
    constant: float
    terms: tuple[PauliString, ...]

    @classmethod
    def from_terms(
        cls,
        n_qubits: int,
        terms: Iterable[PauliString | tuple[str, complex]] = (),
        constant: complex = 0.0,
    ) -> "PauliSum":
        """Merge terms with equal axes and drop those below ``MERGE_TOLERANCE``.

        Identity terms are folded into the constant.  Raises ``ValueError`` if
        the merged operator is not Hermitian.
        """
        merged: dict[str, complex] = {}
        const = complex(constant)
        for term in terms:
            if not isinstance(term, PauliString):
                term = PauliString(*term)
            if term.n_qubits != n_qubits:
                raise ValueError(
                    f"term {term.axes!r} has {term.n_qubits} qubits, expected {n_qubits}"
                )
            if term.is_identity:
                const += term.coefficient
            else:
                merged[term.axes] = merged.get(term.axes, 0.0) + term.coefficient
        kept = []
        for axes in sorted(merged, key=_sort_key):
            coeff = merged[axes]
            if abs(coeff) <= MERGE_TOLERANCE:
                continue
            if abs(coeff.imag) > HERMITIAN_TOLERANCE:
                raise ValueError(f"term {axes!r} has non-real coefficient {coeff}")
            kept.append(PauliString(axes, float(coeff.real)))
        if abs(const.imag) > HERMITIAN_TOLERANCE:
            raise ValueError(f"constant {const} is not real")
        return cls(n_qubits, float(const.real) + 0.0, tuple(kept))

    def coefficient(self, axes: str) -> float:
        for term in self.terms:
            if term.axes == axes:
                return term.coefficient
        return 0.0

    def __add__(self, other: "PauliSum") -> "PauliSum":
        if not isinstance(other, PauliSum):
            return NotImplemented
        if other.n_qubits != self.n_qubits:
            raise ValueError("qubit counts differ")
        return PauliSum.from_terms(
            self.n_qubits, self.terms + other.terms, self.constant + other.constant
        )

    def __mul__(self, scalar: float) -> "PauliSum":
        return PauliSum.from_terms(
            self.n_qubits, (t * scalar for t in self.terms), self.constant * scalar
        )

    __rmul__ = __mul__

    def __sub__(self, other: "PauliSum") -> "PauliSum":
        return self + (-1.0) * other

    def __str__(self) -> str:
        out = repr(self.constant)
        for term in self.terms:
            c = term.coefficient
            sign = "-" if c < 0 else "+"
            out += f" {sign} {abs(c)!r}·{term.label()}"
        return out

    @classmethod
    def parse(cls, text: str, n_qubits: int) -> "PauliSum":
        """Inverse of ``str()``: ``"-1.5 + 0.5·Z0 - 1.0·Y0Y1"``."""
        tokens = text.strip().split(" ")
        constant = float(tokens[0])
        if len(tokens) % 2 != 1:
            raise ValueError(f"malformed Pauli sum {text!r}")
        terms = []
        for sign, body in zip(tokens[1::2], tokens[2::2]):
            if sign not in "+-" or "·" not in body:
                raise ValueError(f"malformed term {sign} {body!r}")
            coeff_text, label = body.split("·")
            coeff = float(coeff_text) * (-1.0 if sign == "-" else 1.0)
            axes = ["I"] * n_qubits
            for axis, qubit in re.findall(r"([XYZ])(\d+)", label):
                axes[int(qubit)] = axis
            terms.append(PauliString("".join(axes), coeff))
        return cls.from_terms(n_qubits, terms, constant)


def _axes(n: int, ops: dict[int, str]) -> str:
    return "".join(ops.get(q, "I") for q in range(n))


def jw_hamiltonian(params: ChainParams) -> PauliSum:
    """Jordan-Wigner image of the Kitaev chain.

    ``H = -mu*N/2 + (mu/2) sum_i Z_i
    + sum_i [ (t+delta)/2 Y_i Y_{i+1} + (t-delta)/2 X_i X_{i+1} ]``.

    The string operators cancel for nearest-neighbour products, so no
    non-local terms appear.
    """
    n, t, d, mu = params.n, params.t, params.delta, params.mu
    terms = [PauliString(_axes(n, {q: "Z"}), mu / 2) for q in range(n)]
    for q in range(n - 1):
        terms.append(PauliString(_axes(n, {q: "X", q + 1: "X"}), (t - d) / 2))
        terms.append(PauliString(_axes(n, {q: "Y", q + 1: "Y"}), (t + d) / 2))
    return PauliSum.from_terms(n, terms, -mu * n / 2)


@dataclass(frozen=True)
class XYCoefficients:
    """Couplings of ``-h sum S^z + sum [J_y S^y S^y + J_x S^x S^x]``."""

    h: float
    jx: float
    jy: float


def xy_coefficients(params: ChainParams) -> XYCoefficients:
    return XYCoefficients(
        h=params.mu, jx=2 * (params.t - params.delta), jy=2 * (params.t + params.delta)
    )


def apply_pauli_string(term: PauliString, vector: np.ndarray) -> np.ndarray:
    """``term |vector>`` using bit operations; ``vector`` has length ``2**n``."""
    x, y, z = term.masks()
    idx = np.arange(vector.shape[0], dtype=np.int64)
    signs = np.where(np.bitwise_count(idx & (y | z)) & 1, -1.0, 1.0)
    phase = term.coefficient * (1j ** bin(y).count("1"))
    out = np.empty_like(vector, dtype=complex)
    out[idx ^ (x | y)] = phase * signs * vector
    return out


def to_dense(h: PauliSum) -> np.ndarray:
    """Dense ``2^n x 2^n`` matrix; qubit 0 is the least significant factor."""
    if h.n_qubits > MAX_DENSE_QUBITS:
        raise DenseLimitError(
            f"{h.n_qubits} qubits exceeds the dense limit of {MAX_DENSE_QUBITS}"
        )
    dim = 1 << h.n_qubits
    out = h.constant * np.eye(dim, dtype=complex)
    for term in h.terms:
        mat = np.array([[1.0]], dtype=complex)
        for axis in reversed(term.axes):
            mat = np.kron(mat, _SINGLE[axis])
        out += term.coefficient * mat
    return out


def spectra_match(params: ChainParams) -> float:
    """Max deviation between the spin spectrum and the merged sector spectra."""
    if params.n > 12:
        raise ValueError(f"spectra_match supports n <= 12, got {params.n}")
    spin = diagonalize(to_dense(jw_hamiltonian(params))).eigenvalues
    fermion = np.sort(
        np.concatenate([sector_eigenvalues(params, p) for p in Parity])
    )
    return float(np.max(np.abs(spin - fermion)))
