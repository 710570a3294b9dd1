"""Kitaev chain Hamiltonian and parity-resolved exact diagonalization.

Configurations are occupation bitstrings ``(c_1^+)^{a_1} ... (c_N^+)^{a_N}|0>``
with creation operators applied in ascending site order.  A configuration is
stored as an integer whose bit ``i`` is the occupation of site ``i + 1``
(site 1 is the least-significant bit).  Applying ``c_j`` or ``c_j^+`` to such a
state picks up ``(-1)`` to the number of occupied sites with a smaller index.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import sparse

MAX_SITES = 20
TIE_TOLERANCE = 1e-12


class Parity(enum.Enum):
    EVEN = 0
    ODD = 1

    @classmethod
    def of(cls, value: int) -> "Parity":
        return cls(int(value).bit_count() & 1)

    def __str__(self) -> str:
        return self.name.lower()


@dataclass(frozen=True)
class ChainParams:
    """Physical parameters of an ``n``-site Kitaev chain.

    Attributes:
        n: Number of quantum dots (sites).
        t: Nearest-neighbour hopping.
        delta: p-wave pairing amplitude.
        mu: Chemical potential.
    """

    n: int
    t: float
    delta: float
    mu: float

    def __post_init__(self) -> None:
        if not isinstance(self.n, (int, np.integer)) or isinstance(self.n, bool):
            raise ValueError(f"n must be an integer, got {self.n!r}")
        if not 1 <= self.n <= MAX_SITES:
            raise ValueError(f"n must be in [1, {MAX_SITES}], got {self.n}")
        for name in ("t", "delta", "mu"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value!r}")
            object.__setattr__(self, name, float(value))
        object.__setattr__(self, "n", int(self.n))


@dataclass(frozen=True)
class Configuration:
    """Occupation pattern of the chain; ``occupation[i]`` is site ``i + 1``."""

    occupation: tuple[int, ...]

    def __post_init__(self) -> None:
        if any(bit not in (0, 1) for bit in self.occupation):
            raise ValueError(f"occupation bits must be 0 or 1, got {self.occupation}")

    @classmethod
    def from_int(cls, value: int, n: int) -> "Configuration":
        if not 0 <= value < 1 << n:
            raise ValueError(f"{value} does not fit in {n} sites")
        return cls(tuple((value >> i) & 1 for i in range(n)))

    @classmethod
    def from_string(cls, text: str) -> "Configuration":
        """Parse a site-occupation string such as ``"110"`` (site 1 first)."""
        return cls(tuple(int(ch) for ch in text))

    @property
    def n(self) -> int:
        return len(self.occupation)

    @property
    def value(self) -> int:
        return sum(bit << i for i, bit in enumerate(self.occupation))

    @property
    def parity(self) -> Parity:
        return Parity(sum(self.occupation) & 1)

    def __str__(self) -> str:
        return "".join(str(bit) for bit in self.occupation)


@dataclass(frozen=True)
class SectorBasis:
    parity: Parity
    configs: tuple[Configuration, ...]
    index: dict[Configuration, int] = field(repr=False, compare=False)

    @property
    def n(self) -> int:
        return self.configs[0].n

    @property
    def values(self) -> np.ndarray:
        return np.array([c.value for c in self.configs], dtype=np.int64)

    def __len__(self) -> int:
        return len(self.configs)


@dataclass(frozen=True)
class SpectrumResult:
    """Ascending eigenvalues; column ``k`` of ``eigenvectors`` pairs with ``eigenvalues[k]``."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def _check_n(n: int) -> None:
    if not 1 <= n <= MAX_SITES:
        raise ValueError(f"n must be in [1, {MAX_SITES}], got {n}")


def enumerate_sector(n: int, parity: Parity) -> SectorBasis:
    """All ``n``-site configurations of the given fermion parity, ascending."""
    _check_n(n)
    configs = tuple(
        Configuration.from_int(v, n)
        for v in range(1 << n)
        if (v.bit_count() & 1) == parity.value
    )
    return SectorBasis(parity, configs, {c: k for k, c in enumerate(configs)})


def _sign_below(value: int, site: int) -> int:
    return -1 if (value & ((1 << site) - 1)).bit_count() & 1 else 1


def _create(value: int, site: int) -> tuple[int, int] | None:
    if value >> site & 1:
        return None
    return _sign_below(value, site), value | (1 << site)


def _annihilate(value: int, site: int) -> tuple[int, int] | None:
    if not value >> site & 1:
        return None
    return _sign_below(value, site), value & ~(1 << site)


def _apply_word(value: int, word: tuple[tuple[str, int], ...]) -> tuple[int, int] | None:
    """Apply a product of ladder operators, rightmost first."""
    sign = 1
    for op, site in reversed(word):
        step = _create(value, site) if op == "+" else _annihilate(value, site)
        if step is None:
            return None
        s, value = step
        sign *= s
    return sign, value


def _terms_on(n: int, value: int) -> dict[str, dict[int, int]]:
    """H split into hopping, pairing and number parts acting on one configuration.

    Each part maps output configuration to an integer coefficient so the full
    Hamiltonian is ``t * hop + delta * pair - mu * number``.
    """
    parts: dict[str, dict[int, int]] = {"hop": {}, "pair": {}, "number": {}}
    for i in range(n - 1):
        j = i + 1
        words = {
            "hop": ((("+", j), ("-", i)), (("+", i), ("-", j))),
            # (c_j^+ c_i^+)^+ = c_i c_j
            "pair": ((("+", j), ("+", i)), (("-", i), ("-", j))),
        }
        for part, pair in words.items():
            for word in pair:
                out = _apply_word(value, word)
                if out is not None:
                    sign, new = out
                    parts[part][new] = parts[part].get(new, 0) + sign
    occupied = value.bit_count()
    if occupied:
        parts["number"][value] = occupied
    return parts


def apply_hamiltonian(
    params: ChainParams, config: Configuration
) -> list[tuple[Configuration, float]]:
    """Expand ``H|config>`` over configurations.

    Zero amplitudes are dropped and the result is sorted by configuration value.
    """
    if config.n != params.n:
        raise ValueError(f"configuration has {config.n} sites, params have {params.n}")
    parts = _terms_on(params.n, config.value)
    weights = {"hop": params.t, "pair": params.delta, "number": -params.mu}
    amplitudes: dict[int, float] = {}
    for part, entries in parts.items():
        for new, coeff in entries.items():
            amplitudes[new] = amplitudes.get(new, 0.0) + weights[part] * coeff
    return [
        (Configuration.from_int(v, params.n), amp)
        for v, amp in sorted(amplitudes.items())
        if amp != 0.0
    ]


@lru_cache(maxsize=32)
def _unit_matrices(n: int, parity: Parity) -> tuple[sparse.csr_matrix, ...]:
    """Parameter-free hopping, pairing and number matrices for one sector.

    Each is assembled from its lower triangle so it is exactly symmetric.
    """
    values = enumerate_sector(n, parity).values.tolist()
    index = {v: k for k, v in enumerate(values)}
    dim = len(values)
    entries = {key: ([], [], []) for key in ("hop", "pair", "number")}
    for p, value in enumerate(values):
        for part, targets in _terms_on(n, value).items():
            rows, cols, data = entries[part]
            for new, coeff in targets.items():
                q = index[new]
                if q >= p:
                    rows.append(q)
                    cols.append(p)
                    data.append(float(coeff))
    out = []
    for key in ("hop", "pair", "number"):
        rows, cols, data = entries[key]
        lower = sparse.csr_matrix((data, (rows, cols)), shape=(dim, dim))
        out.append((lower + sparse.tril(lower, k=-1).T).tocsr())
    return tuple(out)


def build_sector_matrix(params: ChainParams, basis: SectorBasis) -> np.ndarray:
    """Real symmetric matrix ``<q|H|p>`` over ``basis``."""
    if basis.n != params.n:
        raise ValueError(f"basis is for {basis.n} sites, params have {params.n}")
    hop, pair, number = _unit_matrices(params.n, basis.parity)
    return (params.t * hop + params.delta * pair - params.mu * number).toarray()


def full_matrix(params: ChainParams) -> np.ndarray:
    """Dense ``2^n`` matrix in the configuration-integer basis, both sectors."""
    dim = 1 << params.n
    out = np.zeros((dim, dim))
    for parity in Parity:
        values = enumerate_sector(params.n, parity).values
        out[np.ix_(values, values)] = build_sector_matrix(
            params, enumerate_sector(params.n, parity)
        )
    return out


def diagonalize(matrix: np.ndarray) -> SpectrumResult:
    matrix = np.asarray(matrix)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {matrix.shape}")
    if not np.all(np.isfinite(matrix)):
        raise ValueError("matrix has non-finite entries")
    scale = max(np.abs(matrix).max(initial=0.0), 1.0)
    if np.abs(matrix - matrix.conj().T).max(initial=0.0) > 1e-12 * scale:
        raise ValueError("matrix is not symmetric")
    values, vectors = np.linalg.eigh(matrix)
    return SpectrumResult(values, vectors)


def sector_spectrum(params: ChainParams, parity: Parity) -> SpectrumResult:
    return diagonalize(build_sector_matrix(params, enumerate_sector(params.n, parity)))


@lru_cache(maxsize=1024)
def sector_eigenvalues(params: ChainParams, parity: Parity) -> np.ndarray:
    """Ascending eigenvalues of one parity sector (cached, read-only)."""
    values = np.linalg.eigvalsh(
        build_sector_matrix(params, enumerate_sector(params.n, parity))
    )
    values.setflags(write=False)
    return values


def sector_ground_energy(params: ChainParams, parity: Parity) -> float:
    return float(sector_eigenvalues(params, parity)[0])


def even_odd_gap(params: ChainParams) -> float:
    """``E0(even) - E0(odd)``; vanishes when the ground state is degenerate."""
    return sector_ground_energy(params, Parity.EVEN) - sector_ground_energy(
        params, Parity.ODD
    )


def ground_energy(params: ChainParams) -> tuple[float, Parity]:
    """Lowest energy over both sectors.

    Sector energies within ``TIE_TOLERANCE`` (relative) of each other count as
    a tie, reported as the even sector.
    """
    even = sector_ground_energy(params, Parity.EVEN)
    odd = sector_ground_energy(params, Parity.ODD)
    if odd < even - TIE_TOLERANCE * max(1.0, abs(even)):
        return odd, Parity.ODD
    return even, Parity.EVEN
