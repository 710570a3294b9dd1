import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm
from scipy.stats import chisquare

from kitaev_vqe.ansatz import build_odd
from kitaev_vqe.model import ChainParams
from kitaev_vqe.pauli import PauliSum, jw_hamiltonian, to_dense
from kitaev_vqe.sim import (
    Basis,
    Circuit,
    Gate,
    GateKind,
    StateVector,
    UnsupportedObservableError,
    apply_gate,
    estimate_energy_shots,
    estimate_from_state,
    expectation,
    exp2_matrix,
    group_rng,
    measurement_groups,
    rotate_to_basis,
    rotation_matrix,
    run_circuit,
    sample_counts,
)

PAULI = {
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]]),
    "Z": np.diag([1.0, -1.0]).astype(complex),
}


def random_state(n, rng):
    v = rng.normal(size=2**n) + 1j * rng.normal(size=2**n)
    return StateVector(n, v / np.linalg.norm(v))


def fixed(kind, *qubits, angle=None):
    return Gate(kind, qubits, angle=angle)


def apply(state, *gates):
    circuit = Circuit(state.n_qubits, tuple(gates), 0)
    return run_circuit(circuit, [], initial=state)


def test_rx_pi_on_zero():
    out = apply(StateVector.zero(1), fixed(GateKind.RX, 0, angle=np.pi))
    np.testing.assert_allclose(out.amplitudes, [0, -1j], atol=1e-15)


def test_cnot_flips_target_when_control_set():
    out = apply(StateVector.basis(2, 0b01), fixed(GateKind.CNOT, 0, 1))
    np.testing.assert_array_equal(out.amplitudes, StateVector.basis(2, 0b11).amplitudes)
    out = apply(StateVector.basis(2, 0b10), fixed(GateKind.CNOT, 0, 1))
    np.testing.assert_array_equal(out.amplitudes, StateVector.basis(2, 0b10).amplitudes)


def test_empty_circuit_is_identity():
    state = random_state(3, np.random.default_rng(0))
    np.testing.assert_array_equal(apply(state).amplitudes, state.amplitudes)


@pytest.mark.parametrize("kind", [GateKind.RX, GateKind.RY, GateKind.RZ])
@pytest.mark.parametrize("theta", [0.0, 0.3, -1.7, np.pi])
def test_rotations_are_half_angle_exponentials(kind, theta):
    axis = PAULI[kind.value[-1].upper()]
    np.testing.assert_allclose(rotation_matrix(kind, theta), expm(-0.5j * theta * axis), atol=1e-14)


def test_single_qubit_gate_matches_kron():
    rng = np.random.default_rng(1)
    state = random_state(3, rng)
    u = rotation_matrix(GateKind.RY, 0.9)
    out = apply(state, fixed(GateKind.RY, 1, angle=0.9))
    full = np.kron(np.eye(2), np.kron(u, np.eye(2)))
    np.testing.assert_allclose(out.amplitudes, full @ state.amplitudes, atol=1e-14)


@pytest.mark.parametrize("generator", [(("XX", 0.5), ("YY", -0.25)), (("ZX", 1.0),), (("XY", 0.7),)])
def test_exp2_gate_matches_dense_exponential(generator):
    rng = np.random.default_rng(2)
    state = random_state(3, rng)
    gate = Gate(GateKind.EXP2, (2, 0), angle=0.8, generator=generator)
    terms = []
    for axes, c in generator:
        full = ["I"] * 3
        full[2], full[0] = axes[0], axes[1]
        terms.append(("".join(full), c))
    g = to_dense(PauliSum.from_terms(3, terms))
    out = apply(state, gate)
    np.testing.assert_allclose(out.amplitudes, expm(1j * 0.8 * g) @ state.amplitudes, atol=1e-12)
    u = exp2_matrix(generator, 0.8)
    np.testing.assert_allclose(u.conj().T @ u, np.eye(4), atol=1e-13)


def test_phase_gate_is_global():
    state = random_state(2, np.random.default_rng(3))
    out = apply(state, Gate(GateKind.PHASE, (), angle=0.4))
    np.testing.assert_allclose(out.amplitudes, np.exp(0.4j) * state.amplitudes)


@settings(max_examples=30, deadline=None)
@given(st.floats(-6, 6), st.integers(0, 10_000))
def test_ry_inverse(theta, seed):
    state = random_state(3, np.random.default_rng(seed))
    out = apply(state, fixed(GateKind.RY, 1, angle=theta), fixed(GateKind.RY, 1, angle=-theta))
    assert np.linalg.norm(out.amplitudes - state.amplitudes) < 1e-12


def test_cnot_squared_and_basis_change_cycles():
    state = random_state(3, np.random.default_rng(4))
    out = apply(state, fixed(GateKind.CNOT, 2, 0), fixed(GateKind.CNOT, 2, 0))
    assert np.linalg.norm(out.amplitudes - state.amplitudes) < 1e-12
    block = [fixed(GateKind.H, 1), fixed(GateKind.SDG, 1), fixed(GateKind.SDG, 1), fixed(GateKind.H, 1)]
    out = apply(state, *block, *block)
    assert np.linalg.norm(out.amplitudes - state.amplitudes) < 1e-12


def test_norm_preserved_over_many_random_gates():
    rng = np.random.default_rng(7)
    n = 4
    psi = StateVector.zero(n).amplitudes
    kinds = [GateKind.RX, GateKind.RY, GateKind.RZ, GateKind.H, GateKind.SDG, GateKind.CNOT, GateKind.EXP2]
    for _ in range(10_000):
        kind = kinds[rng.integers(len(kinds))]
        if kind is GateKind.CNOT:
            gate = Gate(kind, tuple(int(q) for q in rng.choice(n, 2, replace=False)))
        elif kind is GateKind.EXP2:
            gate = Gate(kind, tuple(int(q) for q in rng.choice(n, 2, replace=False)),
                        angle=float(rng.normal()), generator=(("XX", 0.5), ("YY", 0.3)))
        elif kind in (GateKind.H, GateKind.SDG):
            gate = Gate(kind, (int(rng.integers(n)),))
        else:
            gate = Gate(kind, (int(rng.integers(n)),), angle=float(rng.uniform(-np.pi, np.pi)))
        psi = apply_gate(psi, n, gate)
    assert abs(np.linalg.norm(psi) - 1.0) < 1e-8


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(kind=GateKind.CNOT, qubits=(1, 1)),
        dict(kind=GateKind.RX, qubits=(0,)),
        dict(kind=GateKind.RX, qubits=(0,), angle=0.1, slot=0),
        dict(kind=GateKind.H, qubits=(0,), angle=0.1),
        dict(kind=GateKind.RY, qubits=(0, 1), angle=0.1),
    ],
)
def test_gate_validation(kwargs):
    with pytest.raises(ValueError):
        Gate(**kwargs)


def test_circuit_validation():
    with pytest.raises(ValueError):
        Circuit(2, (Gate(GateKind.RX, (2,), angle=0.1),), 0)
    with pytest.raises(ValueError):
        Circuit(2, (Gate(GateKind.RX, (0,), slot=0),), 2)
    circuit = Circuit(1, (Gate(GateKind.RX, (0,), slot=0),), 1)
    with pytest.raises(ValueError):
        run_circuit(circuit, [0.1, 0.2])


def test_expectation_examples():
    assert expectation(StateVector.zero(1), PauliSum.from_terms(1, [("Z", 1.0)])) == 1.0
    bell = StateVector(2, np.array([1, 0, 0, 1]) / np.sqrt(2))
    assert expectation(bell, PauliSum.from_terms(2, [("XX", 1.0)])) == pytest.approx(1.0)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 5), st.floats(-2, 2), st.floats(-2, 2), st.integers(0, 10_000))
def test_expectation_matches_dense_and_is_linear(n, a, b, seed):
    rng = np.random.default_rng(seed)
    state = random_state(n, rng)
    h1 = jw_hamiltonian(ChainParams(n, *rng.uniform(-2, 2, 3)))
    h2 = jw_hamiltonian(ChainParams(n, *rng.uniform(-2, 2, 3)))
    dense = to_dense(h1)
    ref = np.vdot(state.amplitudes, dense @ state.amplitudes).real
    assert expectation(state, h1) == pytest.approx(ref, abs=1e-10)
    combo = expectation(state, a * h1 + b * h2)
    assert combo == pytest.approx(a * expectation(state, h1) + b * expectation(state, h2), abs=1e-10)


def test_measurement_group_counts():
    assert [g.basis for g in measurement_groups(jw_hamiltonian(ChainParams(3, 1, 1, 1)))] == [Basis.Z, Basis.Y]
    assert len(measurement_groups(jw_hamiltonian(ChainParams(3, -1, 0.4, 0.7)))) == 3
    assert measurement_groups(PauliSum.from_terms(3, [], 2.5)) == []


def test_unsupported_term_rejected():
    with pytest.raises(UnsupportedObservableError):
        measurement_groups(PauliSum.from_terms(2, [("XY", 1.0)]))


@pytest.mark.parametrize("basis,axis", [(Basis.X, "X"), (Basis.Y, "Y")])
def test_basis_rotation_diagonalizes_axis(basis, axis):
    state = random_state(1, np.random.default_rng(9))
    rotated = rotate_to_basis(state, basis)
    p = rotated.probabilities()
    ref = np.vdot(state.amplitudes, PAULI[axis] @ state.amplitudes).real
    assert p[0] - p[1] == pytest.approx(ref, abs=1e-12)


def test_constant_observable_is_exact():
    h = PauliSum.from_terms(2, [], -3.25)
    circuit = build_odd(2, 1)
    assert estimate_energy_shots(circuit, np.ones(4), h, 10, seed=1) == -3.25


def test_shot_estimate_deterministic():
    h = jw_hamiltonian(ChainParams(4, -1, 0.4, 0.7))
    circuit = build_odd(4, 1)
    params = np.linspace(-1, 1, 8)
    a = estimate_energy_shots(circuit, params, h, 500, seed=11)
    b = estimate_energy_shots(circuit, params, h, 500, seed=11)
    assert a == b
    assert a != estimate_energy_shots(circuit, params, h, 500, seed=12)


def _shot_sigma(state, h, shots):
    """Standard deviation of the estimator from exact outcome probabilities."""
    idx = np.arange(1 << state.n_qubits)
    var = 0.0
    for group in measurement_groups(h):
        p = rotate_to_basis(state, group.basis).probabilities()
        values = np.zeros(len(idx))
        for term in group.terms:
            support = sum(1 << q for q in term.support)
            values += term.coefficient * np.array([1 - 2 * (bin(i & support).count("1") & 1) for i in idx])
        var += (p @ values**2 - (p @ values) ** 2) / shots
    return np.sqrt(var)


def test_shot_estimate_converges_to_expectation():
    rng = np.random.default_rng(21)
    h = jw_hamiltonian(ChainParams(4, -1, 0.4, 0.7))
    state = random_state(4, rng)
    shots = 100_000
    est = estimate_from_state(state, h, shots, seed=5)
    assert abs(est - expectation(state, h)) < 5 * _shot_sigma(state, h, shots)


def test_sampled_frequencies_chi_square():
    rng = np.random.default_rng(33)
    for trial in range(5):
        state = random_state(4, rng)
        shots = 100_000
        counts = sample_counts(state, shots, group_rng(trial, 0))
        assert counts.sum() == shots
        expected = state.probabilities() * shots
        assert chisquare(counts, expected).pvalue > 1e-3


def test_shot_noise_scaling():
    h = jw_hamiltonian(ChainParams(4, -1, 0.4, 0.7))
    circuit = build_odd(4, 1)
    params = np.random.default_rng(3).uniform(-np.pi, np.pi, circuit.n_params)
    sd = {
        shots: np.std([estimate_energy_shots(circuit, params, h, shots, seed=s) for s in range(50)], ddof=1)
        for shots in (1000, 30_000)
    }
    ratio = sd[1000] / sd[30_000]
    assert np.sqrt(30) / 2 <= ratio <= 2 * np.sqrt(30)


def test_optimized_analytic_point_circuit_reaches_ground():
    from kitaev_vqe.vqe import OptimizerConfig, multi_restart

    h = jw_hamiltonian(ChainParams(5, -1, -1, 0))
    best, _ = multi_restart(h, build_odd(5, 1), OptimizerConfig(restarts=3))
    assert expectation(run_circuit(build_odd(5, 1), best.final_params), h) == pytest.approx(-4.0, abs=4e-3)
