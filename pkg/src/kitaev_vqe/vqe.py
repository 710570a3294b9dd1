"""Variational energy minimization with restarts, traces and layer scans."""

from __future__ import annotations

import contextlib
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import minimize as scipy_minimize

from kitaev_vqe.ansatz import AnsatzKind, AnsatzSpec
from kitaev_vqe.model import ChainParams, ground_energy
from kitaev_vqe.pauli import PauliSum, jw_hamiltonian
from kitaev_vqe.sim import Circuit, estimate_from_state, expectation, run_circuit

OPTIMIZER_NAME = "COBYLA (scipy.optimize)"
RELATIVE_ERROR_FLOOR = 1e-12
MIN_POLLING_CYCLE = 10


class NonFiniteEnergyError(FloatingPointError):
    """The objective returned NaN or infinity; ``trace`` holds the run so far."""

    def __init__(self, message: str, trace: list[tuple[int, float]]):
        super().__init__(message)
        self.trace = trace


class AllRestartsFailedError(RuntimeError):
    pass


@dataclass(frozen=True)
class OptimizerConfig:
    """Settings shared by every restart.

    ``shots=None`` selects the exact expectation value; an integer selects the
    sampled estimator with that many shots per measurement group.
    """

    max_iterations: int = 5000
    convergence_tol: float = 1e-8
    init_range: tuple[float, float] = (-math.pi, math.pi)
    restarts: int = 10
    seed: int = 0
    shots: int | None = None
    rhobeg: float = 1.0

    def __post_init__(self) -> None:
        if self.restarts < 1:
            raise ValueError(f"restarts must be >= 1, got {self.restarts}")
        if self.max_iterations < 1:
            raise ValueError(f"max_iterations must be >= 1, got {self.max_iterations}")
        if self.shots is not None and self.shots < 1:
            raise ValueError(f"shots must be >= 1, got {self.shots}")
        lo, hi = self.init_range
        if not lo < hi:
            raise ValueError(f"init_range must satisfy lo < hi, got {self.init_range}")

    @property
    def estimator(self) -> str:
        return "exact" if self.shots is None else f"shots={self.shots}"


@dataclass
class VqeRun:
    energy_trace: list[tuple[int, float]]
    final_params: np.ndarray
    final_energy: float
    restart_index: int
    converged: bool
    optimizer: str = OPTIMIZER_NAME
    evaluated_energies: list[float] = field(default_factory=list, repr=False)

    @property
    def n_evaluations(self) -> int:
        return len(self.evaluated_energies)


class _Converged(Exception):
    pass


class _Objective:
    """Energy function that records every evaluation and applies the stop rule.

    A polling cycle is two rebuilds of COBYLA's interpolation set,
    ``2 * (n_params + 1)`` evaluations, but at least ``MIN_POLLING_CYCLE``;
    a single set is too short because rejected trial steps routinely come in
    runs.  The run stops once the best energy improved by less than ``tol``
    across the most recent full cycle.
    """

    def __init__(self, h: PauliSum, circuit: Circuit, config: OptimizerConfig, restart: int):
        self.h = h
        self.circuit = circuit
        self.config = config
        self.restart = restart
        self.cycle = max(2 * (circuit.n_params + 1), MIN_POLLING_CYCLE)
        self.energies: list[float] = []
        self.best_trace: list[float] = []
        self.best_x: np.ndarray | None = None

    def energy(self, x: np.ndarray) -> float:
        state = run_circuit(self.circuit, x)
        if self.config.shots is None:
            return expectation(state, self.h)
        seed = int(
            np.random.SeedSequence(
                (self.config.seed, self.restart, len(self.energies))
            ).generate_state(1)[0]
        )
        return estimate_from_state(state, self.h, self.config.shots, seed)

    def __call__(self, x: np.ndarray) -> float:
        value = self.energy(x)
        if not math.isfinite(value):
            raise NonFiniteEnergyError(
                f"non-finite energy {value} at evaluation {len(self.energies)}",
                self.trace(),
            )
        self.energies.append(value)
        if not self.best_trace or value < self.best_trace[-1]:
            self.best_x = np.array(x, dtype=float)
            self.best_trace.append(value)
        else:
            self.best_trace.append(self.best_trace[-1])
        k = len(self.best_trace)
        if k >= 2 * self.cycle and k % self.cycle == 0:
            if self.best_trace[-1 - self.cycle] - self.best_trace[-1] < self.config.convergence_tol:
                raise _Converged
        return value

    def trace(self) -> list[tuple[int, float]]:
        return list(enumerate(self.best_trace))


@contextlib.contextmanager
def _silenced_fortran_stderr():
    """Hide f2py's callback-failure banner when the stop rule unwinds COBYLA."""
    fd = 2
    try:
        sys.stderr.flush()
        saved = os.dup(fd)
    except OSError:
        yield
        return
    try:
        with open(os.devnull, "w") as devnull:
            os.dup2(devnull.fileno(), fd)
            yield
    finally:
        os.dup2(saved, fd)
        os.close(saved)


def initial_point(config: OptimizerConfig, n_params: int, restart: int) -> np.ndarray:
    rng = np.random.default_rng((config.seed, restart))
    lo, hi = config.init_range
    return rng.uniform(lo, hi, n_params)


def minimize(
    h: PauliSum, circuit: Circuit, config: OptimizerConfig, restart_index: int = 0
) -> VqeRun:
    """One COBYLA run from the seeded start of ``restart_index``."""
    if h.n_qubits != circuit.n_qubits:
        raise ValueError(
            f"observable has {h.n_qubits} qubits, circuit has {circuit.n_qubits}"
        )
    objective = _Objective(h, circuit, config, restart_index)
    x0 = initial_point(config, circuit.n_params, restart_index)
    if circuit.n_params == 0:
        objective(x0)
        converged = True
    else:
        try:
            with _silenced_fortran_stderr():
                result = scipy_minimize(
                    objective,
                    x0,
                    method="COBYLA",
                    tol=config.convergence_tol,
                    options={"maxiter": config.max_iterations, "rhobeg": config.rhobeg},
                )
            converged = bool(result.success)
        except _Converged:
            converged = True
    return VqeRun(
        energy_trace=objective.trace(),
        final_params=objective.best_x,
        final_energy=objective.best_trace[-1],
        restart_index=restart_index,
        converged=converged,
        evaluated_energies=objective.energies,
    )


def multi_restart(
    h: PauliSum, circuit: Circuit, config: OptimizerConfig
) -> tuple[VqeRun, list[VqeRun]]:
    """Best of ``config.restarts`` independent runs; failed restarts are skipped."""
    runs: list[VqeRun] = []
    errors: list[Exception] = []
    for restart in range(config.restarts):
        try:
            runs.append(minimize(h, circuit, config, restart))
        except NonFiniteEnergyError as exc:
            errors.append(exc)
    if not runs:
        raise AllRestartsFailedError(f"all {config.restarts} restarts failed: {errors[0]}")
    best = min(runs, key=lambda r: (r.final_energy, r.restart_index))
    return best, runs


def relative_error(e: float, e_exact: float) -> float:
    return abs(e - e_exact) / max(abs(e_exact), RELATIVE_ERROR_FLOOR)


@dataclass(frozen=True)
class LayerScanRow:
    layers: int
    parameter_count: int
    energy: float
    exact_energy: float
    relative_error: float


def layer_scan(
    kind: AnsatzKind,
    params: ChainParams,
    layer_range: Iterable[int],
    config: OptimizerConfig,
) -> list[LayerScanRow]:
    layers = sorted(set(layer_range))
    if not layers:
        raise ValueError("layer range is empty")
    if layers[0] < 1:
        raise ValueError(f"layer counts must be >= 1, got {layers[0]}")
    h = jw_hamiltonian(params)
    exact, _ = ground_energy(params)
    rows = []
    for count in layers:
        spec = AnsatzSpec(kind, params.n, count)
        best, _ = multi_restart(h, spec.build(params), config)
        rows.append(
            LayerScanRow(
                count,
                spec.parameter_count,
                best.final_energy,
                exact,
                relative_error(best.final_energy, exact),
            )
        )
    return rows


def format_float(x: float) -> str:
    return repr(float(x))


def write_trace(run: VqeRun, path: str | Path) -> None:
    lines = ["iteration,energy"]
    lines.extend(f"{i},{format_float(e)}" for i, e in run.energy_trace)
    Path(path).write_text("\n".join(lines) + "\n")


def write_evaluations(runs: Sequence[VqeRun], path: str | Path) -> None:
    """Every objective evaluation of every restart, in call order."""
    lines = ["restart,evaluation,energy"]
    for run in runs:
        lines.extend(
            f"{run.restart_index},{k},{format_float(e)}"
            for k, e in enumerate(run.evaluated_energies)
        )
    Path(path).write_text("\n".join(lines) + "\n")


def write_summary(fields: dict[str, object], path: str | Path) -> None:
    """``key: value`` lines in insertion order; sequences are comma separated."""
    lines = []
    for key, value in fields.items():
        if isinstance(value, float):
            value = format_float(value)
        elif isinstance(value, (list, tuple, np.ndarray)):
            value = ",".join(
                format_float(v) if isinstance(v, (float, np.floating)) else str(v)
                for v in value
            )
        lines.append(f"{key}: {value}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_summary(path: str | Path) -> dict[str, str]:
    out = {}
    for line in Path(path).read_text().splitlines():
        if line.strip():
            key, _, value = line.partition(": ")
            out[key] = value
    return out


def run_summary(
    run: VqeRun,
    *,
    ansatz: str,
    layers: int,
    chain: ChainParams,
    config: OptimizerConfig,
    exact_energy: float,
    parameter_count: int,
) -> dict[str, object]:
    return {
        "ansatz": ansatz,
        "layers": layers,
        "parameter_count": parameter_count,
        "n": chain.n,
        "t": chain.t,
        "delta": chain.delta,
        "mu": chain.mu,
        "final_energy": run.final_energy,
        "exact_energy": exact_energy,
        "relative_error": relative_error(run.final_energy, exact_energy),
        "restart_index": run.restart_index,
        "converged": run.converged,
        "evaluations": run.n_evaluations,
        "seed": config.seed,
        "restarts": config.restarts,
        "max_iterations": config.max_iterations,
        "convergence_tol": config.convergence_tol,
        "estimator": config.estimator,
        "optimizer": run.optimizer,
        "final_params": list(run.final_params),
    }


def evaluate(h: PauliSum, circuit: Circuit, params: Sequence[float]) -> float:
    return expectation(run_circuit(circuit, params), h)
