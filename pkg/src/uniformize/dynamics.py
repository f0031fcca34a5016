"""
Dynamics - Nonlinear mean-field integrators and linear sector propagators.

Nonlinear flows (Hartree, quantum Vlasov, classical Vlasov) use fixed-step
classic Runge-Kutta with conservation monitoring. Linear flows on particle
sectors use exact matrix exponentials.
"""
import csv
import logging
from pathlib import Path
from typing import Callable, List, Optional, Sequence, Union

import numpy as np

from .errors import DimensionError, NumericalGuardError
from .hamiltonian_algebra import (
    HamiltonianFunctionalSpec,
    StateDensity,
    classical_bracket_functionals,
    derivative_tensor,
    gamma_value,
)
from .tensor_core import Ket, Operator, expm_propagator

logger = logging.getLogger(__name__)

STEP_TOLERANCE = 1e-9
DEFAULT_NORM_TOLERANCE = 1e-6


class TimeGrid:
    """
    Uniform time grid t0, t0 + dt, ..., t1 storing every `store_every`-th step.
    """

    def __init__(self, t0: float, t1: float, dt: float, store_every: int = 1):
        if not all(np.isfinite([t0, t1, dt])):
            raise ValueError("Time grid bounds and step must be finite")
        if dt <= 0:
            raise ValueError("Time step dt must be positive")
        if t1 < t0:
            raise ValueError("Time grid needs t1 >= t0")
        if store_every < 1:
            raise ValueError("store_every must be at least 1")
        ratio = (t1 - t0) / dt
        steps = int(round(ratio))
        if abs(ratio - steps) > STEP_TOLERANCE:
            raise ValueError(f"(t1 - t0)/dt = {ratio} is not an integer number of steps")
        self.t0 = float(t0)
        self.t1 = float(t1)
        self.dt = float(dt)
        self.store_every = int(store_every)
        self.steps = steps

    def time(self, k: int) -> float:
        return self.t0 + k * self.dt

    def is_stored(self, k: int) -> bool:
        return k % self.store_every == 0 or k == self.steps

    @property
    def stored_times(self) -> List[float]:
        return [self.time(k) for k in range(self.steps + 1) if self.is_stored(k)]

    def __repr__(self) -> str:
        return f"TimeGrid(t0={self.t0}, t1={self.t1}, dt={self.dt}, store_every={self.store_every})"


def _fmt(value: float) -> str:
    return format(float(value), ".17g")


class Trajectory:
    """
    Stored states of an integration with their conserved-quantity records.

    `norms` holds the J-norm psi^* psi for ket trajectories and the mass
    <rho, I> for density trajectories; `gammas` holds gamma(rho(t)) or,
    for linear sector evolution, the energy expectation.
    """

    def __init__(self, kind: str, times: Sequence[float], states: Sequence[np.ndarray],
                 norms: Sequence[float], gammas: Sequence[float], metadata: Optional[dict] = None):
        if not len(times) == len(states) == len(norms) == len(gammas):
            raise ValueError("Trajectory records must have equal lengths")
        shapes = {np.shape(s) for s in states}
        if len(shapes) > 1:
            raise DimensionError("Trajectory states must share one shape")
        self.kind = kind
        self.times = [float(t) for t in times]
        self.states = [np.asarray(s) for s in states]
        self.norms = [float(v) for v in norms]
        self.gammas = [float(v) for v in gammas]
        self.metadata = dict(metadata or {})

    def __len__(self) -> int:
        return len(self.times)

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    def max_norm_drift(self) -> float:
        return max(abs(v - self.norms[0]) for v in self.norms) if self.norms else 0.0

    def max_gamma_drift(self) -> float:
        return max(abs(v - self.gammas[0]) for v in self.gammas) if self.gammas else 0.0

    def columns(self) -> List[str]:
        if self.kind == "classical":
            return ["t", "mass", "gamma"]
        names = ["t"]
        first = self.states[0] if self.states else np.zeros(0)
        if first.ndim == 1:
            for k in range(first.shape[0]):
                names += [f"re_{k}", f"im_{k}"]
            return names + ["j_norm", "gamma"]
        for i in range(first.shape[0]):
            for j in range(first.shape[1]):
                names += [f"re_{i}_{j}", f"im_{i}_{j}"]
        return names + ["mass", "gamma"]

    def rows(self) -> List[List[str]]:
        rows = []
        for t, state, norm, gamma in zip(self.times, self.states, self.norms, self.gammas):
            row = [_fmt(t)]
            if self.kind != "classical":
                for value in np.asarray(state).reshape(-1):
                    row += [_fmt(value.real), _fmt(value.imag)]
            rows.append(row + [_fmt(norm), _fmt(gamma)])
        return rows

    def to_csv(self, filepath: Union[str, Path]):
        """
        Write the trajectory as CSV with 17 significant digits.

        Args:
            filepath: Path to output CSV file
        """
        with open(filepath, "w", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(self.columns())
            writer.writerows(self.rows())

    def __repr__(self) -> str:
        return f"Trajectory(kind={self.kind}, points={len(self)})"


def _rk4_step(f: Callable[[float, np.ndarray], np.ndarray], t: float, y: np.ndarray, dt: float) -> np.ndarray:
    k1 = f(t, y)
    k2 = f(t + dt / 2, y + dt / 2 * k1)
    k3 = f(t + dt / 2, y + dt / 2 * k2)
    k4 = f(t + dt, y + dt * k3)
    return y + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


def _check_drift(name: str, drift: float, scale: float, tolerance: float):
    bound = tolerance * max(1.0, abs(scale))
    if drift > bound:
        raise NumericalGuardError(
            f"{name} drifted by {drift:.3e} (bound {bound:.3e}); reduce dt"
        )
    if drift > 0.1 * bound:
        logger.warning("%s drift %.3e is within a factor 10 of its bound", name, drift)


def _quantum_spec(spec: HamiltonianFunctionalSpec):
    if spec.realization.kind != "quantum":
        raise DimensionError("This integrator needs a quantum realization")
    return spec.realization


def _ket_amplitudes(psi, d: int) -> np.ndarray:
    amplitudes = psi.amplitudes if isinstance(psi, Ket) else np.asarray(psi, dtype=complex).reshape(-1)
    if amplitudes.shape[0] != d:
        raise DimensionError(f"Initial ket has length {amplitudes.shape[0]}, expected {d}")
    if not np.all(np.isfinite(amplitudes)):
        raise ValueError("Initial ket must be finite")
    return amplitudes.astype(complex)


def hartree_evolve(
    spec: HamiltonianFunctionalSpec,
    psi0: Union[Ket, np.ndarray],
    grid: TimeGrid,
    norm_tolerance: float = DEFAULT_NORM_TOLERANCE,
) -> Trajectory:
    """
    Integrate the Hartree equation i dpsi/dt = H(t, psi psi^*) psi.

    Args:
        spec: Quantum Hamiltonian functional
        psi0: Initial single-particle ket
        grid: Time grid
        norm_tolerance: Allowed drift of the J-norm psi^H J psi over the run

    Returns:
        Trajectory of kets with J-norm and gamma records

    Raises:
        NumericalGuardError: If the J-norm drifts beyond norm_tolerance
    """
    realization = _quantum_spec(spec)
    J = realization.metric.J
    psi = _ket_amplitudes(psi0, realization.d)

    def density(y: np.ndarray) -> np.ndarray:
        return np.outer(y, y.conj()) @ J

    def rhs(t: float, y: np.ndarray) -> np.ndarray:
        return -1j * (derivative_tensor(spec, density(y), 1, t) @ y)

    def record(t: float, y: np.ndarray):
        times.append(t)
        states.append(y.copy())
        norms.append(float(np.real(y.conj() @ J @ y)))
        gammas.append(gamma_value(spec, density(y), t))

    times, states, norms, gammas = [], [], [], []
    record(grid.t0, psi)
    norm0 = norms[0]
    for k in range(1, grid.steps + 1):
        psi = _rk4_step(rhs, grid.time(k - 1), psi, grid.dt)
        if grid.is_stored(k):
            record(grid.time(k), psi)
    final_norm = float(np.real(psi.conj() @ J @ psi))
    trajectory = Trajectory("ket", times, states, norms, gammas)
    _check_drift("J-norm", max(trajectory.max_norm_drift(), abs(final_norm - norm0)), norm0, norm_tolerance)
    logger.info("hartree_evolve: %d steps, J-norm drift %.2e", grid.steps, trajectory.max_norm_drift())
    return trajectory


def vlasov_evolve_density(
    spec: HamiltonianFunctionalSpec,
    rho0: StateDensity,
    grid: TimeGrid,
    norm_tolerance: float = DEFAULT_NORM_TOLERANCE,
) -> Trajectory:
    """
    Integrate the quantum Vlasov (von Neumann) equation drho/dt = i[rho, H(t, rho)].

    The mass Tr(rho) is monitored as the conservation surrogate.
    """
    realization = _quantum_spec(spec)
    if rho0.realization != realization:
        raise DimensionError("Initial density belongs to a different realization")
    rho = np.array(rho0.data, dtype=complex)

    def rhs(t: float, y: np.ndarray) -> np.ndarray:
        H = derivative_tensor(spec, y, 1, t)
        return 1j * (y @ H - H @ y)

    times, states, norms, gammas = [], [], [], []

    def record(t: float, y: np.ndarray):
        times.append(t)
        states.append(y.copy())
        norms.append(float(np.real(np.trace(y))))
        gammas.append(gamma_value(spec, y, t))

    record(grid.t0, rho)
    for k in range(1, grid.steps + 1):
        rho = _rk4_step(rhs, grid.time(k - 1), rho, grid.dt)
        if grid.is_stored(k):
            record(grid.time(k), rho)
    trajectory = Trajectory("density", times, states, norms, gammas)
    _check_drift("Mass", trajectory.max_norm_drift(), norms[0], norm_tolerance)
    logger.info("vlasov_evolve_density: %d steps, mass drift %.2e", grid.steps, trajectory.max_norm_drift())
    return trajectory


def classical_vlasov_evolve(
    spec: HamiltonianFunctionalSpec,
    rho0: Union[StateDensity, np.ndarray],
    grid: TimeGrid,
) -> Trajectory:
    """
    Integrate the classical Vlasov equation drho/dt = {rho, H(rho)} on a
    phase-space grid.

    Raises:
        NumericalGuardError: If |dH/dp| dt > h_q or |dH/dq| dt > h_p for the
            field of any RK4 stage
    """
    realization = spec.realization
    if realization.kind != "classical":
        raise DimensionError("classical_vlasov_evolve needs a classical realization")
    phase = realization.grid
    data = rho0.data if isinstance(rho0, StateDensity) else rho0
    rho = np.array(realization.check(data, "Initial density"), dtype=float)

    def cfl(H: np.ndarray):
        speed_q = float(np.max(np.abs(phase.derivative(H, 1))))
        speed_p = float(np.max(np.abs(phase.derivative(H, 0))))
        if speed_q * grid.dt > phase.h_q or speed_p * grid.dt > phase.h_p:
            raise NumericalGuardError(
                f"CFL bound violated: |dH/dp| dt = {speed_q * grid.dt:.3e} (h_q {phase.h_q:.3e}), "
                f"|dH/dq| dt = {speed_p * grid.dt:.3e} (h_p {phase.h_p:.3e})"
            )

    # checked on every RK4 stage field
    def rhs(t: float, y: np.ndarray) -> np.ndarray:
        H = derivative_tensor(spec, y, 1, t)
        cfl(H)
        return realization.poisson(y, H)

    times, states, norms, gammas = [], [], [], []

    def record(t: float, y: np.ndarray):
        times.append(t)
        states.append(y.copy())
        norms.append(phase.integrate(y))
        gammas.append(gamma_value(spec, y, t))

    record(grid.t0, rho)
    for k in range(1, grid.steps + 1):
        rho = _rk4_step(rhs, grid.time(k - 1), rho, grid.dt)
        if grid.is_stored(k):
            record(grid.time(k), rho)
    logger.info("classical_vlasov_evolve: %d steps on %s", grid.steps, phase)
    return Trajectory("classical", times, states, norms, gammas)


# ---------------------------------------------------------------------------
# Linear sector evolution
# ---------------------------------------------------------------------------


Generator = Union[Operator, Callable[[float], Operator]]


def sector_propagate(H_n: Generator, psi_n0: Union[Ket, np.ndarray], grid: TimeGrid) -> Trajectory:
    """
    Evolve an n-particle ket with the exact propagator of H_n.

    Args:
        H_n: Sector Hamiltonian, or a callable t -> Operator for a
            time-dependent one, sampled at step midpoints
        psi_n0: Initial ket on the same sector
        grid: Time grid

    Returns:
        Trajectory of sector kets with J-norm and energy records
    """
    static = isinstance(H_n, Operator)
    reference = H_n if static else H_n(grid.t0)
    psi = _ket_amplitudes(psi_n0, reference.dim)
    G = reference.metric_matrix()

    def record(t: float, y: np.ndarray, H: Operator):
        times.append(t)
        states.append(y.copy())
        norms.append(float(np.real(y.conj() @ G @ y)))
        gammas.append(float(np.real(y.conj() @ G @ H.entries @ y)))

    times, states, norms, gammas = [], [], [], []
    record(grid.t0, psi, reference)
    step = expm_propagator(reference, grid.dt).entries if static else None
    for k in range(1, grid.steps + 1):
        if static:
            H = reference
            psi = step @ psi
        else:
            H = H_n(grid.time(k - 1) + grid.dt / 2)
            psi = expm_propagator(H, grid.dt).entries @ psi
        if grid.is_stored(k):
            record(grid.time(k), psi, H if static else H_n(grid.time(k)))
    return Trajectory("ket", times, states, norms, gammas)


def heisenberg_evolve(A_n: Operator, H_n: Operator, t: float) -> Operator:
    """A(t) = U^# A U with U = exp(-i H t) and U^# its metric adjoint."""
    if A_n.space != H_n.space:
        raise DimensionError(f"Observable on {A_n.space}, generator on {H_n.space}")
    U = expm_propagator(H_n, t)
    U_sharp = U.pseudo_adjoint().entries
    return A_n.with_entries(U_sharp @ A_n.entries @ U.entries)


def liouville_evolve(rho_n: np.ndarray, H_n: Operator, t: float) -> np.ndarray:
    """rho(t) = U rho U^#, the Liouville evolution dual to heisenberg_evolve."""
    U = expm_propagator(H_n, t)
    return U.entries @ np.asarray(rho_n, dtype=complex) @ U.pseudo_adjoint().entries


def expectation(psi_n: np.ndarray, A_n: Operator) -> complex:
    """psi^H G A psi for the metric G of A's space."""
    psi = np.asarray(psi_n, dtype=complex)
    return complex(psi.conj() @ A_n.metric_matrix() @ A_n.entries @ psi)


def characteristics_residual(
    spec: HamiltonianFunctionalSpec,
    alpha_spec: HamiltonianFunctionalSpec,
    rho0: StateDensity,
    grid: TimeGrid,
) -> float:
    """
    Largest relative mismatch between d/dt alpha(rho(t)) by centered
    differences along a quantum Vlasov trajectory and {gamma, alpha}_cl(rho(t)).

    The grid should store every step.
    """
    trajectory = vlasov_evolve_density(spec, rho0, grid)
    values = [gamma_value(alpha_spec, rho, t) for t, rho in zip(trajectory.times, trajectory.states)]
    worst = 0.0
    for i in range(1, len(values) - 1):
        h = trajectory.times[i + 1] - trajectory.times[i - 1]
        rate = (values[i + 1] - values[i - 1]) / h
        state = StateDensity(spec.realization, trajectory.states[i])
        bracket = float(np.real(classical_bracket_functionals(spec, alpha_spec, state, trajectory.times[i])))
        worst = max(worst, abs(rate - bracket) / max(abs(bracket), 1e-12))
    return worst
