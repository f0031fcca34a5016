"""
MeanField - eps-solutions of the Hartree equation, stationary and generalized
solitons, spectral-gap frequencies and eps-solitons of the uniformized system.

The eps-solution contracts the disentangled propagators
V^(n+1) = (U^(n) ⊗ I)^{-1} U^(n+1) with coherent weights:

    psi_eps(t) = exp(-phi^*phi/eps) sum_n (1/(n! eps^n)) (c_n^* ⊗ I) V^(n+1)(t) (c_n ⊗ phi),

where c_n are the sector coordinates of phi^{⊗n}. The n-th term carries
eps^{-n}/n!; with that weight a vanishing interaction returns phi exactly.
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg
from scipy.stats import poisson

from .dynamics import TimeGrid, Trajectory, hartree_evolve
from .errors import ConvergenceError, DimensionError, NonCommutingError, NotPseudoHermitianError, NumericalGuardError
from .hamiltonian_algebra import HamiltonianFunctionalSpec, derivative_tensor, gamma_value
from .tensor_core import (
    HERMITIAN_TOL,
    Ket,
    Sector,
    lowering_map,
    metric_expm,
    second_quantize,
    sector_dimension,
    symmetric_power,
)
from .uniformization import UniformizationParams, sector_hamiltonian

logger = logging.getLogger(__name__)

MAX_TAIL_WEIGHT = 1e-6
FIXED_POINT_TOL = 1e-10
MAX_ITERATIONS = 10_000
DEFAULT_DAMPING = 0.5
DEGENERACY_TOL = 1e-9
COMMUTING_TOL = 1e-12
FD_STEP = 1e-3
JOINT_EIGEN_TOL = 1e-8


def _quantum_realization(spec: HamiltonianFunctionalSpec):
    if spec.realization.kind != "quantum":
        raise DimensionError("Mean-field constructions need a quantum realization")
    return spec.realization


def _amplitudes(phi, d: int) -> np.ndarray:
    psi = phi.amplitudes if isinstance(phi, Ket) else np.asarray(phi, dtype=complex).reshape(-1)
    if psi.shape[0] != d:
        raise DimensionError(f"Ket of length {psi.shape[0]} does not live on C^{d}")
    return psi


# ---------------------------------------------------------------------------
# Disentangled propagators
# ---------------------------------------------------------------------------


def lifted_hamiltonian(spec: HamiltonianFunctionalSpec, n: int, epsilon: float,
                       sector: Sector = Sector.SYMMETRIC, t: float = 0.0) -> np.ndarray:
    """
    H^(n+1) on the partially symmetric space (sector n) ⊗ C^d.

    Rows are indexed (b, c) with the sector-n index b slowest. The operator
    is H^(n) ⊗ I plus, for each order m, the eps^(m-1)-weighted sum of
    W^(m) over the (m-1)-subsets of the first n slots joined with the last.

    The operator is assembled directly on sector-n ⊗ C^d. It is not the
    full-power H^(n+1) extended by the identity on the complement of the
    symmetric subspace; the two agree on the image of lift_isometry, the
    only part the disentangled propagators use.
    """
    d = _quantum_realization(spec).d
    dim = sector_dimension(d, n, sector)
    lifted = np.kron(sector_hamiltonian(spec, n, epsilon, sector, t), np.eye(d))
    for m in range(1, min(n + 1, spec.degree) + 1):
        W = spec.tensor(m, t).reshape(d ** (m - 1), d, d ** (m - 1), d)
        term = np.zeros((dim * d, dim * d), dtype=complex)
        for c in range(d):
            for e in range(d):
                block = W[:, c, :, e]
                if not np.any(block):
                    continue
                unit = np.zeros((d, d))
                unit[c, e] = 1.0
                term += np.kron(second_quantize(block, d, m - 1, n, sector).toarray(), unit)
        lifted += epsilon ** (m - 1) * term
    return lifted


def lift_isometry(d: int, n: int, sector: Sector = Sector.SYMMETRIC) -> np.ndarray:
    """
    Isometry E from sector n+1 into (sector n) ⊗ C^d, splitting off the last slot.

    E[(b, c), j] = a_c[b, j] / sqrt(n + 1) with a_c the lowering map of mode c.
    """
    outer = sector_dimension(d, n, sector)
    E = np.zeros((outer * d, sector_dimension(d, n + 1, sector)))
    for c in range(d):
        E[c::d, :] = lowering_map(d, n + 1, sector, c).toarray() / math.sqrt(n + 1)
    return E


@dataclass
class DisentangledPropagator:
    """V^(n+1)(t, t0) on (sector n) ⊗ C^d together with the metric it preserves."""

    n: int
    V: np.ndarray
    t: float
    t0: float
    metric: np.ndarray

    def unitarity_residual(self) -> float:
        """||V^H G V - G||."""
        return float(np.linalg.norm(self.V.conj().T @ self.metric @ self.V - self.metric))


def _pseudo_inverse_unitary(U: np.ndarray, G: np.ndarray) -> np.ndarray:
    return np.linalg.solve(G, U.conj().T @ G)


def _propagator_pairs(spec: HamiltonianFunctionalSpec, n: int, epsilon: float, sector: Sector,
                      grid: TimeGrid) -> Iterator[Tuple[float, np.ndarray, np.ndarray]]:
    """Yield (t, U^(n)(t, t0), lifted U^(n+1)(t, t0)) at the stored times of grid."""
    realization = _quantum_realization(spec)
    d, metric = realization.d, realization.metric
    G_n = metric.sector_matrix(n, sector)
    G_lift = np.kron(G_n, metric.J)
    if not spec.is_time_dependent:
        H_n = sector_hamiltonian(spec, n, epsilon, sector)
        H_lift = lifted_hamiltonian(spec, n, epsilon, sector)
        for t in grid.stored_times:
            yield t, metric_expm(H_n, G_n, t - grid.t0), metric_expm(H_lift, G_lift, t - grid.t0)
        return
    U_n = np.eye(G_n.shape[0], dtype=complex)
    U_lift = np.eye(G_lift.shape[0], dtype=complex)
    yield grid.t0, U_n, U_lift
    for k in range(1, grid.steps + 1):
        midpoint = grid.time(k - 1) + grid.dt / 2
        U_n = metric_expm(sector_hamiltonian(spec, n, epsilon, sector, midpoint), G_n, grid.dt) @ U_n
        U_lift = metric_expm(lifted_hamiltonian(spec, n, epsilon, sector, midpoint), G_lift, grid.dt) @ U_lift
        if grid.is_stored(k):
            yield grid.time(k), U_n, U_lift


def build_disentangled(spec: HamiltonianFunctionalSpec, n: int, params: UniformizationParams,
                       grid: TimeGrid) -> DisentangledPropagator:
    """
    V^(n+1)(t1, t0) = (U^(n) ⊗ I)^{-1} U^(n+1) over the span of grid.

    Time-dependent specs use midpoint-ordered step products on grid.dt.

    Raises:
        DimensionError: If sector n+1 exceeds the truncation
    """
    if not 0 <= n < params.n_max:
        raise DimensionError(f"Disentangling sector {n} needs n + 1 <= n_max = {params.n_max}")
    realization = _quantum_realization(spec)
    d = realization.d
    G_n = realization.metric.sector_matrix(n, params.sector)
    G_lift = np.kron(G_n, realization.metric.J)
    t, U_n, U_lift = None, None, None
    for t, U_n, U_lift in _propagator_pairs(spec, n, params.epsilon, params.sector, grid):
        pass
    V = np.kron(_pseudo_inverse_unitary(U_n, G_n), np.eye(d)) @ U_lift
    return DisentangledPropagator(n=n, V=V, t=t, t0=grid.t0, metric=G_lift)


# ---------------------------------------------------------------------------
# eps-solutions
# ---------------------------------------------------------------------------


def tail_weight(u: float, epsilon: float, n_max: int) -> float:
    """
    Weight of the coherent series beyond n_max: the upper Poisson tail at
    mean |u|/eps, inflated by exp(2|u|/eps) when the J-norm u is negative.
    """
    mean = abs(u) / epsilon
    weight = float(poisson.sf(n_max, mean))
    if u < 0:
        # exp overflows a double beyond ~709
        weight = math.inf if 2 * mean > 700 else weight * math.exp(2 * mean)
    return weight


def _series_weight(u: float, epsilon: float, n: int) -> float:
    return math.exp(-u / epsilon - math.lgamma(n + 1) - n * math.log(epsilon))


def _require_bosons(params: UniformizationParams):
    if params.sector is not Sector.SYMMETRIC:
        raise DimensionError("Coherent-series constructions need the symmetric (+) sector")


def epsilon_solution(
    spec: HamiltonianFunctionalSpec,
    phi,
    params: UniformizationParams,
    grid: TimeGrid,
    n_max: Optional[int] = None,
    max_tail: float = MAX_TAIL_WEIGHT,
) -> Trajectory:
    """
    The eps-solution psi_eps(t) built from disentangled sector propagators.

    Args:
        spec: Quantum Hamiltonian functional
        phi: Initial single-particle ket
        params: Coupling eps and parity (must be '+')
        grid: Stored times of the solution
        n_max: Last sector of the coherent series, params.n_max by default
        max_tail: Largest neglected Poisson tail weight accepted

    Returns:
        Trajectory of psi_eps with J-norm and gamma records; metadata holds
        the tail weight

    Raises:
        NumericalGuardError: If the neglected tail weight exceeds max_tail
    """
    _require_bosons(params)
    realization = _quantum_realization(spec)
    d, metric = realization.d, realization.metric
    eps = params.epsilon
    n_max = params.n_max if n_max is None else n_max
    psi = _amplitudes(phi, d)
    u = float(np.real(psi.conj() @ metric.J @ psi))
    tail = tail_weight(u, eps, n_max)
    if tail > max_tail:
        raise NumericalGuardError(
            f"Coherent tail weight {tail:.3e} beyond n_max={n_max} exceeds {max_tail:.1e}; "
            "raise n_max or epsilon"
        )
    logger.debug("epsilon_solution: eps=%g, n_max=%d, tail %.2e", eps, n_max, tail)

    times = grid.stored_times
    sums = np.zeros((len(times), d), dtype=complex)
    for n in range(n_max + 1):
        c = symmetric_power(psi, n, Sector.SYMMETRIC)
        G_n = metric.sector_matrix(n, Sector.SYMMETRIC)
        start = np.kron(c, psi)
        bra = c.conj() @ G_n
        weight = _series_weight(u, eps, n)
        for index, (t, U_n, U_lift) in enumerate(_propagator_pairs(spec, n, eps, Sector.SYMMETRIC, grid)):
            V = np.kron(_pseudo_inverse_unitary(U_n, G_n), np.eye(d)) @ U_lift
            sums[index] += weight * (bra @ (V @ start).reshape(c.shape[0], d))

    norms = [float(np.real(s.conj() @ metric.J @ s)) for s in sums]
    gammas = [gamma_value(spec, np.outer(s, s.conj()) @ metric.J, t) for s, t in zip(sums, times)]
    metadata = {"epsilon": eps, "n_max": n_max, "tail_weight": tail}
    return Trajectory("ket", times, list(sums), norms, gammas, metadata)


def coherent_state_oracle(spec: HamiltonianFunctionalSpec, phi, params: UniformizationParams,
                          t: float, n_max: Optional[int] = None) -> np.ndarray:
    """
    sqrt(eps) <z| U^H a U |z>, z = phi / sqrt(eps), computed densely on the
    truncated Fock space n = 0..n_max+1 with scipy's expm.

    Independent of the disentangled construction; used to cross-check it.
    """
    _require_bosons(params)
    realization = _quantum_realization(spec)
    if not realization.metric.is_identity:
        raise DimensionError("The coherent-state oracle needs the identity metric")
    d, eps = realization.d, params.epsilon
    n_max = params.n_max if n_max is None else n_max
    sector = Sector.SYMMETRIC
    dims = [sector_dimension(d, n, sector) for n in range(n_max + 2)]
    offsets = np.concatenate([[0], np.cumsum(dims)])
    H = scipy.linalg.block_diag(*[sector_hamiltonian(spec, n, eps, sector) for n in range(n_max + 2)])
    U = scipy.linalg.expm(-1j * t * H)

    z = _amplitudes(phi, d) / math.sqrt(eps)
    norm_z = float(np.real(z.conj() @ z))
    coherent = np.zeros(offsets[-1], dtype=complex)
    for n in range(n_max + 2):
        scale = math.exp(-0.5 * norm_z - 0.5 * math.lgamma(n + 1))
        coherent[offsets[n]:offsets[n + 1]] = scale * symmetric_power(z, n, sector)
    evolved = U @ coherent

    result = np.zeros(d, dtype=complex)
    for k in range(d):
        annihilator = np.zeros((offsets[-1], offsets[-1]))
        for n in range(n_max + 1):
            annihilator[offsets[n]:offsets[n + 1], offsets[n + 1]:offsets[n + 2]] = lowering_map(d, n + 1, sector, k).toarray()
        result[k] = math.sqrt(eps) * (evolved.conj() @ annihilator @ evolved)
    return result


@dataclass
class ConvergenceStudy:
    """Rows (epsilon, n_max, t, error, tail_weight) and the trend at the last time."""

    rows: List[Tuple[float, int, float, float, float]] = field(default_factory=list)
    monotone: bool = True
    orders: List[float] = field(default_factory=list)

    columns = ("epsilon", "n_max", "t", "error", "tail_weight")


def convergence_study(
    spec: HamiltonianFunctionalSpec,
    phi,
    epsilon_list: Sequence[float],
    grid: TimeGrid,
    n_max: int,
    threads: int = 1,
) -> ConvergenceStudy:
    """
    Distance between eps-solutions and the Hartree solution for each eps.

    Errors are Euclidean norms of psi_eps(t) - psi_Hartree(t). `monotone`
    reports whether the error at the last stored time decreases along the
    eps list sorted in decreasing order; `orders` holds the empirical
    convergence orders log2(error(eps)/error(eps/2)) between neighbours.
    """
    if not epsilon_list:
        return ConvergenceStudy()
    reference = hartree_evolve(spec, phi, grid)
    epsilons = sorted(set(float(e) for e in epsilon_list), reverse=True)

    def solve(eps: float) -> Trajectory:
        return epsilon_solution(spec, phi, UniformizationParams(eps, n_max), grid)

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        solutions = list(pool.map(solve, epsilons))

    rows = []
    final_errors = []
    for eps, solution in zip(epsilons, solutions):
        tail = solution.metadata["tail_weight"]
        for t, state, exact in zip(solution.times, solution.states, reference.states):
            rows.append((eps, n_max, t, float(np.linalg.norm(state - exact)), tail))
        final_errors.append(float(np.linalg.norm(solution.final - reference.final)))
    rows.sort(key=lambda row: (row[0], row[2]))
    monotone = all(b < a for a, b in zip(final_errors, final_errors[1:]))
    orders = [
        math.log(a / b) / math.log(e1 / e2)
        for (a, b), (e1, e2) in zip(zip(final_errors, final_errors[1:]), zip(epsilons, epsilons[1:]))
        if a > 0 and b > 0
    ]
    logger.info("convergence_study: errors %s, monotone=%s", ["%.3e" % e for e in final_errors], monotone)
    return ConvergenceStudy(rows=rows, monotone=monotone, orders=orders)


# ---------------------------------------------------------------------------
# Self-consistent extremals
# ---------------------------------------------------------------------------


def _require_hilbert(spec: HamiltonianFunctionalSpec):
    realization = _quantum_realization(spec)
    if not realization.metric.is_identity:
        raise DimensionError("Self-consistent eigen-iteration needs the identity metric")
    return realization


def _self_consistent(spec: HamiltonianFunctionalSpec, nu: float, basis: np.ndarray,
                     seed=None, damping: float = DEFAULT_DAMPING, tol: float = FIXED_POINT_TOL,
                     max_iter: int = MAX_ITERATIONS) -> Tuple[np.ndarray, float, List[float]]:
    """
    Damped density mixing rho <- (1 - f) rho + f nu v v^*, v the lowest
    eigenvector of H(rho) restricted to span(basis).
    """
    if not np.isfinite(nu) or nu <= 0:
        raise ValueError("nu must be positive")
    if not 0 < damping <= 1:
        raise ValueError("damping must lie in (0, 1]")
    if max_iter < 1:
        raise ValueError("max_iter must be at least 1")
    d = spec.realization.d
    if seed is None:
        start = basis.conj().T @ derivative_tensor(spec, np.zeros((d, d), dtype=complex), 1) @ basis
        v = scipy.linalg.eigh(0.5 * (start + start.conj().T))[1][:, 0]
    else:
        v = basis.conj().T @ _amplitudes(seed, d)
        if np.linalg.norm(v) < 1e-12:
            raise ValueError("Seed has no overlap with the constraint patch")
        v = v / np.linalg.norm(v)
    full = basis @ v
    rho = nu * np.outer(full, full.conj())
    history: List[float] = []
    previous = v
    for iteration in range(1, max_iter + 1):
        H = basis.conj().T @ derivative_tensor(spec, rho, 1) @ basis
        values, vectors = scipy.linalg.eigh(0.5 * (H + H.conj().T))
        lowest = vectors[:, values - values[0] <= DEGENERACY_TOL * max(1.0, abs(values[0]))]
        if lowest.shape[1] > 1:
            v = lowest @ (lowest.conj().T @ previous)
            v = v / np.linalg.norm(v) if np.linalg.norm(v) > 1e-12 else lowest[:, 0]
        else:
            v = lowest[:, 0]
        overlap = np.vdot(previous, v)
        if abs(overlap) > 0:
            v = v * (np.conj(overlap) / abs(overlap))

        phi = math.sqrt(nu) * (basis @ v)
        H_phi = basis.conj().T @ derivative_tensor(spec, np.outer(phi, phi.conj()), 1) @ basis
        coords = basis.conj().T @ phi
        omega = float(np.real(coords.conj() @ H_phi @ coords)) / nu
        residual = float(np.linalg.norm(H_phi @ coords - omega * coords))
        history.append(residual)
        if residual <= tol:
            logger.info("Self-consistent iteration converged in %d steps (residual %.2e)", iteration, residual)
            return phi, omega, history
        full = basis @ v
        rho = (1 - damping) * rho + damping * nu * np.outer(full, full.conj())
        previous = v
    raise ConvergenceError(
        f"Self-consistent iteration did not reach {tol:.1e} in {max_iter} steps "
        f"(last residual {history[-1]:.3e})",
        history,
    )


def hartree_fixed_point(
    spec: HamiltonianFunctionalSpec,
    nu: float,
    seed=None,
    damping: float = DEFAULT_DAMPING,
    tol: float = FIXED_POINT_TOL,
    max_iter: int = MAX_ITERATIONS,
) -> Tuple[np.ndarray, float]:
    """
    Stationary Hartree state H(phi phi^*) phi = omega phi with phi^* phi = nu.

    Args:
        spec: Quantum Hamiltonian functional with the identity metric
        nu: Norm phi^* phi of the solution
        seed: Starting ket; the ground state of W^(1) when omitted
        damping: Mixing fraction of the new density
        tol: Residual ||H(phi phi^*) phi - omega phi|| at convergence
        max_iter: Iteration budget

    Returns:
        (phi_nu, omega)

    Raises:
        ConvergenceError: If the residual stays above tol; carries the history
    """
    realization = _require_hilbert(spec)
    phi, omega, _ = _self_consistent(spec, nu, np.eye(realization.d), seed, damping, tol, max_iter)
    return phi, omega


def _check_integrals(integrals: Sequence[np.ndarray], d: int) -> List[np.ndarray]:
    checked = [np.asarray(P, dtype=complex) for P in integrals]
    if not checked or not np.allclose(checked[0], np.eye(d)):
        checked = [np.eye(d, dtype=complex)] + checked
    for j, P in enumerate(checked):
        if P.shape != (d, d):
            raise DimensionError(f"Integral P_{j} must be {d}×{d}")
        residual = float(np.linalg.norm(P - P.conj().T))
        if residual > HERMITIAN_TOL * max(1.0, float(np.linalg.norm(P))):
            raise NotPseudoHermitianError(f"Integral P_{j} is not Hermitian", residual)
    for i in range(len(checked)):
        for j in range(i + 1, len(checked)):
            norm = float(np.linalg.norm(checked[i] @ checked[j] - checked[j] @ checked[i]))
            if norm > COMMUTING_TOL * max(1.0, float(np.linalg.norm(checked[i]) * np.linalg.norm(checked[j]))):
                raise NonCommutingError(f"Integrals P_{i} and P_{j} do not commute", norm)
    return checked


def joint_eigenbasis(operators: Sequence[np.ndarray], dim: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Common eigenvectors of commuting Hermitian matrices.

    Returns:
        (B, values): orthonormal columns B and values[a, j] = B[:, a]^H P_j B[:, a]
    """
    if not operators:
        return np.eye(dim, dtype=complex), np.zeros((dim, 0))
    weights = [math.sqrt(2) ** (j + 1) + 0.1 * (j + 1) for j in range(len(operators))]
    combined = sum(w * np.asarray(P) for w, P in zip(weights, operators))
    _, B = scipy.linalg.eigh(0.5 * (combined + combined.conj().T))
    values = np.array([[float(np.real(B[:, a].conj() @ P @ B[:, a])) for P in operators] for a in range(dim)])
    return B, values.reshape(dim, len(operators))


def joint_eigenspace(operators: Sequence[np.ndarray], targets: Sequence[float], dim: int,
                     tol: float = JOINT_EIGEN_TOL) -> np.ndarray:
    """Orthonormal basis of the joint eigenspace with eigenvalues `targets`."""
    B, values = joint_eigenbasis(operators, dim)
    if not operators:
        return B
    mask = np.all(np.abs(values - np.asarray(targets, dtype=float)) <= tol, axis=1)
    if not np.any(mask):
        raise DimensionError(f"No joint eigenvector with eigenvalues {list(targets)}")
    return B[:, mask]


def constrained_extremal(
    spec: HamiltonianFunctionalSpec,
    integrals: Sequence[np.ndarray],
    targets: Sequence[float],
    seed=None,
    damping: float = DEFAULT_DAMPING,
    tol: float = FIXED_POINT_TOL,
    max_iter: int = MAX_ITERATIONS,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Extremal of gamma under the constraints <phi, P_j phi> = p_j.

    The iteration runs on the joint eigenspace of P_1.. with eigenvalues
    p_j / nu, nu = p_0 the norm.

    Returns:
        (phi, multipliers) with multipliers from a least-squares fit of
        H(phi phi^*) phi = sum_j nu^j P_j phi
    """
    realization = _require_hilbert(spec)
    d = realization.d
    integrals = _check_integrals(integrals, d)
    if len(targets) != len(integrals):
        raise ValueError(f"Expected {len(integrals)} target values (p_0 = nu first), got {len(targets)}")
    nu = float(targets[0])
    if nu <= 0:
        raise ValueError("nu must be positive")
    basis = joint_eigenspace(integrals[1:], [p / nu for p in targets[1:]], d)
    phi, _, _ = _self_consistent(spec, nu, basis, seed, damping, tol, max_iter)
    return phi, _multipliers(spec, integrals, phi)


def _multipliers(spec: HamiltonianFunctionalSpec, integrals: Sequence[np.ndarray], phi: np.ndarray) -> np.ndarray:
    H_phi = derivative_tensor(spec, np.outer(phi, phi.conj()), 1) @ phi
    columns = np.column_stack([P @ phi for P in integrals])
    solution = np.linalg.lstsq(columns, H_phi, rcond=None)[0]
    return np.real(solution)


def spectral_gap_frequency(spec: HamiltonianFunctionalSpec, nu: float, n: int,
                           parity: str = "+") -> Tuple[float, float, float]:
    """
    Ground energies of H^(n), H^(n+1) at eps = nu/n and their gap.

    Returns:
        (lambda_n, lambda_{n+1}, lambda_{n+1} - lambda_n)
    """
    realization = _quantum_realization(spec)
    if n < 1:
        raise DimensionError("Spectral gap needs n >= 1")
    if nu <= 0:
        raise ValueError("nu must be positive")
    sector = Sector.from_parity(parity)
    eps = nu / n
    energies = []
    for k in (n, n + 1):
        H = sector_hamiltonian(spec, k, eps, sector)
        if realization.metric.is_identity:
            energies.append(float(scipy.linalg.eigvalsh(0.5 * (H + H.conj().T))[0]))
        else:
            energies.append(float(np.min(np.real(scipy.linalg.eigvals(H)))))
    return energies[0], energies[1], energies[1] - energies[0]


def gap_study(spec: HamiltonianFunctionalSpec, nu: float, ns: Sequence[int], parity: str = "+",
              seed=None, threads: int = 1) -> List[Tuple[int, float, float, float, float, float, float]]:
    """Rows (n, epsilon, lambda_n, lambda_n1, gap, omega_hartree, abs_diff) sorted by n."""
    _, omega = hartree_fixed_point(spec, nu, seed)
    ns = sorted(set(int(n) for n in ns))
    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        gaps = list(pool.map(lambda n: spectral_gap_frequency(spec, nu, n, parity), ns))
    return [(n, nu / n, lam_n, lam_n1, gap, omega, abs(gap - omega)) for n, (lam_n, lam_n1, gap) in zip(ns, gaps)]


# ---------------------------------------------------------------------------
# Solitons
# ---------------------------------------------------------------------------


class SolitonProblem:
    """
    Extremal phi of gamma under commuting quadratic integrals P_j.

    The identity P_0 = I is prepended when missing; targets[0] is the norm
    nu and targets[j] the value of <phi, P_j phi>. h maps a target vector p
    to the constrained extremal value of gamma.
    """

    def __init__(
        self,
        spec: HamiltonianFunctionalSpec,
        integrals: Sequence[np.ndarray],
        targets: Sequence[float],
        phi: Optional[np.ndarray] = None,
        multipliers: Optional[Sequence[float]] = None,
        h: Optional[Callable[[np.ndarray], float]] = None,
    ):
        realization = _quantum_realization(spec)
        self.spec = spec
        self.integrals = _check_integrals(integrals, realization.d)
        if len(targets) != len(self.integrals):
            raise ValueError(
                f"Expected {len(self.integrals)} target values (p_0 = nu first), got {len(targets)}"
            )
        self.targets = np.asarray(targets, dtype=float)
        self.phi = None if phi is None else _amplitudes(phi, realization.d)
        if multipliers is not None and len(multipliers) != len(self.integrals):
            raise ValueError("One multiplier per integral is required")
        self.multipliers = None if multipliers is None else np.asarray(multipliers, dtype=float)
        self.h = h

    @property
    def nu(self) -> float:
        return float(self.targets[0])

    def extremal(self) -> np.ndarray:
        if self.phi is None:
            self.phi, _ = constrained_extremal(self.spec, self.integrals, self.targets)
        return self.phi

    def resolved_multipliers(self) -> np.ndarray:
        """Supplied multipliers, or the least-squares fit at the extremal."""
        if self.multipliers is not None:
            return self.multipliers
        return _multipliers(self.spec, self.integrals, self.extremal())

    def h_function(self) -> Callable[[np.ndarray], float]:
        """
        Supplied h, or gamma at the constrained extremal for each p.

        The default is defined only where p_j / p_0 is a joint eigenvalue
        of the integrals.
        """
        if self.h is not None:
            return self.h

        def h(p: np.ndarray) -> float:
            phi, _ = constrained_extremal(self.spec, self.integrals, p)
            return gamma_value(self.spec, np.outer(phi, phi.conj()))

        return h

    def __repr__(self) -> str:
        return f"SolitonProblem({self.spec}, integrals={len(self.integrals)}, targets={self.targets.tolist()})"


@dataclass
class SolitonReport:
    """Outcome of a generalized-soliton check."""

    multipliers: np.ndarray
    fd_multipliers: np.ndarray
    residual: float
    fd_residual: float
    multiplier_gap: float
    max_deviation: float


def soliton_orbit(problem: SolitonProblem, times: Sequence[float], t0: float = 0.0) -> List[np.ndarray]:
    """exp(-i sum_j nu^j P_j (t - t0)) phi at each time."""
    phi = problem.extremal()
    generator = sum(nu * P for nu, P in zip(problem.resolved_multipliers(), problem.integrals))
    identity = np.eye(phi.shape[0])
    return [metric_expm(generator, identity, t - t0) @ phi for t in times]


def _soliton_residual(spec, integrals, phi, multipliers) -> float:
    H_phi = derivative_tensor(spec, np.outer(phi, phi.conj()), 1) @ phi
    return float(np.linalg.norm(H_phi - sum(nu * (P @ phi) for nu, P in zip(multipliers, integrals))))


def finite_difference_directions(problem: SolitonProblem) -> np.ndarray:
    """
    Rows are the target directions along which h is differentiated.

    A supplied h is differentiated along every coordinate. The default h
    lives on rays p = nu (1, lambda) with lambda in the joint spectrum of
    the integrals, so only the ray direction p / p_0 is admissible there.
    """
    m = len(problem.integrals)
    if problem.h is not None or m == 1:
        return np.eye(m)
    return (problem.targets / problem.targets[0])[None, :]


def generalized_soliton_check(problem: SolitonProblem, grid: TimeGrid, fd_step: float = FD_STEP) -> SolitonReport:
    """
    Check that phi evolves under the Hartree flow as exp(-i sum_j nu^j P_j t) phi.

    Reports the extremality residual ||H(phi phi^*) phi - sum_j nu^j P_j phi||
    for the supplied (or least-squares) multipliers and for multipliers from
    centered differences of h, and the largest deviation between the
    Hartree trajectory and the phase-rotated extremal.

    The differences run along finite_difference_directions; fd_multipliers
    is the minimum-norm solution of D nu = dh and multiplier_gap compares
    the directional derivatives with D applied to the multipliers. Both are
    NaN when h is undefined next to the targets.
    """
    spec = problem.spec
    phi = problem.extremal()
    multipliers = np.asarray(problem.resolved_multipliers(), dtype=float)
    h = problem.h_function()
    directions = finite_difference_directions(problem)
    try:
        derivs = np.array([
            (h(problem.targets + fd_step * u) - h(problem.targets - fd_step * u)) / (2 * fd_step)
            for u in directions
        ])
        fd = np.linalg.lstsq(directions, derivs, rcond=None)[0]
        gap = float(np.max(np.abs(derivs - directions @ multipliers)))
        fd_residual = _soliton_residual(spec, problem.integrals, phi, fd)
    except DimensionError as exc:
        logger.warning("h is undefined next to the targets, skipping finite differences: %s", exc)
        fd = np.full(len(problem.integrals), np.nan)
        gap = fd_residual = float("nan")

    trajectory = hartree_evolve(spec, phi, grid)
    orbit = soliton_orbit(problem, trajectory.times, grid.t0)
    deviation = max(float(np.linalg.norm(state - rotated)) for state, rotated in zip(trajectory.states, orbit))

    report = SolitonReport(
        multipliers=multipliers,
        fd_multipliers=fd,
        residual=_soliton_residual(spec, problem.integrals, phi, multipliers),
        fd_residual=fd_residual,
        multiplier_gap=gap,
        max_deviation=deviation,
    )
    logger.info("Soliton check: residual %.2e, deviation %.2e", report.residual, report.max_deviation)
    return report


def sector_h(spec: HamiltonianFunctionalSpec, integrals: Sequence[np.ndarray], epsilon: float,
             parity: str = "+") -> Callable[[np.ndarray], float]:
    """
    Finite-eps h(p): eps times the lowest eigenvalue of H^(n), n = p_0/eps,
    restricted to the joint eigenspace of n^(P_j) with eigenvalues p_j/eps.

    Raises (when called):
        DimensionError: If p_0/eps is not a non-negative integer or the joint
            eigenspace is empty
    """
    realization = _quantum_realization(spec)
    d = realization.d
    integrals = _check_integrals(integrals, d)
    sector = Sector.from_parity(parity)
    cache: Dict[Tuple, float] = {}

    def h(p) -> float:
        p = np.atleast_1d(np.asarray(p, dtype=float))
        ratio = p[0] / epsilon
        n = int(round(ratio))
        if n < 0 or abs(ratio - n) > 1e-9:
            raise DimensionError(f"p_0 = {p[0]} is not on the sector lattice eps*n (eps={epsilon})")
        key = tuple(np.round(p / epsilon, 9))
        if key in cache:
            return cache[key]
        H = sector_hamiltonian(spec, n, epsilon, sector)
        if len(integrals) > 1:
            counts = [second_quantize(P, d, 1, n, sector).toarray() for P in integrals[1:]]
            Q = joint_eigenspace(counts, p[1:] / epsilon, H.shape[0])
            H = Q.conj().T @ H @ Q
        if H.size == 0:
            raise DimensionError(f"Sector {n} is empty for parity '{sector.parity}'")
        value = epsilon * float(scipy.linalg.eigvalsh(0.5 * (H + H.conj().T))[0])
        cache[key] = value
        return value

    return h


def epsilon_soliton(problem: SolitonProblem, params: UniformizationParams, grid: TimeGrid,
                    h: Optional[Callable[[np.ndarray], float]] = None) -> Trajectory:
    """
    psi_p(t) = exp(-(i/eps)(h(p + eps P) - h(p))(t - t0)) phi_p.

    h(p + eps P) is evaluated on the joint eigenbasis of the integrals;
    by default h comes from exact sector diagonalization.

    Raises:
        DimensionError: If h is undefined where phi_p has weight
    """
    spec = problem.spec
    eps = params.epsilon
    h = h if h is not None else sector_h(spec, problem.integrals, eps, params.parity)
    phi = problem.extremal()
    d = phi.shape[0]
    B, values = joint_eigenbasis(problem.integrals, d)
    coeffs = B.conj().T @ phi
    base = h(problem.targets)
    frequencies = np.zeros(d)
    for a in range(d):
        if abs(coeffs[a]) < 1e-14:
            continue
        frequencies[a] = (h(problem.targets + eps * values[a]) - base) / eps

    times = grid.stored_times
    states = [B @ (np.exp(-1j * frequencies * (t - grid.t0)) * coeffs) for t in times]
    J = spec.realization.metric.J
    norms = [float(np.real(s.conj() @ J @ s)) for s in states]
    gammas = [gamma_value(spec, np.outer(s, s.conj()) @ J, t) for s, t in zip(states, times)]
    return Trajectory("ket", times, states, norms, gammas, {"epsilon": eps})
