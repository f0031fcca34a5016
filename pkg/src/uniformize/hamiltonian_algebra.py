"""
HamiltonianAlgebra - Quantum and classical realizations of a Lie-Jordan
algebra, state densities and polynomial Hamiltonian functionals.

Algebra elements are plain numpy arrays: d×d matrices in the quantum
realization, (n_q, n_p) grid fields in the classical one. A realization
object knows the pairing, Jordan product and Poisson bracket for its
elements.
"""
import logging
import math
from typing import Callable, Dict, List, Optional, Sequence, Union

import numpy as np

from .errors import DimensionError, NonCommutingError, NotPseudoHermitianError
from .phase_space import GridSpec
from .tensor_core import (
    COMMUTATION_TOL,
    FULL_DIMENSION_CAP,
    HERMITIAN_TOL,
    Ket,
    Metric,
    Operator,
    Sector,
    SpaceLabel,
    contract_slots,
    as_density,
    permute_slots,
)

logger = logging.getLogger(__name__)

MAX_DEGREE = 3
MAX_CLASSICAL_DEGREE = 2


class QuantumRealization:
    """
    Operator algebra on C^d with an optional indefinite metric J.

    pairing(rho, A) = Tr(rho A), A·B = (AB + BA)/2, {H, A} = i(HA - AH).
    """

    kind = "quantum"

    def __init__(self, d: int, metric: Optional[Metric] = None):
        if d < 1:
            raise DimensionError("Single-particle dimension d must be positive")
        if metric is None:
            metric = Metric.identity(d)
        if metric.d != d:
            raise DimensionError("Metric dimension does not match d")
        self.d = d
        self.metric = metric

    @property
    def element_shape(self):
        return (self.d, self.d)

    def identity(self) -> np.ndarray:
        return np.eye(self.d, dtype=complex)

    def check(self, element: np.ndarray, name: str = "element") -> np.ndarray:
        element = np.asarray(element, dtype=complex)
        if element.shape != self.element_shape:
            raise DimensionError(
                f"{name} of shape {element.shape} does not belong to the quantum "
                f"realization with d={self.d}"
            )
        return element

    def pairing(self, rho: np.ndarray, A: np.ndarray) -> complex:
        return complex(np.trace(self.check(rho, "rho") @ self.check(A, "A")))

    def jordan(self, A: np.ndarray, B: np.ndarray) -> np.ndarray:
        A, B = self.check(A, "A"), self.check(B, "B")
        return 0.5 * (A @ B + B @ A)

    def poisson(self, H: np.ndarray, A: np.ndarray) -> np.ndarray:
        H, A = self.check(H, "H"), self.check(A, "A")
        return 1j * (H @ A - A @ H)

    def star(self, A: np.ndarray) -> np.ndarray:
        """Metric adjoint J^{-1} A^H J."""
        A = self.check(A, "A")
        J = self.metric.J
        return np.linalg.solve(J, A.conj().T @ J)

    def __eq__(self, other) -> bool:
        if not isinstance(other, QuantumRealization):
            return NotImplemented
        return self.d == other.d and self.metric == other.metric

    def __hash__(self) -> int:
        return hash((self.kind, self.d, self.metric))

    def __repr__(self) -> str:
        return f"QuantumRealization(d={self.d}, metric={self.metric})"


class ClassicalRealization:
    """
    Function algebra on a phase-space grid.

    pairing is the quadrature sum of rho·A, the Jordan product is pointwise
    and {H, A} = dH/dp dA/dq - dH/dq dA/dp by finite differences.
    """

    kind = "classical"

    def __init__(self, grid: GridSpec):
        self.grid = grid

    @property
    def element_shape(self):
        return self.grid.shape

    def identity(self) -> np.ndarray:
        return np.ones(self.grid.shape)

    def check(self, element: np.ndarray, name: str = "element") -> np.ndarray:
        element = np.asarray(element)
        if element.shape != self.element_shape:
            raise DimensionError(
                f"{name} of shape {element.shape} does not belong to the classical "
                f"realization on {self.grid}"
            )
        return element

    def pairing(self, rho: np.ndarray, A: np.ndarray) -> complex:
        return complex(np.sum(self.check(rho, "rho") * self.check(A, "A")) * self.grid.cell_area)

    def jordan(self, A: np.ndarray, B: np.ndarray) -> np.ndarray:
        return self.check(A, "A") * self.check(B, "B")

    def poisson(self, H: np.ndarray, A: np.ndarray) -> np.ndarray:
        H, A = self.check(H, "H"), self.check(A, "A")
        grid = self.grid
        return grid.derivative(H, 1) * grid.derivative(A, 0) - grid.derivative(H, 0) * grid.derivative(A, 1)

    def star(self, A: np.ndarray) -> np.ndarray:
        return np.conj(self.check(A, "A"))

    def __eq__(self, other) -> bool:
        if not isinstance(other, ClassicalRealization):
            return NotImplemented
        return self.grid == other.grid

    def __hash__(self) -> int:
        return hash((self.kind, self.grid))

    def __repr__(self) -> str:
        return f"ClassicalRealization({self.grid})"


Realization = Union[QuantumRealization, ClassicalRealization]


def _same_realization(a: Realization, b: Realization):
    if a != b:
        raise DimensionError(f"Realization mismatch: {a} vs {b}")


class StateDensity:
    """
    An element rho of the state space paired with the algebra.

    Normalization <rho, I> is recorded, never enforced.
    """

    def __init__(self, realization: Realization, data: np.ndarray, ket: Optional[np.ndarray] = None):
        data = realization.check(data, "State density")
        if not np.all(np.isfinite(data)):
            raise ValueError("State density must be finite")
        if realization.kind == "quantum":
            J = realization.metric.J
            residual = float(np.linalg.norm(J @ data - data.conj().T @ J))
            if residual > HERMITIAN_TOL * max(1.0, float(np.linalg.norm(data))):
                raise NotPseudoHermitianError("State density is not metric-Hermitian", residual)
        elif np.iscomplexobj(data):
            if np.max(np.abs(np.imag(data)), initial=0.0) > 0:
                raise ValueError("Classical state density must be real")
            data = np.real(data)
        self.realization = realization
        self.data = data
        self.ket = None if ket is None else np.asarray(ket, dtype=complex)

    @classmethod
    def from_ket(cls, realization: QuantumRealization, psi: Union[Ket, np.ndarray]) -> "StateDensity":
        """Rank-one density psi psi^H J."""
        amplitudes = psi.amplitudes if isinstance(psi, Ket) else np.asarray(psi, dtype=complex)
        return cls(realization, as_density(amplitudes, realization.metric), ket=amplitudes)

    @property
    def mass(self) -> float:
        """<rho, I>."""
        return float(np.real(self.realization.pairing(self.data, self.realization.identity())))

    def __repr__(self) -> str:
        return f"StateDensity({self.realization}, mass={self.mass:.6g})"


def pairing(rho: StateDensity, A: np.ndarray) -> complex:
    """
    <rho, A>: Tr(rho A) or the phase-space quadrature of rho·A.

    Raises:
        DimensionError: If A does not belong to rho's realization
    """
    return rho.realization.pairing(rho.data, A)


def jordan(A: np.ndarray, B: np.ndarray, realization: Realization) -> np.ndarray:
    """Symmetric (Jordan) product of two algebra elements."""
    return realization.jordan(A, B)


def poisson(H: np.ndarray, A: np.ndarray, realization: Realization) -> np.ndarray:
    """Poisson bracket {H, A}; dA/dt = {A, H} is the Liouville flow of H."""
    return realization.poisson(H, A)


Modulation = Callable[[float], float]


class HamiltonianFunctionalSpec:
    """
    Interaction tensors W^(1..N) of gamma(rho) = sum_m (1/m!) <rho^{⊗m}, W^(m)>.

    Quantum tensors are metric-Hermitian Operators on the m-th full tensor
    power commuting with all slot permutations. Classical tensors are a
    real field (m = 1) and a real symmetric kernel over flattened grid
    nodes (m = 2). Each order may carry a scalar modulation s_m(t).
    """

    def __init__(
        self,
        realization: Realization,
        W: Sequence[Optional[Union[Operator, np.ndarray]]],
        modulations: Optional[Dict[int, Modulation]] = None,
    ):
        """
        Args:
            realization: Quantum or classical realization
            W: Tensors for m = 1..N; None stands for a vanishing order
            modulations: Optional map m -> s_m(t) scaling W^(m)

        Raises:
            ValueError: If the degree is out of range
            NonCommutingError: If a tensor is not slot-symmetric
            NotPseudoHermitianError: If a quantum tensor is not metric-Hermitian
        """
        W = list(W)
        if not W:
            raise ValueError("A Hamiltonian functional needs at least W^(1)")
        max_degree = MAX_DEGREE if realization.kind == "quantum" else MAX_CLASSICAL_DEGREE
        if len(W) > max_degree:
            raise ValueError(f"Degree {len(W)} exceeds the supported maximum {max_degree}")
        modulations = dict(modulations or {})
        for m in modulations:
            if not 1 <= m <= len(W):
                raise ValueError(f"Modulation given for order {m} outside 1..{len(W)}")

        self.realization = realization
        self.modulations = modulations
        if realization.kind == "quantum":
            self.W = [self._check_quantum(m, w) for m, w in enumerate(W, start=1)]
        else:
            self.W = [self._check_classical(m, w) for m, w in enumerate(W, start=1)]

    def _check_quantum(self, m: int, w) -> Operator:
        d, metric = self.realization.d, self.realization.metric
        space = SpaceLabel(d, m, Sector.FULL)
        if w is None:
            return Operator(space, np.zeros((space.dim, space.dim)), metric)
        entries = w.entries if isinstance(w, Operator) else w
        op = Operator(space, entries, metric)
        scale = max(1.0, float(np.linalg.norm(op.entries)))
        for k in range(m - 1):
            swap = list(range(m))
            swap[k], swap[k + 1] = swap[k + 1], swap[k]
            moved = permute_slots(op.entries, d, m, swap)
            norm = float(np.linalg.norm(moved - op.entries))
            if norm > COMMUTATION_TOL * scale:
                raise NonCommutingError(f"W^({m}) does not commute with slot permutations", norm)
        residual = op.hermiticity_residual()
        if residual > HERMITIAN_TOL * scale:
            raise NotPseudoHermitianError(f"W^({m}) is not metric-Hermitian", residual)
        return op

    def _check_classical(self, m: int, w) -> np.ndarray:
        grid = self.realization.grid
        points = grid.n_q * grid.n_p
        if m == 1:
            if w is None:
                return np.zeros(grid.shape)
            field = np.asarray(w)
            if field.shape != grid.shape or np.iscomplexobj(field):
                raise ValueError(f"W^(1) must be a real field of shape {grid.shape}")
            return field.astype(float)
        if points > FULL_DIMENSION_CAP:
            raise DimensionError(
                f"Dense two-body kernel over {points} grid nodes exceeds cap {FULL_DIMENSION_CAP}"
            )
        if w is None:
            return np.zeros((points, points))
        kernel = np.asarray(w)
        if np.iscomplexobj(kernel):
            raise ValueError("W^(2) kernel must be real")
        kernel = kernel.reshape(points, points).astype(float)
        asymmetry = float(np.linalg.norm(kernel - kernel.T))
        if asymmetry > COMMUTATION_TOL * max(1.0, float(np.linalg.norm(kernel))):
            raise NonCommutingError("W^(2) kernel is not symmetric", asymmetry)
        return kernel

    @property
    def degree(self) -> int:
        return len(self.W)

    @property
    def is_time_dependent(self) -> bool:
        return bool(self.modulations)

    def weight(self, m: int, t: float) -> float:
        """Scalar modulation s_m(t), 1 when order m is static."""
        modulation = self.modulations.get(m)
        return 1.0 if modulation is None else float(modulation(t))

    def tensor(self, m: int, t: float = 0.0) -> np.ndarray:
        """Entries of s_m(t) W^(m)."""
        w = self.W[m - 1]
        entries = w.entries if isinstance(w, Operator) else w
        return self.weight(m, t) * entries

    def __repr__(self) -> str:
        return f"HamiltonianFunctionalSpec({self.realization}, degree={self.degree})"


def _check_state(spec: HamiltonianFunctionalSpec, rho: StateDensity):
    _same_realization(spec.realization, rho.realization)


def _classical_power_pairing(spec: HamiltonianFunctionalSpec, rho: np.ndarray, m: int, t: float) -> float:
    area = spec.realization.grid.cell_area
    flat = rho.reshape(-1)
    if m == 1:
        return float(np.sum(flat * spec.tensor(1, t).reshape(-1)) * area)
    return float(flat @ spec.tensor(2, t) @ flat * area * area)


def gamma_value(spec: HamiltonianFunctionalSpec, data: np.ndarray, t: float = 0.0) -> float:
    """gamma at a raw density array, without state validation."""
    total = 0.0 + 0.0j
    for m in range(1, spec.degree + 1):
        if spec.realization.kind == "quantum":
            value = contract_slots(spec.tensor(m, t), spec.realization.d, m, [data] * m)[0, 0]
        else:
            value = _classical_power_pairing(spec, data, m, t)
        total += value / math.factorial(m)
    return float(np.real(total))


def gamma_eval(spec: HamiltonianFunctionalSpec, rho: StateDensity, t: float = 0.0) -> float:
    """
    gamma(t, rho) = sum_m (1/m!) <rho^{⊗m}, W^(m)(t)>.

    Raises:
        DimensionError: On realization mismatch
    """
    _check_state(spec, rho)
    return gamma_value(spec, rho.data, t)


def derivative_tensor(spec: HamiltonianFunctionalSpec, data: np.ndarray, order: int, t: float = 0.0):
    """D^k gamma at a raw density array (k >= 1), without state validation."""
    realization = spec.realization
    if realization.kind == "quantum":
        d = realization.d
        result = np.zeros((d ** order, d ** order), dtype=complex)
        for m in range(order, spec.degree + 1):
            contracted = contract_slots(spec.tensor(m, t), d, m, [data] * (m - order))
            result += contracted / math.factorial(m - order)
        return result
    grid = realization.grid
    points = grid.n_q * grid.n_p
    if order == 1:
        field = spec.tensor(1, t).astype(float)
        if spec.degree >= 2:
            field = field + (spec.tensor(2, t) @ data.reshape(-1) * grid.cell_area).reshape(grid.shape)
        return field
    if order == 2:
        return spec.tensor(2, t) if spec.degree >= 2 else np.zeros((points, points))
    raise ValueError(f"Classical functionals have no derivative of order {order}")


def functional_derivative(spec: HamiltonianFunctionalSpec, rho: StateDensity, order: int, t: float = 0.0):
    """
    k-th derivative of gamma at rho as a power-k tensor.

    D^k gamma(rho) = sum_{m >= k} 1/(m-k)! <rho^{⊗(m-k)}, W^(m)>, with the
    contraction over the leading slots. Quantum results are d^k × d^k
    arrays; classical ones are a field (k = 1) or the kernel (k = 2).
    Order 0 returns gamma itself.
    """
    _check_state(spec, rho)
    if order < 0:
        raise ValueError("Derivative order must be non-negative")
    if order == 0:
        return gamma_value(spec, rho.data, t)
    return derivative_tensor(spec, rho.data, order, t)


def vlasov_hamiltonian(spec: HamiltonianFunctionalSpec, rho: StateDensity, t: float = 0.0) -> np.ndarray:
    """Mean-field Hamiltonian H(t, rho), the first derivative of gamma."""
    return functional_derivative(spec, rho, 1, t)


def classical_bracket_functionals(
    gamma_spec: HamiltonianFunctionalSpec,
    alpha_spec: HamiltonianFunctionalSpec,
    rho: StateDensity,
    t: float = 0.0,
) -> complex:
    """{gamma, alpha}_cl(rho) = <rho, {D gamma(rho), D alpha(rho)}>."""
    _same_realization(gamma_spec.realization, alpha_spec.realization)
    H = vlasov_hamiltonian(gamma_spec, rho, t)
    A = vlasov_hamiltonian(alpha_spec, rho, t)
    return pairing(rho, rho.realization.poisson(H, A))


def number_functional(realization: Realization) -> HamiltonianFunctionalSpec:
    """nu(rho) = <rho, I>, the linear integral of every Vlasov flow."""
    return HamiltonianFunctionalSpec(realization, [realization.identity()])
