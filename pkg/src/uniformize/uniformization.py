"""
Uniformization - n-particle Hamiltonians, truncated Fock space and the
representing-functional calculus of the uniformized system.

A Hamiltonian functional gamma with tensors W^(m) is replaced by the family
H^(n) = sum_m C(n, m) eps^(m-1) Sym(I^{⊗(n-m)} ⊗ W^(m)) of linear operators
on the symmetric (bosons) or antisymmetric (fermions) n-particle sectors.
Observables of the uniformized system are families {A^(n)} encoded by the
generating functional

    alpha(rho) = exp(-<rho, I>/eps) sum_n <rho^{⊗n}, A^(n)> / (n! eps^(n-1)).
"""
import itertools
import logging
import math
from typing import List, Optional, Sequence, Union

import numpy as np
import scipy.linalg

from .errors import DimensionError, NotPseudoHermitianError
from .hamiltonian_algebra import (
    HamiltonianFunctionalSpec,
    QuantumRealization,
    StateDensity,
    functional_derivative,
    gamma_eval,
)
from .tensor_core import (
    FULL_DIMENSION_CAP,
    HERMITIAN_TOL,
    MAX_PERMUTATION_POWER,
    Ket,
    Metric,
    Operator,
    Sector,
    SpaceLabel,
    contract_slots,
    permute_slots,
    second_quantize,
    sector_dimension,
    symmetric_power,
)

logger = logging.getLogger(__name__)

PRODUCT_KINDS = ("associative", "jordan", "poisson")


class UniformizationParams:
    """
    Coupling epsilon, largest particle sector n_max and exchange parity.
    """

    def __init__(self, epsilon: float, n_max: int, parity: str = "+"):
        if not np.isfinite(epsilon):
            raise ValueError("epsilon must be finite")
        if epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if n_max < 1:
            raise ValueError("n_max must be at least 1")
        self.epsilon = float(epsilon)
        self.n_max = int(n_max)
        self.sector = Sector.from_parity(parity)

    @property
    def parity(self) -> str:
        return self.sector.parity

    def with_epsilon(self, epsilon: float) -> "UniformizationParams":
        return UniformizationParams(epsilon, self.n_max, self.parity)

    def __repr__(self) -> str:
        return (
            f"UniformizationParams(epsilon={self.epsilon}, n_max={self.n_max}, "
            f"parity='{self.parity}')"
        )


def _quantum_spec(spec: HamiltonianFunctionalSpec) -> QuantumRealization:
    if spec.realization.kind != "quantum":
        raise DimensionError("Uniformization needs a quantum realization")
    return spec.realization


def sector_hamiltonian(spec: HamiltonianFunctionalSpec, n: int, epsilon: float, sector: Sector, t: float = 0.0) -> np.ndarray:
    """Dense H^(n) on a sector basis, without truncation checks."""
    realization = _quantum_spec(spec)
    d = realization.d
    dim = sector_dimension(d, n, sector)
    H = np.zeros((dim, dim), dtype=complex)
    for m in range(1, min(n, spec.degree) + 1):
        weight = epsilon ** (m - 1)
        H += weight * second_quantize(spec.tensor(m, t), d, m, n, sector).toarray()
    return H


def build_Hn(spec: HamiltonianFunctionalSpec, n: int, params: UniformizationParams, t: float = 0.0) -> Operator:
    """
    The eps-uniformized n-particle Hamiltonian on the parity sector.

    Args:
        spec: Quantum Hamiltonian functional
        n: Particle number, 0 <= n <= params.n_max
        params: Coupling, truncation and parity
        t: Time at which modulated tensors are sampled

    Returns:
        Metric-Hermitian Operator on sector n

    Raises:
        DimensionError: If n exceeds the truncation
    """
    if not 0 <= n <= params.n_max:
        raise DimensionError(f"Sector n={n} outside truncation 0..{params.n_max}")
    H = sector_hamiltonian(spec, n, params.epsilon, params.sector, t)
    space = SpaceLabel(spec.realization.d, n, params.sector)
    logger.debug("Built H^(%d) on %s, dim %d", n, params.sector.value, space.dim)
    return Operator(space, H, spec.realization.metric)


def slot_symmetrize(entries: np.ndarray, d: int, n: int) -> np.ndarray:
    """Average of a full-power matrix over all n! slot permutations."""
    if n > MAX_PERMUTATION_POWER:
        raise DimensionError(f"Permutation sums are limited to n <= {MAX_PERMUTATION_POWER}")
    total = np.zeros_like(entries, dtype=complex)
    for perm in itertools.permutations(range(n)):
        total += permute_slots(entries, d, n, perm)
    return total / math.factorial(n)


def build_Hn_full(spec: HamiltonianFunctionalSpec, n: int, params: UniformizationParams, t: float = 0.0) -> Operator:
    """
    H^(n) on the full tensor power, built literally as
    sum_m C(n, m) eps^(m-1) Sym(I^{⊗(n-m)} ⊗ W^(m)).

    Limited to n <= MAX_PERMUTATION_POWER; used as the reference for the
    sector construction.
    """
    realization = _quantum_spec(spec)
    d = realization.d
    if not 1 <= n <= MAX_PERMUTATION_POWER:
        raise DimensionError(f"Full-power construction needs 1 <= n <= {MAX_PERMUTATION_POWER}")
    dim = d ** n
    H = np.zeros((dim, dim), dtype=complex)
    for m in range(1, min(n, spec.degree) + 1):
        padded = np.kron(np.eye(d ** (n - m)), spec.tensor(m, t))
        H += math.comb(n, m) * params.epsilon ** (m - 1) * slot_symmetrize(padded, d, n)
    return Operator(SpaceLabel(d, n, Sector.FULL), H, realization.metric)


# ---------------------------------------------------------------------------
# Model builders
# ---------------------------------------------------------------------------


def periodic_laplacian(L: int) -> np.ndarray:
    """-2 on the diagonal plus both cyclic shifts; the L=2 ring counts its bond twice."""
    shift = np.roll(np.eye(L), 1, axis=1)
    return -2 * np.eye(L) + shift + shift.T


def on_site_kernel(L: int, g: float) -> np.ndarray:
    return g * np.eye(L)


def build_lattice_hartree(
    L: int,
    hopping: float,
    omega: np.ndarray,
    onsite: float = 0.0,
    metric: Optional[Metric] = None,
) -> HamiltonianFunctionalSpec:
    """
    Lattice Hartree functional on a periodic ring of L sites.

    Args:
        L: Number of sites, at least 2
        hopping: Coefficient of the negative discrete Laplacian
        omega: Real symmetric L×L two-body kernel
        onsite: Constant single-particle potential
        metric: Optional metric on C^L

    Returns:
        Spec with W1 = -hopping·Lap + onsite·I and W2 diagonal with
        <x1 x2|W2|x1 x2> = omega[x1, x2]
    """
    if L < 2:
        raise ValueError("Lattice needs at least 2 sites")
    omega = np.asarray(omega, dtype=float)
    if omega.shape != (L, L):
        raise ValueError(f"Kernel omega must have shape ({L}, {L})")
    if not np.allclose(omega, omega.T, atol=1e-12):
        raise ValueError("Kernel omega must be symmetric")
    W1 = -hopping * periodic_laplacian(L) + onsite * np.eye(L)
    W2 = np.diag(omega.reshape(-1)).astype(complex)
    return HamiltonianFunctionalSpec(QuantumRealization(L, metric), [W1, W2])


def build_two_mode(g: float, metric: Optional[Metric] = None) -> HamiltonianFunctionalSpec:
    """Two-mode model W1 = sigma_z, W2 = g (|00><00| + |11><11|)."""
    W1 = np.diag([1.0, -1.0])
    W2 = g * np.diag([1.0, 0.0, 0.0, 1.0])
    return HamiltonianFunctionalSpec(QuantumRealization(2, metric), [W1, W2])


def lattice_momentum(L: int) -> np.ndarray:
    """
    Hermitian quasi-momentum on the ring, diagonal in the plane-wave basis
    e^{i k x}/sqrt(L) with k = 2 pi j / L wrapped into (-pi, pi].
    """
    if L < 2:
        raise ValueError("Lattice needs at least 2 sites")
    x = np.arange(L)
    k = 2 * np.pi * np.arange(L) / L
    k = np.where(k > np.pi + 1e-12, k - 2 * np.pi, k)
    F = np.exp(1j * np.outer(x, k)) / np.sqrt(L)
    return F @ np.diag(k) @ F.conj().T


def plane_wave(L: int, j: int, norm: float = 1.0) -> np.ndarray:
    """Plane wave with momentum 2 pi j / L and squared norm `norm`."""
    x = np.arange(L)
    return np.sqrt(norm / L) * np.exp(2j * np.pi * j * x / L)


# ---------------------------------------------------------------------------
# Truncated Fock space
# ---------------------------------------------------------------------------


class FockTruncation:
    """
    Direct sum of the n-particle sectors n = 0..n_max over C^d.

    parity '+' or '-' picks the (anti)symmetric sectors. Sector.FULL keeps
    the whole tensor powers, capped at d**n_max <= FULL_DIMENSION_CAP; only
    full-power functionals can be evaluated on mixed densities.
    """

    def __init__(self, d: int, parity: Union[str, Sector] = "+", n_max: int = 4, metric: Optional[Metric] = None):
        if d < 1:
            raise DimensionError("Single-particle dimension d must be positive")
        if n_max < 1:
            raise ValueError("n_max must be at least 1")
        self.d = d
        self.sector = Sector.from_parity(parity)
        if self.sector is Sector.FULL and d ** n_max > FULL_DIMENSION_CAP:
            raise DimensionError(
                f"Full power dimension {d ** n_max} at n_max={n_max} exceeds cap {FULL_DIMENSION_CAP}"
            )
        self.n_max = n_max
        self.metric = metric if metric is not None else Metric.identity(d)
        self.spaces = [SpaceLabel(d, n, self.sector) for n in range(n_max + 1)]

    @classmethod
    def from_params(cls, d: int, params: UniformizationParams, metric: Optional[Metric] = None) -> "FockTruncation":
        return cls(d, params.parity, params.n_max, metric)

    @classmethod
    def full(cls, d: int, n_max: int, metric: Optional[Metric] = None) -> "FockTruncation":
        return cls(d, Sector.FULL, n_max, metric)

    @property
    def parity(self) -> str:
        return self.sector.parity

    @property
    def is_full(self) -> bool:
        return self.sector is Sector.FULL

    @property
    def dims(self) -> List[int]:
        return [space.dim for space in self.spaces]

    @property
    def total_dim(self) -> int:
        return sum(self.dims)

    def sector_metric(self, n: int) -> np.ndarray:
        return self.metric.sector_matrix(n, self.sector)

    def identity(self) -> "BlockOperator":
        return BlockOperator(self, [np.eye(dim, dtype=complex) for dim in self.dims])

    def zeros(self) -> "BlockOperator":
        return BlockOperator(self, [np.zeros((dim, dim), dtype=complex) for dim in self.dims])

    def __eq__(self, other) -> bool:
        if not isinstance(other, FockTruncation):
            return NotImplemented
        return (self.d, self.sector, self.n_max, self.metric) == (other.d, other.sector, other.n_max, other.metric)

    def __repr__(self) -> str:
        label = "full" if self.is_full else f"parity='{self.parity}'"
        return f"FockTruncation(d={self.d}, {label}, n_max={self.n_max})"


class BlockOperator:
    """Number-conserving operator stored as one dense block per sector."""

    def __init__(self, fock: FockTruncation, blocks: Sequence[np.ndarray]):
        if len(blocks) != fock.n_max + 1:
            raise DimensionError(f"Expected {fock.n_max + 1} blocks, got {len(blocks)}")
        checked = []
        for n, (block, dim) in enumerate(zip(blocks, fock.dims)):
            block = np.asarray(block, dtype=complex).reshape(dim, dim) if np.ndim(block) == 0 else np.asarray(block, dtype=complex)
            if block.shape != (dim, dim):
                raise DimensionError(f"Block {n} has shape {block.shape}, sector dimension is {dim}")
            checked.append(block)
        self.fock = fock
        self.blocks = checked

    def __getitem__(self, n: int) -> np.ndarray:
        return self.blocks[n]

    def _check(self, other: "BlockOperator"):
        if self.fock != other.fock:
            raise DimensionError("Block operators live on different Fock truncations")

    def __add__(self, other: "BlockOperator") -> "BlockOperator":
        self._check(other)
        return BlockOperator(self.fock, [a + b for a, b in zip(self.blocks, other.blocks)])

    def __sub__(self, other: "BlockOperator") -> "BlockOperator":
        self._check(other)
        return BlockOperator(self.fock, [a - b for a, b in zip(self.blocks, other.blocks)])

    def __matmul__(self, other: "BlockOperator") -> "BlockOperator":
        self._check(other)
        return BlockOperator(self.fock, [a @ b for a, b in zip(self.blocks, other.blocks)])

    def scale(self, factor: complex) -> "BlockOperator":
        return BlockOperator(self.fock, [factor * a for a in self.blocks])

    def commutator(self, other: "BlockOperator") -> "BlockOperator":
        return self @ other - other @ self

    def max_norm(self) -> float:
        return max(float(np.linalg.norm(block)) for block in self.blocks)

    def dense(self) -> np.ndarray:
        return scipy.linalg.block_diag(*self.blocks)

    def __repr__(self) -> str:
        return f"BlockOperator({self.fock})"


def _check_single_particle(A: np.ndarray, d: int, metric: Metric) -> np.ndarray:
    A = np.asarray(A, dtype=complex)
    if A.shape != (d, d):
        raise DimensionError(f"Single-particle operator must be {d}×{d}, got {A.shape}")
    J = metric.J
    residual = float(np.linalg.norm(J @ A - A.conj().T @ J))
    if residual > HERMITIAN_TOL * max(1.0, float(np.linalg.norm(A))):
        raise NotPseudoHermitianError("Single-particle operator is not metric-Hermitian", residual)
    return A


def _full_one_body(A: np.ndarray, d: int, n: int) -> np.ndarray:
    """sum_i A acting on slot i of the full n-fold power."""
    total = np.zeros((d ** n, d ** n), dtype=complex)
    for i in range(n):
        total += np.kron(np.kron(np.eye(d ** i), A), np.eye(d ** (n - 1 - i)))
    return total


def number_observable(A: np.ndarray, fock: FockTruncation) -> BlockOperator:
    """
    Second-quantized one-body observable n^(A), acting on sector n as the
    sector restriction of sum_i A_i (zero on sector 0).

    Raises:
        DimensionError: If A is not d×d
        NotPseudoHermitianError: If A is not metric-Hermitian
    """
    A = _check_single_particle(A, fock.d, fock.metric)
    if fock.is_full:
        blocks = [_full_one_body(A, fock.d, n) for n in range(fock.n_max + 1)]
    else:
        blocks = [second_quantize(A, fock.d, 1, n, fock.sector).toarray() for n in range(fock.n_max + 1)]
    return BlockOperator(fock, blocks)


def hamiltonian_blocks(spec: HamiltonianFunctionalSpec, params: UniformizationParams, t: float = 0.0,
                       full_powers: bool = False) -> BlockOperator:
    """
    The Fock-space Hamiltonian, H^(n) on every sector of the truncation.

    With full_powers the blocks are the literal full-power H^(n), so n_max
    is limited to MAX_PERMUTATION_POWER.
    """
    d, metric = spec.realization.d, spec.realization.metric
    if not full_powers:
        fock = FockTruncation.from_params(d, params, metric)
        return BlockOperator(fock, [build_Hn(spec, n, params, t).entries for n in range(params.n_max + 1)])
    fock = FockTruncation.full(d, params.n_max, metric)
    blocks = [np.zeros((1, 1), dtype=complex)]
    blocks += [build_Hn_full(spec, n, params, t).entries for n in range(1, params.n_max + 1)]
    return BlockOperator(fock, blocks)


# ---------------------------------------------------------------------------
# Representing functionals
# ---------------------------------------------------------------------------


class PolyFunctional:
    """
    A family {A^(n)}, n = 0..n_max, of sector operators together with the
    coupling epsilon used by its generating functional. A^(0) is a scalar,
    stored as a 1×1 block.
    """

    def __init__(self, epsilon: float, components: BlockOperator):
        if not np.isfinite(epsilon):
            raise ValueError("epsilon must be finite")
        if epsilon <= 0:
            raise ValueError("epsilon must be positive")
        self.epsilon = float(epsilon)
        self.components = components

    @property
    def fock(self) -> FockTruncation:
        return self.components.fock

    @property
    def n_max(self) -> int:
        return self.fock.n_max

    def __repr__(self) -> str:
        return f"PolyFunctional(epsilon={self.epsilon}, {self.fock})"


def functional_encode(
    components: Union[BlockOperator, Sequence],
    epsilon: float,
    fock: Optional[FockTruncation] = None,
) -> PolyFunctional:
    """
    Wrap sector components into a representing functional.

    Args:
        components: A BlockOperator, or a list [A^(0), A^(1), ...] of a
            scalar followed by sector Operators or arrays
        epsilon: Coupling of the generating functional
        fock: Truncation, needed only when no component is an Operator

    Raises:
        ValueError: If epsilon is not positive
        DimensionError: If the truncation cannot be inferred or shapes mismatch
    """
    if not np.isfinite(epsilon) or epsilon <= 0:
        raise ValueError("epsilon must be positive")
    if isinstance(components, BlockOperator):
        return PolyFunctional(epsilon, components)
    components = list(components)
    if fock is None:
        operators = [c for c in components if isinstance(c, Operator)]
        if not operators:
            raise DimensionError("Cannot infer the Fock truncation; pass fock=")
        first = operators[0]
        fock = FockTruncation(first.space.d, first.space.sector, len(components) - 1, first.metric)
    blocks = [c.entries if isinstance(c, Operator) else np.atleast_2d(np.asarray(c, dtype=complex)) for c in components]
    return PolyFunctional(epsilon, BlockOperator(fock, blocks))


def functional_decode(f: PolyFunctional) -> List[np.ndarray]:
    """The stored components, A^(0) first."""
    return [block.copy() for block in f.components.blocks]


def _state_argument(rho, d: int):
    """(psi, None) for pure inputs, (None, density) for mixed ones."""
    if isinstance(rho, StateDensity):
        if rho.ket is not None:
            psi = rho.ket
        else:
            psi, rho = None, rho.data
    elif isinstance(rho, Ket):
        psi = rho.amplitudes
    else:
        array = np.asarray(rho, dtype=complex)
        psi = None if array.ndim == 2 and array.shape[0] == array.shape[1] > 1 else array.reshape(-1)
        rho = array
    if psi is None:
        density = np.asarray(rho, dtype=complex)
        if density.shape != (d, d):
            raise DimensionError(f"Density of shape {density.shape} does not act on C^{d}")
        return None, density
    if psi.shape[0] != d:
        raise DimensionError(f"State lives on C^{psi.shape[0]}, functional on C^{d}")
    return psi, None


def _power_vector(psi: np.ndarray, n: int, sector: Sector) -> np.ndarray:
    if sector is not Sector.FULL:
        return symmetric_power(psi, n, sector)
    power = np.ones(1, dtype=complex)
    for _ in range(n):
        power = np.kron(power, psi)
    return power


def power_expectations(f: PolyFunctional, psi: np.ndarray) -> np.ndarray:
    """<rho^{⊗n}, A^(n)> for rho = psi psi^* and n = 0..n_max."""
    fock = f.fock
    values = np.zeros(fock.n_max + 1, dtype=complex)
    for n in range(fock.n_max + 1):
        c = _power_vector(psi, n, fock.sector)
        if not np.any(c):
            continue
        values[n] = c.conj() @ fock.sector_metric(n) @ f.components[n] @ c
    return values


def mixed_power_expectations(f: PolyFunctional, density: np.ndarray) -> np.ndarray:
    """
    Tr(rho^{⊗n} A^(n)) for a general density rho and n = 0..n_max.

    Raises:
        ValueError: If f stores sector components; those only represent
            pure states
    """
    fock = f.fock
    if not fock.is_full:
        raise ValueError(
            "Sector components represent functionals on pure states psi psi^* only; "
            "build the functional on FockTruncation.full to evaluate mixed densities"
        )
    values = np.zeros(fock.n_max + 1, dtype=complex)
    values[0] = f.components[0][0, 0]
    for n in range(1, fock.n_max + 1):
        values[n] = contract_slots(f.components[n], fock.d, n, [density] * n)[0, 0]
    return values


def series_weights(u: float, epsilon: float, n_max: int) -> np.ndarray:
    """exp(-u/eps) / (n! eps^(n-1)) for n = 0..n_max, computed in log space."""
    n = np.arange(n_max + 1)
    logs = -u / epsilon - np.array([math.lgamma(k + 1) for k in n]) - (n - 1) * math.log(epsilon)
    return np.exp(logs)


def functional_eval(f: PolyFunctional, rho) -> complex:
    """
    Evaluate the generating functional at a state.

    Pure states go through the coordinates of psi^{⊗n}. Mixed densities (a
    StateDensity without a ket, or a d×d array) need full-power components,
    see FockTruncation.full.

    Args:
        f: Representing functional
        rho: StateDensity, Ket, amplitude vector or d×d density matrix

    Returns:
        exp(-<rho,I>/eps) sum_n <rho^{⊗n}, A^(n)> / (n! eps^(n-1))

    Raises:
        DimensionError: On a dimension mismatch
        ValueError: For a mixed density and sector components
    """
    d = f.fock.d
    psi, density = _state_argument(rho, d)
    if density is None:
        u = float(np.real(psi.conj() @ f.fock.metric.J @ psi))
        expectations = power_expectations(f, psi)
    else:
        u = float(np.real(np.trace(density)))
        expectations = mixed_power_expectations(f, density)
    return complex(np.sum(series_weights(u, f.epsilon, f.n_max) * expectations))


def spec_functional(spec: HamiltonianFunctionalSpec, params: UniformizationParams, t: float = 0.0,
                    full_powers: bool = False) -> PolyFunctional:
    """Representing functional of gamma itself: components H^(n), zero at n = 0."""
    return PolyFunctional(params.epsilon, hamiltonian_blocks(spec, params, t, full_powers))


def linear_observable(A: np.ndarray, params: UniformizationParams, metric: Optional[Metric] = None,
                      full_powers: bool = False) -> PolyFunctional:
    """Representing functional of <rho, A>: components n^(A)."""
    A = np.asarray(A, dtype=complex)
    if full_powers:
        fock = FockTruncation.full(A.shape[0], params.n_max, metric)
    else:
        fock = FockTruncation.from_params(A.shape[0], params, metric)
    return PolyFunctional(params.epsilon, number_observable(A, fock))


def unit_functional(fock: FockTruncation, epsilon: float) -> PolyFunctional:
    """Identity on every sector; evaluates to eps and is the unit of the products."""
    return PolyFunctional(epsilon, fock.identity())


def _check_pair(f: PolyFunctional, g: PolyFunctional):
    if f.epsilon != g.epsilon:
        raise ValueError(f"Functionals use different epsilon: {f.epsilon} vs {g.epsilon}")
    if f.fock != g.fock:
        raise DimensionError("Functionals live on different Fock truncations")


def uniformized_product(f: PolyFunctional, g: PolyFunctional) -> PolyFunctional:
    """Associative product: components F^(n) G^(n)."""
    _check_pair(f, g)
    return PolyFunctional(f.epsilon, f.components @ g.components)


def uniformized_jordan(f: PolyFunctional, g: PolyFunctional) -> PolyFunctional:
    """Jordan product: components (F^(n) G^(n) + G^(n) F^(n)) / 2."""
    _check_pair(f, g)
    symmetric = (f.components @ g.components + g.components @ f.components).scale(0.5)
    return PolyFunctional(f.epsilon, symmetric)


def uniformized_poisson(f: PolyFunctional, g: PolyFunctional) -> PolyFunctional:
    """Poisson bracket: components i[F^(n), G^(n)]."""
    _check_pair(f, g)
    return PolyFunctional(f.epsilon, f.components.commutator(g.components).scale(1j))


def _full_power_product(X: np.ndarray, Y: np.ndarray, kind: str) -> np.ndarray:
    if kind == "associative":
        return X @ Y
    if kind == "jordan":
        return 0.5 * (X @ Y + Y @ X)
    if kind == "poisson":
        return 1j * (X @ Y - Y @ X)
    raise ValueError(f"Product kind must be one of {PRODUCT_KINDS}, got {kind!r}")


def functional_product_expansion(
    gamma_spec: HamiltonianFunctionalSpec,
    alpha_spec: HamiltonianFunctionalSpec,
    rho: StateDensity,
    epsilon: float,
    kind: str = "jordan",
    t: float = 0.0,
) -> complex:
    """
    Functional side of the uniformized products,

        sum_k eps^(k-1)/k! <rho^{⊗k}, D^k gamma(rho) * D^k alpha(rho)>,

    with * the associative, Jordan or bracket product of full-power
    operators. The series stops at the larger of the two degrees.
    """
    if kind not in PRODUCT_KINDS:
        raise ValueError(f"Product kind must be one of {PRODUCT_KINDS}, got {kind!r}")
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    realization = _quantum_spec(gamma_spec)
    if alpha_spec.realization != realization or rho.realization != realization:
        raise DimensionError("Functionals and state use different realizations")
    d = realization.d
    total = 0.0 + 0.0j
    if kind != "poisson":
        total += gamma_eval(gamma_spec, rho, t) * gamma_eval(alpha_spec, rho, t) / epsilon
    for k in range(1, max(gamma_spec.degree, alpha_spec.degree) + 1):
        X = functional_derivative(gamma_spec, rho, k, t)
        Y = functional_derivative(alpha_spec, rho, k, t)
        product = _full_power_product(X, Y, kind)
        value = contract_slots(product, d, k, [rho.data] * k)[0, 0]
        total += epsilon ** (k - 1) / math.factorial(k) * value
    return complex(total)


def tensor_power_product(X: np.ndarray, Y: np.ndarray, n: int) -> np.ndarray:
    """Product of primitive elements: (X·Y)^{⊗n}, · the Jordan product."""
    jordan = 0.5 * (X @ Y + Y @ X)
    result = np.ones((1, 1), dtype=complex)
    for _ in range(n):
        result = np.kron(result, jordan)
    return result


def tensor_power_bracket(X: np.ndarray, Y: np.ndarray, n: int) -> np.ndarray:
    """
    Bracket of primitive elements X^{⊗n}, Y^{⊗n} by the derivation rule:
    sum_j (X·Y)^{⊗(j)} ⊗ {X, Y} ⊗ (X·Y)^{⊗(n-j-1)}.
    """
    jordan = 0.5 * (X @ Y + Y @ X)
    bracket = 1j * (X @ Y - Y @ X)
    d = X.shape[0]
    total = np.zeros((d ** n, d ** n), dtype=complex)
    for j in range(n):
        term = np.ones((1, 1), dtype=complex)
        for slot in range(n):
            term = np.kron(term, bracket if slot == j else jordan)
        total += term
    return total
