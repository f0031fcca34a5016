"""
TensorCore - Dense tensor-power spaces, symmetric sectors and propagators.

Full tensor powers (C^d)^{⊗n} are indexed with the first slot slowest, the
same convention as numpy.kron. Symmetric sectors are indexed by occupation
vectors (n_1, ..., n_d) in descending lexicographic order; antisymmetric
sectors by 0/1 occupation vectors in the same order, which is the order of
strictly increasing index sets.
"""
import itertools
import logging
import math
from enum import Enum
from functools import lru_cache
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.linalg
import scipy.sparse as sp
from scipy.special import comb

from .errors import (
    DimensionError,
    NonCommutingError,
    NotPseudoHermitianError,
    NumericalGuardError,
)

logger = logging.getLogger(__name__)

COMMUTATION_TOL = 1e-10
HERMITIAN_TOL = 1e-10
UNITARITY_TOL = 1e-9
MAX_PERMUTATION_POWER = 6
FULL_DIMENSION_CAP = 4096
SECTOR_DIMENSION_CAP = 5000


class Sector(Enum):
    """Which subspace of the n-fold tensor power a space label refers to."""

    FULL = "full"
    SYMMETRIC = "symmetric"
    ANTISYMMETRIC = "antisymmetric"

    @classmethod
    def from_parity(cls, parity: Union[str, "Sector"]) -> "Sector":
        """
        Map a parity flag to a sector.

        Args:
            parity: '+' (bosons), '-' (fermions) or an existing Sector

        Returns:
            The matching Sector
        """
        if isinstance(parity, Sector):
            return parity
        if parity == "+":
            return cls.SYMMETRIC
        if parity == "-":
            return cls.ANTISYMMETRIC
        raise ValueError(f"Parity must be '+' or '-', got {parity!r}")

    @property
    def parity(self) -> str:
        if self is Sector.SYMMETRIC:
            return "+"
        if self is Sector.ANTISYMMETRIC:
            return "-"
        raise ValueError("The full sector has no parity")


def sector_dimension(d: int, n: int, sector: Sector) -> int:
    """Dimension of the n-particle space over C^d in the given sector."""
    if sector is Sector.FULL:
        return d ** n
    if sector is Sector.SYMMETRIC:
        return int(comb(n + d - 1, n, exact=True))
    return int(comb(d, n, exact=True))


class SpaceLabel:
    """
    Labels a tensor space: single-particle dimension d, power n and sector.
    """

    __slots__ = ("d", "n", "sector")

    def __init__(self, d: int, n: int, sector: Sector = Sector.FULL):
        if d < 1:
            raise DimensionError("Single-particle dimension d must be positive")
        if n < 0:
            raise DimensionError("Tensor power n must be non-negative")
        self.d = int(d)
        self.n = int(n)
        self.sector = Sector(sector)

    @property
    def dim(self) -> int:
        return sector_dimension(self.d, self.n, self.sector)

    def __eq__(self, other) -> bool:
        if not isinstance(other, SpaceLabel):
            return NotImplemented
        return (self.d, self.n, self.sector) == (other.d, other.n, other.sector)

    def __hash__(self) -> int:
        return hash((self.d, self.n, self.sector))

    def __repr__(self) -> str:
        return f"SpaceLabel(d={self.d}, n={self.n}, sector={self.sector.value})"


def _require_finite(array: np.ndarray, name: str):
    if not np.all(np.isfinite(array)):
        raise ValueError(f"{name} must be finite")


class Metric:
    """
    Hermitian invertible d×d matrix J defining the (possibly indefinite)
    scalar product <x, y>_J = x^H J y on the single-particle space.
    """

    def __init__(self, J: np.ndarray):
        J = np.array(J, dtype=complex)
        if J.ndim != 2 or J.shape[0] != J.shape[1] or J.shape[0] == 0:
            raise DimensionError("Metric J must be a non-empty square matrix")
        _require_finite(J, "Metric J")
        if np.linalg.norm(J - J.conj().T) > HERMITIAN_TOL * max(1.0, np.linalg.norm(J)):
            raise ValueError("Metric J must be Hermitian")
        if abs(np.linalg.det(J)) < 1e-12:
            raise ValueError("Metric J must be invertible")
        J.setflags(write=False)
        self.J = J
        self.d = J.shape[0]
        eigenvalues = np.linalg.eigvalsh(J)
        self._definite_sign = 0
        if np.all(eigenvalues > 0):
            self._definite_sign = 1
        elif np.all(eigenvalues < 0):
            self._definite_sign = -1

    @classmethod
    def identity(cls, d: int) -> "Metric":
        return cls(np.eye(d))

    @classmethod
    def signature(cls, signs: Sequence[int]) -> "Metric":
        """Diagonal metric with entries ±1, e.g. signature([1, -1])."""
        if not all(s in (1, -1) for s in signs):
            raise ValueError("Signature entries must be +1 or -1")
        return cls(np.diag(np.asarray(signs, dtype=float)))

    @property
    def is_identity(self) -> bool:
        return bool(np.array_equal(self.J, np.eye(self.d)))

    @property
    def is_diagonal(self) -> bool:
        return bool(np.count_nonzero(self.J - np.diag(np.diag(self.J))) == 0)

    @property
    def is_definite(self) -> bool:
        return self._definite_sign != 0

    @property
    def definite_sign(self) -> int:
        """+1 or -1 for a definite metric, 0 for an indefinite one."""
        return self._definite_sign

    def sector_matrix(self, n: int, sector: Sector = Sector.FULL) -> np.ndarray:
        """
        The metric induced on the n-particle space, J^{⊗n} restricted to a sector.

        Args:
            n: Tensor power
            sector: Which subspace of the tensor power

        Returns:
            Hermitian matrix of size sector_dimension(d, n, sector)
        """
        sector = Sector(sector)
        if self.is_diagonal:
            diag = np.real(np.diag(self.J))
            if sector is Sector.FULL:
                values = np.ones(1)
                for _ in range(n):
                    values = np.kron(values, diag)
            else:
                occs = occupations(self.d, n, sector)
                values = np.array([np.prod(diag ** np.array(occ)) for occ in occs])
            return np.diag(values.astype(complex))
        if self.d ** n > FULL_DIMENSION_CAP:
            raise DimensionError(
                f"Full power dimension {self.d ** n} exceeds cap {FULL_DIMENSION_CAP}"
            )
        full = np.ones((1, 1), dtype=complex)
        for _ in range(n):
            full = np.kron(full, self.J)
        if sector is Sector.FULL:
            return full
        S = sector_isometry(self.d, n, sector.parity)
        return S.conj().T @ full @ S

    def __eq__(self, other) -> bool:
        if not isinstance(other, Metric):
            return NotImplemented
        return self.d == other.d and bool(np.array_equal(self.J, other.J))

    def __hash__(self) -> int:
        return hash((self.d, self.J.tobytes()))

    def __repr__(self) -> str:
        if self.is_diagonal:
            return f"Metric(signature={np.real(np.diag(self.J)).tolist()})"
        return f"Metric(d={self.d})"


class Operator:
    """
    Dense square complex matrix acting on a labeled tensor space.
    """

    def __init__(self, space: SpaceLabel, entries: np.ndarray, metric: Optional[Metric] = None):
        entries = np.array(entries, dtype=complex)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise DimensionError("Operator entries must be a square matrix")
        if entries.shape[0] != space.dim:
            raise DimensionError(
                f"Operator size {entries.shape[0]} does not match {space} (dim {space.dim})"
            )
        _require_finite(entries, "Operator entries")
        if metric is None:
            metric = Metric.identity(space.d)
        if metric.d != space.d:
            raise DimensionError("Metric dimension does not match the space")
        self.space = space
        self.entries = entries
        self.metric = metric

    @property
    def dim(self) -> int:
        return self.space.dim

    def metric_matrix(self) -> np.ndarray:
        """Metric of the space this operator acts on."""
        return self.metric.sector_matrix(self.space.n, self.space.sector)

    def pseudo_adjoint(self) -> "Operator":
        """G^{-1} A^H G, the adjoint with respect to the induced metric."""
        G = self.metric_matrix()
        adjoint = np.linalg.solve(G, self.entries.conj().T @ G) if self.dim else self.entries
        return Operator(self.space, adjoint, self.metric)

    def hermiticity_residual(self) -> float:
        """Norm of G A - A^H G; zero for a metric-Hermitian operator."""
        G = self.metric_matrix()
        return float(np.linalg.norm(G @ self.entries - self.entries.conj().T @ G))

    def is_pseudo_hermitian(self, tol: float = HERMITIAN_TOL) -> bool:
        return self.hermiticity_residual() <= tol * max(1.0, np.linalg.norm(self.entries))

    def with_entries(self, entries: np.ndarray) -> "Operator":
        return Operator(self.space, entries, self.metric)

    def __repr__(self) -> str:
        return f"Operator({self.space}, metric={self.metric})"


class Ket:
    """
    A vector of amplitudes on a labeled space.
    """

    def __init__(self, space: SpaceLabel, amplitudes: np.ndarray):
        amplitudes = np.array(amplitudes, dtype=complex).reshape(-1)
        if amplitudes.shape[0] != space.dim:
            raise DimensionError(
                f"Ket length {amplitudes.shape[0]} does not match {space} (dim {space.dim})"
            )
        _require_finite(amplitudes, "Ket amplitudes")
        self.space = space
        self.amplitudes = amplitudes

    @classmethod
    def single(cls, amplitudes: Sequence[complex]) -> "Ket":
        """A single-particle ket on C^d."""
        amplitudes = np.asarray(amplitudes, dtype=complex).reshape(-1)
        return cls(SpaceLabel(amplitudes.shape[0], 1), amplitudes)

    def j_norm(self, metric: Optional[Metric] = None) -> float:
        """psi^H G psi for the metric induced on this space (may be negative)."""
        if metric is None:
            metric = Metric.identity(self.space.d)
        G = metric.sector_matrix(self.space.n, self.space.sector)
        return float(np.real(self.amplitudes.conj() @ G @ self.amplitudes))

    def __repr__(self) -> str:
        return f"Ket({self.space}, amplitudes={np.round(self.amplitudes, 6).tolist()})"


# ---------------------------------------------------------------------------
# Occupation bases and sector isometries
# ---------------------------------------------------------------------------


def _descending_compositions(total: int, parts: int, cap: int) -> List[Tuple[int, ...]]:
    if parts == 1:
        return [(total,)] if total <= cap else []
    result = []
    for first in range(min(total, cap), -1, -1):
        for rest in _descending_compositions(total - first, parts - 1, cap):
            result.append((first,) + rest)
    return result


@lru_cache(maxsize=None)
def occupations(d: int, n: int, sector: Sector) -> Tuple[Tuple[int, ...], ...]:
    """
    Basis labels of a symmetric or antisymmetric sector.

    Args:
        d: Single-particle dimension
        n: Particle number
        sector: SYMMETRIC or ANTISYMMETRIC

    Returns:
        Occupation vectors in descending lexicographic order
    """
    sector = Sector(sector)
    if sector is Sector.FULL:
        raise ValueError("The full sector is not indexed by occupations")
    if n < 0:
        return ()
    cap = n if sector is Sector.SYMMETRIC else 1
    return tuple(_descending_compositions(n, d, cap))


@lru_cache(maxsize=None)
def occupation_index(d: int, n: int, sector: Sector) -> Dict[Tuple[int, ...], int]:
    return {occ: i for i, occ in enumerate(occupations(d, n, sector))}


def _permutation_sign(indices: Sequence[int]) -> int:
    sign = 1
    values = list(indices)
    for i in range(len(values)):
        for j in range(i + 1, len(values)):
            if values[i] > values[j]:
                sign = -sign
    return sign


@lru_cache(maxsize=64)
def _isometry(d: int, n: int, sector: Sector) -> np.ndarray:
    full_dim = d ** n
    if full_dim > FULL_DIMENSION_CAP:
        raise DimensionError(
            f"Full power dimension {full_dim} exceeds cap {FULL_DIMENSION_CAP}; "
            "use sector-basis operations instead"
        )
    index = occupation_index(d, n, sector)
    S = np.zeros((full_dim, len(index)))
    log_n_factorial = math.lgamma(n + 1)
    for row, slots in enumerate(itertools.product(range(d), repeat=n)):
        occ = tuple(int(c) for c in np.bincount(np.asarray(slots, dtype=int), minlength=d)) if n else (0,) * d
        if sector is Sector.SYMMETRIC:
            log_weight = sum(math.lgamma(k + 1) for k in occ) - log_n_factorial
            S[row, index[occ]] = math.exp(0.5 * log_weight)
        else:
            if max(occ) > 1:
                continue
            S[row, index[occ]] = _permutation_sign(slots) / math.sqrt(math.factorial(n))
    S.setflags(write=False)
    return S


def sector_isometry(d: int, n: int, parity: Union[str, Sector]) -> np.ndarray:
    """
    Isometry S from a sector onto its range in the full tensor power.

    S^H S is the identity on the sector and S S^H is the symmetrizer.

    Args:
        d: Single-particle dimension
        n: Tensor power
        parity: '+' for the symmetric sector, '-' for the antisymmetric one

    Returns:
        Read-only real array of shape (d**n, sector dimension)
    """
    if d < 1 or n < 0:
        raise DimensionError("sector_isometry needs d >= 1 and n >= 0")
    return _isometry(d, n, Sector.from_parity(parity))


def permute_slots(entries: np.ndarray, d: int, n: int, perm: Sequence[int]) -> np.ndarray:
    """Conjugate a full-power matrix by the slot permutation perm."""
    perm = tuple(perm)
    tensor = np.asarray(entries).reshape((d,) * (2 * n))
    axes = perm + tuple(n + p for p in perm)
    return tensor.transpose(axes).reshape(d ** n, d ** n)


def symmetrizer(d: int, n: int, parity: Union[str, Sector], metric: Optional[Metric] = None) -> Operator:
    """
    Orthogonal projector onto the symmetric or antisymmetric subspace.

    Built as the explicit average over all n! slot permutations.

    Args:
        d: Single-particle dimension
        n: Tensor power, at most MAX_PERMUTATION_POWER
        parity: '+' or '-'
        metric: Metric attached to the returned operator

    Returns:
        Projector on the full tensor power

    Raises:
        DimensionError: If n exceeds MAX_PERMUTATION_POWER
    """
    sector = Sector.from_parity(parity)
    if d < 1 or n < 0:
        raise DimensionError("symmetrizer needs d >= 1 and n >= 0")
    if n > MAX_PERMUTATION_POWER:
        raise DimensionError(
            f"Permutation sums are limited to n <= {MAX_PERMUTATION_POWER}, got {n}"
        )
    full_dim = d ** n
    if full_dim > FULL_DIMENSION_CAP:
        raise DimensionError(f"Full power dimension {full_dim} exceeds cap {FULL_DIMENSION_CAP}")
    identity = np.eye(full_dim)
    total = np.zeros((full_dim, full_dim))
    for perm in itertools.permutations(range(n)):
        moved = identity.reshape((d,) * n + (full_dim,)).transpose(perm + (n,)).reshape(full_dim, full_dim)
        sign = _permutation_sign(perm) if sector is Sector.ANTISYMMETRIC else 1
        total += sign * moved
    total /= math.factorial(n)
    return Operator(SpaceLabel(d, n, Sector.FULL), total, metric)


def compress(A: Operator, parity: Union[str, Sector], tol: float = COMMUTATION_TOL) -> Operator:
    """
    Restrict a permutation-commuting full-power operator to a sector.

    Args:
        A: Operator on the full tensor power
        parity: '+' or '-'
        tol: Commutation tolerance, relative to max(1, ||A||)

    Returns:
        S^H A S on the sector basis

    Raises:
        NonCommutingError: If A does not commute with the symmetrizer
    """
    if A.space.sector is not Sector.FULL:
        raise DimensionError("compress expects an operator on the full tensor power")
    sector = Sector.from_parity(parity)
    S = sector_isometry(A.space.d, A.space.n, sector)
    P = S @ S.T
    commutator = float(np.linalg.norm(P @ A.entries - A.entries @ P))
    if commutator > tol * max(1.0, float(np.linalg.norm(A.entries))):
        raise NonCommutingError("Operator does not commute with the symmetrizer", commutator)
    return Operator(SpaceLabel(A.space.d, A.space.n, sector), S.T @ A.entries @ S, A.metric)


def embed(A: Operator) -> Operator:
    """Inverse of compress: S A S^H on the full tensor power."""
    if A.space.sector is Sector.FULL:
        raise DimensionError("embed expects an operator on a sector")
    S = sector_isometry(A.space.d, A.space.n, A.space.sector)
    return Operator(SpaceLabel(A.space.d, A.space.n, Sector.FULL), S @ A.entries @ S.T, A.metric)


def kron(A: Operator, B: Operator) -> Operator:
    """
    Tensor product of two full-power operators, A's indices slowest.

    Raises:
        DimensionError: On sector or single-particle dimension mismatch
    """
    if A.space.sector is not Sector.FULL or B.space.sector is not Sector.FULL:
        raise DimensionError("kron is defined on full tensor powers only")
    if A.space.d != B.space.d:
        raise DimensionError(
            f"Single-particle dimensions differ: {A.space.d} vs {B.space.d}"
        )
    if A.metric != B.metric:
        raise DimensionError("kron operands carry different metrics")
    space = SpaceLabel(A.space.d, A.space.n + B.space.n, Sector.FULL)
    if space.dim > FULL_DIMENSION_CAP:
        raise DimensionError(f"Full power dimension {space.dim} exceeds cap {FULL_DIMENSION_CAP}")
    return Operator(space, np.kron(A.entries, B.entries), A.metric)


def metric_expm(
    A: np.ndarray,
    G: np.ndarray,
    dt: float,
    hermitian_tol: float = HERMITIAN_TOL,
    unitarity_tol: float = UNITARITY_TOL,
) -> np.ndarray:
    """
    exp(-i A dt) for a matrix A that is Hermitian with respect to the metric G.

    A definite metric G = L L^H (up to sign) reduces A to the Hermitian
    matrix L^H A L^{-H}, which is diagonalized exactly. Indefinite metrics
    fall back to scipy's Padé scaling-and-squaring expm.

    Raises:
        NotPseudoHermitianError: If G A != A^H G
        NumericalGuardError: If the result is not G-unitary
    """
    if not np.isfinite(dt):
        raise ValueError("Time step must be finite")
    A = np.asarray(A, dtype=complex)
    G = np.asarray(G, dtype=complex)
    if A.shape[0] == 0:
        return np.zeros((0, 0), dtype=complex)
    scale = max(1.0, float(np.linalg.norm(A)))
    residual = float(np.linalg.norm(G @ A - A.conj().T @ G))
    if residual > hermitian_tol * scale:
        raise NotPseudoHermitianError("Generator is not metric-Hermitian", residual)

    metric_eigenvalues = np.linalg.eigvalsh(G)
    if np.array_equal(G, np.eye(G.shape[0])):
        eigenvalues, vectors = scipy.linalg.eigh(0.5 * (A + A.conj().T))
        U = (vectors * np.exp(-1j * eigenvalues * dt)) @ vectors.conj().T
    elif np.all(metric_eigenvalues > 0) or np.all(metric_eigenvalues < 0):
        sign = 1.0 if metric_eigenvalues[0] > 0 else -1.0
        L = scipy.linalg.cholesky(sign * G, lower=True)
        # K = L^H A L^{-H} is Hermitian whenever G A = A^H G
        K = scipy.linalg.solve_triangular(L, (L.conj().T @ A).conj().T, lower=True).conj().T
        eigenvalues, vectors = scipy.linalg.eigh(0.5 * (K + K.conj().T))
        core = (vectors * np.exp(-1j * eigenvalues * dt)) @ vectors.conj().T
        U = scipy.linalg.solve_triangular(L.conj().T, core @ L.conj().T, lower=False)
    else:
        U = scipy.linalg.expm(-1j * dt * A)

    drift = float(np.linalg.norm(U.conj().T @ G @ U - G))
    if drift > unitarity_tol * max(1.0, float(np.linalg.norm(G))):
        raise NumericalGuardError(f"Propagator is not metric-unitary (drift {drift:.3e})")
    return U


def expm_propagator(
    H: Operator,
    dt: float,
    metric: Optional[Metric] = None,
    hermitian_tol: float = HERMITIAN_TOL,
    unitarity_tol: float = UNITARITY_TOL,
) -> Operator:
    """
    Propagator exp(-i H dt) of a metric-Hermitian generator.

    Args:
        H: Generator, Hermitian with respect to the induced metric
        dt: Time step
        metric: Overrides H.metric when given
        hermitian_tol: Tolerance of the pseudo-Hermiticity check
        unitarity_tol: Tolerance of the metric-unitarity check on the result

    Returns:
        Metric-unitary operator on H's space

    Raises:
        NotPseudoHermitianError: If H is not metric-Hermitian
        NumericalGuardError: If the result fails metric-unitarity
    """
    metric = metric if metric is not None else H.metric
    G = metric.sector_matrix(H.space.n, H.space.sector)
    U = metric_expm(H.entries, G, dt, hermitian_tol, unitarity_tol)
    return Operator(H.space, U, metric)


# ---------------------------------------------------------------------------
# Contractions
# ---------------------------------------------------------------------------


def as_density(state, metric: Metric) -> np.ndarray:
    """
    Turn a ket or density into a d×d density matrix.

    A ket psi contributes psi psi^H J, the rank-one density paired with
    the J-scalar product.
    """
    if isinstance(state, Ket):
        psi = state.amplitudes
        return np.outer(psi, psi.conj()) @ metric.J
    array = np.asarray(state, dtype=complex)
    if array.ndim == 1:
        return np.outer(array, array.conj()) @ metric.J
    if array.ndim == 2 and array.shape[0] == array.shape[1]:
        return array
    raise DimensionError("Contraction inputs must be kets or square densities")


def contract_slots(entries: np.ndarray, d: int, m: int, densities: Sequence[np.ndarray]) -> np.ndarray:
    result = np.asarray(entries, dtype=complex)
    power = m
    for rho in densities:
        if rho.shape != (d, d):
            raise DimensionError(f"Density of shape {rho.shape} does not act on C^{d}")
        rest = d ** (power - 1)
        result = np.einsum("ba,aibj->ij", rho, result.reshape(d, rest, d, rest))
        power -= 1
    return result


def partial_contract(W: Operator, states, slots: int) -> Operator:
    """
    Trace W against rho^{⊗k} over its first k slot pairs.

    Args:
        W: Operator on the full power m
        states: One density/ket per contracted slot, or a single one reused
        slots: Number k < m of slots to contract

    Returns:
        Operator on the full power m - k

    Raises:
        DimensionError: On invalid slot counts or mismatched dimensions
    """
    if W.space.sector is not Sector.FULL:
        raise DimensionError("partial_contract expects an operator on the full tensor power")
    d, m = W.space.d, W.space.n
    if not 0 <= slots < m:
        raise DimensionError(f"Can contract 0..{m - 1} slots of a power-{m} operator, got {slots}")
    if isinstance(states, (list, tuple)):
        if len(states) != slots:
            raise DimensionError(f"Expected {slots} contraction inputs, got {len(states)}")
        densities = [as_density(s, W.metric) for s in states]
    else:
        densities = [as_density(states, W.metric)] * slots
    result = contract_slots(W.entries, d, m, densities)
    return Operator(SpaceLabel(d, m - slots, Sector.FULL), result, W.metric)


def full_contract(W: Operator, rho: np.ndarray) -> complex:
    """<rho^{⊗m}, W> as a scalar."""
    density = as_density(rho, W.metric)
    return complex(contract_slots(W.entries, W.space.d, W.space.n, [density] * W.space.n)[0, 0])


def symmetric_power(psi: np.ndarray, n: int, parity: Union[str, Sector] = "+") -> np.ndarray:
    """
    Sector coordinates S^H psi^{⊗n} of the product state psi^{⊗n}.

    The bosonic coordinate of occupation (n_1..n_d) is
    sqrt(n!/prod n_k!) prod psi_k^{n_k}; fermionic products vanish for n >= 2.
    """
    psi = np.asarray(psi, dtype=complex).reshape(-1)
    sector = Sector.from_parity(parity)
    d = psi.shape[0]
    occs = occupations(d, n, sector)
    if sector is Sector.ANTISYMMETRIC and n >= 2:
        return np.zeros(len(occs), dtype=complex)
    log_n_factorial = math.lgamma(n + 1)
    coords = np.empty(len(occs), dtype=complex)
    for i, occ in enumerate(occs):
        weight = math.exp(0.5 * (log_n_factorial - sum(math.lgamma(k + 1) for k in occ)))
        coords[i] = weight * np.prod([psi[k] ** occ[k] for k in range(d)])
    return coords


# ---------------------------------------------------------------------------
# Second quantization on sector bases (internal building blocks)
# ---------------------------------------------------------------------------


def _check_sector_cap(d: int, n: int, sector: Sector):
    dim = sector_dimension(d, n, sector)
    if dim > SECTOR_DIMENSION_CAP:
        raise DimensionError(
            f"Sector dimension {dim} (d={d}, n={n}) exceeds cap {SECTOR_DIMENSION_CAP}"
        )


@lru_cache(maxsize=None)
def lowering_map(d: int, n: int, sector: Sector, k: int) -> sp.csr_matrix:
    """
    Annihilation of mode k as a sparse map from sector n to sector n-1.

    Bosons pick up sqrt(n_k); fermions the sign (-1)^{sum_{l<k} n_l}.
    """
    sector = Sector(sector)
    _check_sector_cap(d, n, sector)
    source = occupations(d, n, sector)
    target = occupation_index(d, n - 1, sector)
    rows, cols, values = [], [], []
    for col, occ in enumerate(source):
        if occ[k] == 0:
            continue
        lowered = occ[:k] + (occ[k] - 1,) + occ[k + 1:]
        if sector is Sector.SYMMETRIC:
            value = math.sqrt(occ[k])
        else:
            value = -1.0 if sum(occ[:k]) % 2 else 1.0
        rows.append(target[lowered])
        cols.append(col)
        values.append(value)
    shape = (len(target), len(source))
    return sp.csr_matrix((values, (rows, cols)), shape=shape)


@lru_cache(maxsize=256)
def lowering_chains(d: int, n: int, sector: Sector, m: int) -> Tuple[sp.csr_matrix, ...]:
    """
    Products a_{i_m} ... a_{i_1} from sector n to n-m, i_1 acting first.

    Chains are ordered like itertools.product(range(d), repeat=m) so that
    the chain index matches a full-power row index with i_1 slowest.
    """
    chains = []
    for indices in itertools.product(range(d), repeat=m):
        chain = sp.identity(sector_dimension(d, n, sector), format="csr")
        for step, k in enumerate(indices):
            chain = lowering_map(d, n - step, sector, k) @ chain
        chains.append(chain.tocsr())
    return tuple(chains)


def second_quantize(entries: np.ndarray, d: int, m: int, n: int, sector: Sector) -> sp.csr_matrix:
    """
    The m-body operator sum over m-subsets of slots of W, on sector n.

    Computed as (1/m!) sum_{I,J} W[I,J] L_I^H L_J with lowering chains,
    without materializing the full tensor power.

    Args:
        entries: d^m × d^m matrix of W, commuting with slot permutations
        d: Single-particle dimension
        m: Power of W
        n: Particle number of the target sector
        sector: SYMMETRIC or ANTISYMMETRIC

    Returns:
        Sparse complex matrix on sector n (zero when n < m)
    """
    sector = Sector(sector)
    dim = sector_dimension(d, n, sector)
    result = sp.csr_matrix((dim, dim), dtype=complex)
    if n < m or dim == 0:
        return result
    chains = lowering_chains(d, n, sector, m)
    W = np.asarray(entries, dtype=complex)
    for row in range(W.shape[0]):
        nonzero = np.flatnonzero(W[row])
        if nonzero.size == 0:
            continue
        combined = W[row, nonzero[0]] * chains[nonzero[0]]
        for col in nonzero[1:]:
            combined = combined + W[row, col] * chains[col]
        result = result + chains[row].conj().T @ combined
    return (result / math.factorial(m)).tocsr()
