"""
SpecSampler - Seeded random Hamiltonian functionals, observables and kets.
"""
from typing import Optional

import numpy as np

from .hamiltonian_algebra import HamiltonianFunctionalSpec, QuantumRealization
from .tensor_core import Metric
from .uniformization import slot_symmetrize


class SpecSampler:
    """
    Draws metric-Hermitian, slot-symmetric interaction tensors on C^d.

    Every draw comes from one numpy Generator so that a seed reproduces the
    whole sequence of specs, observables and states.
    """

    def __init__(self, d: int, degree: int = 2, metric: Optional[Metric] = None,
                 scale: float = 1.0, seed: Optional[int] = None):
        """
        Initialize the sampler.

        Args:
            d: Single-particle dimension (must be positive)
            degree: Highest interaction order N, 1..3
            metric: Metric J on C^d (default: identity)
            scale: Standard deviation of the Gaussian entries
            seed: Optional random seed for reproducibility
        """
        if d < 1:
            raise ValueError("Dimension d must be positive")
        if not 1 <= degree <= 3:
            raise ValueError("Degree must lie in 1..3")
        if scale <= 0:
            raise ValueError("Scale must be positive")
        self.d = d
        self.degree = degree
        self.metric = metric or Metric.identity(d)
        if self.metric.d != d:
            raise ValueError("Metric dimension does not match d")
        self.scale = scale
        self.rng = np.random.default_rng(seed)

    def _hermitian(self, dim: int) -> np.ndarray:
        X = self.rng.normal(scale=self.scale, size=(dim, dim)) + 1j * self.rng.normal(scale=self.scale, size=(dim, dim))
        return 0.5 * (X + X.conj().T)

    def _metric_power_inverse(self, m: int) -> np.ndarray:
        J_inv = np.linalg.inv(self.metric.J)
        result = np.ones((1, 1), dtype=complex)
        for _ in range(m):
            result = np.kron(result, J_inv)
        return result

    def observable(self) -> np.ndarray:
        """Random J-Hermitian d×d matrix J^{-1} X with X Hermitian."""
        return self._metric_power_inverse(1) @ self._hermitian(self.d)

    def tensor(self, m: int) -> np.ndarray:
        """Random J-Hermitian d^m × d^m matrix commuting with slot permutations."""
        symmetric = slot_symmetrize(self._hermitian(self.d ** m), self.d, m)
        # J^{⊗m} commutes with slot permutations, so symmetry survives
        return self._metric_power_inverse(m) @ symmetric

    def spec(self) -> HamiltonianFunctionalSpec:
        """A fresh spec with random W^(1..degree)."""
        W = [self.tensor(m) for m in range(1, self.degree + 1)]
        return HamiltonianFunctionalSpec(QuantumRealization(self.d, self.metric), W)

    def ket(self, norm: Optional[float] = None) -> np.ndarray:
        """Random ket, rescaled to Euclidean squared norm `norm` when given."""
        psi = self.rng.normal(size=self.d) + 1j * self.rng.normal(size=self.d)
        if norm is not None:
            psi = psi * np.sqrt(norm) / np.linalg.norm(psi)
        return psi

    def __repr__(self) -> str:
        return f"SpecSampler(d={self.d}, degree={self.degree}, scale={self.scale})"
