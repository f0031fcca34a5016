"""
Unit tests for SpecSampler.
"""
import numpy as np
import pytest

from uniformize.sampling import SpecSampler
from uniformize.tensor_core import Metric, permute_slots


class TestSpecSampler:
    """Test suite for SpecSampler."""

    def test_invalid_arguments(self):
        """Test that bad dimensions, degrees and scales raise error."""
        with pytest.raises(ValueError, match="must be positive"):
            SpecSampler(0)
        with pytest.raises(ValueError, match="Degree must lie in 1..3"):
            SpecSampler(2, degree=4)
        with pytest.raises(ValueError, match="Scale must be positive"):
            SpecSampler(2, scale=0.0)
        with pytest.raises(ValueError, match="does not match d"):
            SpecSampler(3, metric=Metric.identity(2))

    def test_seed_reproducible(self):
        """Test that the same seed produces the same draws."""
        a = SpecSampler(3, seed=123)
        b = SpecSampler(3, seed=123)
        np.testing.assert_array_equal(a.observable(), b.observable())
        np.testing.assert_array_equal(a.ket(), b.ket())

    def test_different_seeds(self):
        """Test that different seeds produce different draws."""
        assert not np.allclose(SpecSampler(3, seed=1).observable(), SpecSampler(3, seed=2).observable())

    def test_observable_is_metric_hermitian(self):
        """Test J A is Hermitian for an indefinite metric."""
        J = Metric.signature([1, -1, 1])
        A = SpecSampler(3, metric=J, seed=7).observable()
        JA = J.J @ A
        np.testing.assert_allclose(JA, JA.conj().T, atol=1e-12)

    def test_tensor_is_slot_symmetric(self):
        """Test sampled tensors commute with slot permutations."""
        W = SpecSampler(2, degree=3, seed=8).tensor(3)
        for perm in [(1, 0, 2), (0, 2, 1), (2, 0, 1)]:
            np.testing.assert_allclose(permute_slots(W, 2, 3, perm), W, atol=1e-12)

    def test_spec_degree(self):
        """Test a spec carries one tensor per order and validates under a signature metric."""
        spec = SpecSampler(2, degree=3, metric=Metric.signature([1, -1]), seed=9).spec()
        assert spec.degree == 3
        assert spec.realization.metric == Metric.signature([1, -1])

    def test_ket_norm(self):
        """Test kets are rescaled to the requested squared norm."""
        psi = SpecSampler(4, seed=10).ket(norm=0.3)
        assert np.linalg.norm(psi) ** 2 == pytest.approx(0.3)
