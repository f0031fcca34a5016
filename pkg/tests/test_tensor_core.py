"""
Unit tests for tensor spaces, sectors, metrics and propagators.
"""
import numpy as np
import pytest

from uniformize.errors import DimensionError, NonCommutingError, NotPseudoHermitianError
from uniformize.tensor_core import (
    Ket,
    Metric,
    Operator,
    Sector,
    SpaceLabel,
    compress,
    embed,
    kron,
    lowering_map,
    metric_expm,
    occupations,
    partial_contract,
    full_contract,
    second_quantize,
    sector_dimension,
    sector_isometry,
    symmetric_power,
    symmetrizer,
)


def random_hermitian(d, rng):
    X = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return 0.5 * (X + X.conj().T)


class TestSpaces:
    """Test suite for space labels, sectors and metrics."""

    def test_sector_dimensions(self):
        """Test dimensions of the full, symmetric and antisymmetric powers."""
        assert sector_dimension(3, 2, Sector.FULL) == 9
        assert sector_dimension(3, 2, Sector.SYMMETRIC) == 6
        assert sector_dimension(3, 2, Sector.ANTISYMMETRIC) == 3
        assert sector_dimension(2, 3, Sector.ANTISYMMETRIC) == 0
        assert SpaceLabel(4, 3, Sector.SYMMETRIC).dim == 20

    def test_invalid_space_label(self):
        """Test that a non-positive single-particle dimension is rejected."""
        with pytest.raises(DimensionError, match="must be positive"):
            SpaceLabel(0, 2)
        with pytest.raises(DimensionError, match="non-negative"):
            SpaceLabel(2, -1)

    def test_parity_mapping(self):
        """Test parity flags map to sectors and back."""
        assert Sector.from_parity("+") is Sector.SYMMETRIC
        assert Sector.from_parity("-") is Sector.ANTISYMMETRIC
        assert Sector.ANTISYMMETRIC.parity == "-"
        with pytest.raises(ValueError, match="Parity must be"):
            Sector.from_parity("0")

    def test_occupation_order(self):
        """Test occupation vectors come in descending lexicographic order."""
        assert occupations(2, 2, Sector.SYMMETRIC) == ((2, 0), (1, 1), (0, 2))
        assert occupations(3, 2, Sector.ANTISYMMETRIC) == ((1, 1, 0), (1, 0, 1), (0, 1, 1))

    def test_metric_validation(self):
        """Test that non-Hermitian and singular metrics are rejected."""
        with pytest.raises(ValueError, match="must be Hermitian"):
            Metric(np.array([[1.0, 1.0], [0.0, 1.0]]))
        with pytest.raises(ValueError, match="must be invertible"):
            Metric(np.array([[1.0, 1.0], [1.0, 1.0]]))
        with pytest.raises(ValueError, match="must be \\+1 or -1"):
            Metric.signature([1, 2])

    def test_metric_properties(self):
        """Test definiteness flags of identity and indefinite metrics."""
        assert Metric.identity(3).is_identity
        assert Metric.signature([-1, -1]).definite_sign == -1
        indefinite = Metric.signature([1, -1])
        assert not indefinite.is_definite
        assert indefinite == Metric.signature([1, -1])

    def test_sector_metric_of_signature(self):
        """Test the induced metric on the symmetric square of diag(1, -1)."""
        G = Metric.signature([1, -1]).sector_matrix(2, Sector.SYMMETRIC)
        np.testing.assert_allclose(np.diag(G).real, [1.0, -1.0, 1.0])

    def test_dense_metric_matches_isometry(self):
        """Test the sector metric of a non-diagonal J equals S^H J^{⊗2} S."""
        J = np.array([[2.0, 0.5], [0.5, 1.0]])
        metric = Metric(J)
        S = sector_isometry(2, 2, "+")
        np.testing.assert_allclose(metric.sector_matrix(2, Sector.SYMMETRIC), S.T @ np.kron(J, J) @ S, atol=1e-12)


class TestSymmetrization:
    """Test suite for symmetrizers, isometries and compression."""

    @pytest.mark.parametrize("parity", ["+", "-"])
    def test_isometry_is_orthonormal(self, parity):
        """Test S^H S is the identity and S S^H is the symmetrizer."""
        S = sector_isometry(3, 3, parity)
        np.testing.assert_allclose(S.T @ S, np.eye(S.shape[1]), atol=1e-12)
        P = symmetrizer(3, 3, parity).entries
        np.testing.assert_allclose(S @ S.T, P, atol=1e-12)

    @pytest.mark.parametrize("parity", ["+", "-"])
    def test_symmetrizer_is_projector(self, parity):
        """Test the symmetrizer is idempotent and Hermitian."""
        P = symmetrizer(2, 4, parity).entries
        np.testing.assert_allclose(P @ P, P, atol=1e-12)
        np.testing.assert_allclose(P, P.conj().T, atol=1e-12)

    def test_symmetrizer_power_limit(self):
        """Test that permutation sums refuse powers beyond the limit."""
        with pytest.raises(DimensionError, match="limited to n"):
            symmetrizer(2, 7, "+")

    def test_compress_rejects_non_commuting(self):
        """Test compression of an operator that breaks slot symmetry."""
        X = np.diag([1.0, 2.0])
        A = Operator(SpaceLabel(2, 2), np.kron(X, np.eye(2)))
        with pytest.raises(NonCommutingError, match="does not commute"):
            compress(A, "+")

    def test_compress_matches_second_quantization(self):
        """Test that X⊗I + I⊗X compresses to the one-body operator of X."""
        rng = np.random.default_rng(3)
        X = random_hermitian(3, rng)
        full = np.kron(X, np.eye(3)) + np.kron(np.eye(3), X)
        compressed = compress(Operator(SpaceLabel(3, 2), full), "+").entries
        np.testing.assert_allclose(compressed, second_quantize(X, 3, 1, 2, Sector.SYMMETRIC).toarray(), atol=1e-12)

    def test_embed_inverts_compress_on_sector_operators(self):
        """Test compress(embed(A)) recovers a sector operator."""
        rng = np.random.default_rng(4)
        A = Operator(SpaceLabel(2, 3, Sector.SYMMETRIC), random_hermitian(4, rng))
        np.testing.assert_allclose(compress(embed(A), "+").entries, A.entries, atol=1e-12)

    def test_kron_dimension_mismatch(self):
        """Test kron refuses operands over different single-particle spaces."""
        A = Operator(SpaceLabel(2, 1), np.eye(2))
        B = Operator(SpaceLabel(3, 1), np.eye(3))
        with pytest.raises(DimensionError, match="dimensions differ"):
            kron(A, B)


class TestContractions:
    """Test suite for partial and full contractions."""

    def test_partial_contract_of_product(self):
        """Test contracting one slot of A⊗B against a density."""
        rng = np.random.default_rng(5)
        A, B = random_hermitian(2, rng), random_hermitian(2, rng)
        rho = np.array([[0.7, 0.1], [0.1, 0.3]], dtype=complex)
        W = Operator(SpaceLabel(2, 2), np.kron(A, B))
        reduced = partial_contract(W, rho, 1)
        np.testing.assert_allclose(reduced.entries, np.trace(rho @ A) * B, atol=1e-12)

    def test_full_contract_of_ket(self):
        """Test <psi^{⊗2}, A⊗A> equals <psi, A psi>^2."""
        rng = np.random.default_rng(6)
        A = random_hermitian(3, rng)
        psi = rng.normal(size=3) + 1j * rng.normal(size=3)
        W = Operator(SpaceLabel(3, 2), np.kron(A, A))
        expected = (psi.conj() @ A @ psi) ** 2
        assert abs(full_contract(W, psi) - expected) < 1e-10

    def test_partial_contract_slot_count(self):
        """Test that contracting every slot is rejected."""
        W = Operator(SpaceLabel(2, 2), np.eye(4))
        with pytest.raises(DimensionError, match="Can contract"):
            partial_contract(W, np.eye(2), 2)


class TestPropagators:
    """Test suite for metric exponentials and product states."""

    def test_unitary_for_identity_metric(self):
        """Test exp(-iAt) is unitary for a Hermitian generator."""
        rng = np.random.default_rng(7)
        A = random_hermitian(4, rng)
        U = metric_expm(A, np.eye(4), 0.3)
        np.testing.assert_allclose(U.conj().T @ U, np.eye(4), atol=1e-10)

    def test_pseudo_unitary_for_indefinite_metric(self):
        """Test the propagator preserves an indefinite metric."""
        G = np.diag([1.0, -1.0]).astype(complex)
        A = np.array([[1.0, 0.4 + 0.2j], [-(0.4 - 0.2j), -0.5]])
        U = metric_expm(A, G, 0.7)
        np.testing.assert_allclose(U.conj().T @ G @ U, G, atol=1e-10)

    def test_definite_metric_uses_cholesky_path(self):
        """Test the positive-definite branch matches scipy's expm."""
        import scipy.linalg

        rng = np.random.default_rng(8)
        J = np.array([[2.0, 0.3], [0.3, 1.0]], dtype=complex)
        H = random_hermitian(2, rng)
        A = np.linalg.solve(J, H)
        U = metric_expm(A, J, 0.5)
        np.testing.assert_allclose(U, scipy.linalg.expm(-0.5j * A), atol=1e-10)

    def test_rejects_non_hermitian_generator(self):
        """Test that a generator that is not metric-Hermitian is rejected."""
        with pytest.raises(NotPseudoHermitianError, match="not metric-Hermitian"):
            metric_expm(np.array([[0.0, 1.0], [0.0, 0.0]]), np.eye(2), 0.1)

    def test_symmetric_power_norm(self):
        """Test |S^H psi^{⊗n}| = |psi|^n and S S^H psi^{⊗n} = psi^{⊗n}."""
        psi = np.array([0.6, 0.3 + 0.4j, -0.2])
        coords = symmetric_power(psi, 3)
        assert abs(np.linalg.norm(coords) - np.linalg.norm(psi) ** 3) < 1e-12
        product = np.kron(np.kron(psi, psi), psi)
        np.testing.assert_allclose(sector_isometry(3, 3, "+") @ coords, product, atol=1e-12)

    def test_fermionic_product_vanishes(self):
        """Test product states have no antisymmetric component."""
        assert np.allclose(symmetric_power(np.array([0.5, 0.5, 0.1]), 2, "-"), 0.0)

    def test_bosonic_commutator(self):
        """Test [a_k, a_k^+] is the identity on a symmetric sector."""
        n = 3
        a_up = lowering_map(2, n + 1, Sector.SYMMETRIC, 0)
        a_here = lowering_map(2, n, Sector.SYMMETRIC, 0)
        commutator = (a_up @ a_up.conj().T - a_here.conj().T @ a_here).toarray()
        np.testing.assert_allclose(commutator, np.eye(sector_dimension(2, n, Sector.SYMMETRIC)), atol=1e-12)

    @pytest.mark.parametrize("sector", [Sector.SYMMETRIC, Sector.ANTISYMMETRIC])
    def test_number_operator(self, sector):
        """Test the one-body identity second-quantizes to n times the identity."""
        N = second_quantize(np.eye(4), 4, 1, 2, sector).toarray()
        np.testing.assert_allclose(N, 2 * np.eye(N.shape[0]), atol=1e-12)

    def test_ket_j_norm(self):
        """Test the J-norm of a single-particle ket can be negative."""
        ket = Ket.single([0.5, 1.0])
        assert abs(ket.j_norm(Metric.signature([1, -1])) - (0.25 - 1.0)) < 1e-12
