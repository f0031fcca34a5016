"""
Unit tests for realizations, state densities and Hamiltonian functionals.
"""
import numpy as np
import pytest

from uniformize.errors import DimensionError, NonCommutingError, NotPseudoHermitianError
from uniformize.hamiltonian_algebra import (
    ClassicalRealization,
    HamiltonianFunctionalSpec,
    QuantumRealization,
    StateDensity,
    classical_bracket_functionals,
    functional_derivative,
    gamma_eval,
    number_functional,
    pairing,
    vlasov_hamiltonian,
)
from uniformize.phase_space import GridSpec
from uniformize.tensor_core import Metric


@pytest.fixture
def quantum():
    return QuantumRealization(2)


@pytest.fixture
def product_spec(quantum):
    A = np.array([[1.0, 0.5j], [-0.5j, -0.3]])
    B = np.array([[0.2, 0.1], [0.1, 0.7]])
    return HamiltonianFunctionalSpec(quantum, [A, np.kron(B, B)]), A, B


class TestRealizations:
    """Test suite for the quantum and classical realizations."""

    def test_quantum_products(self, quantum):
        """Test the Jordan product and bracket on Pauli matrices."""
        sx = np.array([[0, 1], [1, 0]], dtype=complex)
        sy = np.array([[0, -1j], [1j, 0]])
        sz = np.diag([1.0, -1.0])
        np.testing.assert_allclose(quantum.jordan(sx, sy), 0.0, atol=1e-15)
        np.testing.assert_allclose(quantum.poisson(sx, sy), 1j * (2j * sz))
        assert quantum.pairing(np.eye(2) / 2, sz) == pytest.approx(0.0)

    def test_quantum_shape_check(self, quantum):
        """Test elements of the wrong size are rejected."""
        with pytest.raises(DimensionError, match="does not belong"):
            quantum.jordan(np.eye(3), np.eye(2))

    def test_star_is_metric_adjoint(self):
        """Test J^{-1} A^H J is an involution under an indefinite metric."""
        realization = QuantumRealization(2, Metric.signature([1, -1]))
        A = np.array([[1.0, 2.0j], [0.5, 3.0]])
        np.testing.assert_allclose(realization.star(realization.star(A)), A, atol=1e-12)

    def test_classical_bracket_of_coordinates(self):
        """Test {p, q} = 1 in the sign convention dH/dp dA/dq - dH/dq dA/dp."""
        grid = GridSpec((-1.0, 1.0), (-1.0, 1.0), (16, 16), periodic=(False, False))
        realization = ClassicalRealization(grid)
        q = grid.field(lambda q, p: q + 0 * p)
        p = grid.field(lambda q, p: p + 0 * q)
        np.testing.assert_allclose(realization.poisson(p, q), 1.0, atol=1e-10)
        np.testing.assert_allclose(realization.jordan(q, p), q * p)


class TestStateDensity:
    """Test suite for StateDensity."""

    def test_from_ket_mass(self, quantum):
        """Test the mass of psi psi^H J is the squared norm."""
        rho = StateDensity.from_ket(quantum, np.array([0.6, 0.8j]))
        assert rho.mass == pytest.approx(1.0)
        assert rho.ket is not None

    def test_indefinite_mass(self):
        """Test the mass under an indefinite metric can be negative."""
        realization = QuantumRealization(2, Metric.signature([1, -1]))
        rho = StateDensity.from_ket(realization, np.array([0.5, 1.0]))
        assert rho.mass == pytest.approx(-0.75)

    def test_rejects_non_hermitian(self, quantum):
        """Test that a density which is not metric-Hermitian is rejected."""
        with pytest.raises(NotPseudoHermitianError, match="not metric-Hermitian"):
            StateDensity(quantum, np.array([[1.0, 1.0], [0.0, 0.0]]))

    def test_classical_density_must_be_real(self):
        """Test complex classical densities are rejected."""
        realization = ClassicalRealization(GridSpec((0.0, 1.0), (0.0, 1.0), (8, 8)))
        with pytest.raises(ValueError, match="must be real"):
            StateDensity(realization, np.full((8, 8), 1j))


class TestHamiltonianFunctionalSpec:
    """Test suite for functional specs, evaluation and derivatives."""

    def test_degree_limit(self, quantum):
        """Test more than three interaction orders raise error."""
        with pytest.raises(ValueError, match="exceeds the supported maximum"):
            HamiltonianFunctionalSpec(quantum, [None, None, None, None])

    def test_empty_spec(self, quantum):
        """Test a spec needs at least one order."""
        with pytest.raises(ValueError, match="at least W"):
            HamiltonianFunctionalSpec(quantum, [])

    def test_rejects_asymmetric_tensor(self, quantum):
        """Test W^(2) must commute with the slot swap."""
        X = np.diag([1.0, 2.0])
        with pytest.raises(NonCommutingError, match="slot permutations"):
            HamiltonianFunctionalSpec(quantum, [None, np.kron(X, np.eye(2))])

    def test_rejects_non_hermitian_tensor(self, quantum):
        """Test W^(1) must be metric-Hermitian."""
        with pytest.raises(NotPseudoHermitianError, match="W\\^\\(1\\)"):
            HamiltonianFunctionalSpec(quantum, [np.array([[0.0, 1.0], [0.0, 0.0]])])

    def test_modulation_order_check(self, quantum):
        """Test modulations must name an existing order."""
        with pytest.raises(ValueError, match="outside 1..1"):
            HamiltonianFunctionalSpec(quantum, [np.eye(2)], modulations={2: np.cos})

    def test_modulated_tensor(self, quantum):
        """Test s_m(t) scales the tensor and marks the spec time-dependent."""
        spec = HamiltonianFunctionalSpec(quantum, [np.eye(2)], modulations={1: lambda t: 2.0 + t})
        assert spec.is_time_dependent
        np.testing.assert_allclose(spec.tensor(1, 1.0), 3.0 * np.eye(2))

    def test_gamma_of_product_tensor(self, quantum, product_spec):
        """Test gamma(psi psi^*) = <A> + <B>^2 / 2 for W2 = B⊗B."""
        spec, A, B = product_spec
        psi = np.array([0.6, 0.8j])
        rho = StateDensity.from_ket(quantum, psi)
        a = np.real(psi.conj() @ A @ psi)
        b = np.real(psi.conj() @ B @ psi)
        assert gamma_eval(spec, rho) == pytest.approx(a + 0.5 * b ** 2)

    def test_derivatives_of_product_tensor(self, quantum, product_spec):
        """Test D gamma = A + <B> B and D^2 gamma = B⊗B."""
        spec, A, B = product_spec
        psi = np.array([0.6, 0.8j])
        rho = StateDensity.from_ket(quantum, psi)
        b = np.real(psi.conj() @ B @ psi)
        np.testing.assert_allclose(vlasov_hamiltonian(spec, rho), A + b * B, atol=1e-12)
        np.testing.assert_allclose(functional_derivative(spec, rho, 2), np.kron(B, B), atol=1e-12)
        assert functional_derivative(spec, rho, 0) == pytest.approx(gamma_eval(spec, rho))
        np.testing.assert_allclose(functional_derivative(spec, rho, 3), 0.0)

    def test_first_derivative_by_finite_differences(self, quantum, product_spec):
        """Test <delta, D gamma> matches a centered difference of gamma."""
        spec, _, _ = product_spec
        rho = StateDensity.from_ket(quantum, np.array([0.6, 0.8j]))
        delta = np.array([[0.3, 0.1 - 0.2j], [0.1 + 0.2j, -0.4]])
        h = 1e-5
        plus = gamma_eval(spec, StateDensity(quantum, rho.data + h * delta))
        minus = gamma_eval(spec, StateDensity(quantum, rho.data - h * delta))
        expected = np.real(pairing(StateDensity(quantum, delta), vlasov_hamiltonian(spec, rho)))
        assert (plus - minus) / (2 * h) == pytest.approx(expected, abs=1e-8)

    def test_realization_mismatch(self, product_spec):
        """Test evaluating on a density of another realization raises error."""
        spec, _, _ = product_spec
        rho = StateDensity.from_ket(QuantumRealization(3), np.ones(3))
        with pytest.raises(DimensionError, match="Realization mismatch"):
            gamma_eval(spec, rho)

    def test_number_functional(self, quantum):
        """Test nu(rho) is the mass and brackets with it vanish."""
        psi = np.array([0.3, 0.4])
        rho = StateDensity.from_ket(quantum, psi)
        nu = number_functional(quantum)
        assert gamma_eval(nu, rho) == pytest.approx(0.25)
        spec = HamiltonianFunctionalSpec(quantum, [np.array([[1.0, 0.2], [0.2, -1.0]])])
        assert abs(classical_bracket_functionals(spec, nu, rho)) < 1e-14


class TestClassicalFunctionals:
    """Test suite for functionals on a phase-space grid."""

    @pytest.fixture
    def setup(self):
        grid = GridSpec((-1.0, 1.0), (-1.0, 1.0), (8, 8))
        realization = ClassicalRealization(grid)
        rng = np.random.default_rng(11)
        field = grid.field(lambda q, p: 0.5 * p ** 2 + 0.5 * q ** 2)
        K = rng.normal(size=(64, 64))
        K = 0.5 * (K + K.T)
        spec = HamiltonianFunctionalSpec(realization, [field, K])
        rho = np.abs(rng.normal(size=(8, 8)))
        return grid, realization, spec, field, K, rho

    def test_gamma_and_derivative(self, setup):
        """Test gamma and D gamma on a grid with a dense kernel."""
        grid, realization, spec, field, K, rho = setup
        state = StateDensity(realization, rho)
        area = grid.cell_area
        flat = rho.reshape(-1)
        expected = np.sum(rho * field) * area + 0.5 * flat @ K @ flat * area ** 2
        assert gamma_eval(spec, state) == pytest.approx(expected)
        H = vlasov_hamiltonian(spec, state)
        np.testing.assert_allclose(H, field + (K @ flat * area).reshape(8, 8))

    def test_no_third_derivative(self, setup):
        """Test classical functionals stop at the second derivative."""
        _, realization, spec, _, _, rho = setup
        with pytest.raises(ValueError, match="no derivative of order 3"):
            functional_derivative(spec, StateDensity(realization, rho), 3)

    def test_asymmetric_kernel(self, setup):
        """Test a non-symmetric two-body kernel is rejected."""
        _, realization, _, field, K, _ = setup
        K = K.copy()
        K[0, 1] += 1.0
        with pytest.raises(NonCommutingError, match="not symmetric"):
            HamiltonianFunctionalSpec(realization, [field, K])

    def test_classical_degree_limit(self, setup):
        """Test classical functionals stop at degree two."""
        _, realization, _, field, K, _ = setup
        with pytest.raises(ValueError, match="exceeds the supported maximum 2"):
            HamiltonianFunctionalSpec(realization, [field, K, None])

    def test_self_bracket_vanishes(self, setup):
        """Test {gamma, gamma}_cl = 0."""
        _, realization, spec, _, _, rho = setup
        assert abs(classical_bracket_functionals(spec, spec, StateDensity(realization, rho))) < 1e-10
