"""
Unit tests for uniformized Hamiltonians, Fock truncations and representing functionals.
"""
import math

import numpy as np
import pytest

from uniformize.errors import DimensionError, NotPseudoHermitianError
from uniformize.hamiltonian_algebra import HamiltonianFunctionalSpec, QuantumRealization, StateDensity, gamma_eval
from uniformize.sampling import SpecSampler
from uniformize.tensor_core import Metric, Sector, compress, occupations
from uniformize.uniformization import (
    BlockOperator,
    FockTruncation,
    UniformizationParams,
    build_Hn,
    build_Hn_full,
    build_lattice_hartree,
    build_two_mode,
    functional_decode,
    functional_encode,
    functional_eval,
    functional_product_expansion,
    lattice_momentum,
    linear_observable,
    number_observable,
    plane_wave,
    spec_functional,
    tensor_power_bracket,
    tensor_power_product,
    uniformized_jordan,
    uniformized_poisson,
    uniformized_product,
    unit_functional,
)


class TestUniformizationParams:
    """Test suite for UniformizationParams."""

    def test_valid_params(self):
        """Test fields and the parity round trip."""
        params = UniformizationParams(0.25, 6, "-")
        assert params.epsilon == 0.25
        assert params.sector is Sector.ANTISYMMETRIC
        assert params.parity == "-"
        assert params.with_epsilon(0.5).n_max == 6

    def test_invalid_epsilon(self):
        """Test non-positive and non-finite couplings raise error."""
        with pytest.raises(ValueError, match="epsilon must be positive"):
            UniformizationParams(0.0, 4)
        with pytest.raises(ValueError, match="must be finite"):
            UniformizationParams(np.nan, 4)

    def test_invalid_truncation(self):
        """Test n_max below one raises error."""
        with pytest.raises(ValueError, match="n_max must be at least 1"):
            UniformizationParams(0.5, 0)


class TestSectorHamiltonians:
    """Test suite for H^(n) on symmetric and antisymmetric sectors."""

    def test_two_mode_spectrum(self):
        """Test H^(n) of the two-mode model is diagonal with the closed-form energies."""
        g, eps, n = 1.5, 0.2, 5
        params = UniformizationParams(eps, n)
        H = build_Hn(build_two_mode(g), n, params).entries
        expected = [
            n0 - n1 + eps * g * (math.comb(n0, 2) + math.comb(n1, 2))
            for n0, n1 in occupations(2, n, Sector.SYMMETRIC)
        ]
        np.testing.assert_allclose(H, np.diag(expected), atol=1e-12)

    def test_single_particle_sector(self):
        """Test H^(1) equals W^(1)."""
        spec = SpecSampler(3, degree=3, seed=1).spec()
        H = build_Hn(spec, 1, UniformizationParams(0.3, 2)).entries
        np.testing.assert_allclose(H, spec.tensor(1), atol=1e-12)

    @pytest.mark.parametrize("parity", ["+", "-"])
    def test_sector_matches_full_power(self, parity):
        """Test the sector construction agrees with the literal full-power sum."""
        spec = SpecSampler(3, degree=3, seed=2).spec()
        params = UniformizationParams(0.4, 3, parity)
        full = build_Hn_full(spec, 3, params)
        sector = build_Hn(spec, 3, params)
        np.testing.assert_allclose(compress(full, parity).entries, sector.entries, atol=1e-10)

    def test_metric_hermitian_under_signature(self):
        """Test H^(n) is Hermitian for the metric induced by an indefinite J."""
        spec = SpecSampler(2, degree=2, metric=Metric.signature([1, -1]), seed=3).spec()
        H = build_Hn(spec, 4, UniformizationParams(0.5, 4))
        assert H.is_pseudo_hermitian()

    def test_sector_outside_truncation(self):
        """Test asking for n > n_max raises error."""
        with pytest.raises(DimensionError, match="outside truncation"):
            build_Hn(build_two_mode(1.0), 5, UniformizationParams(0.5, 4))

    def test_vacuum_sector(self):
        """Test H^(0) is the 1×1 zero."""
        H = build_Hn(build_two_mode(1.0), 0, UniformizationParams(0.5, 4))
        assert H.entries.shape == (1, 1)
        assert H.entries[0, 0] == 0


class TestModelBuilders:
    """Test suite for lattice and two-mode builders."""

    def test_lattice_spec(self):
        """Test the lattice Hartree tensors."""
        spec = build_lattice_hartree(4, 1.0, np.eye(4), onsite=0.5)
        W1 = spec.tensor(1)
        assert W1[0, 0] == pytest.approx(2.5)
        assert W1[0, 1] == pytest.approx(-1.0)
        assert W1[0, 3] == pytest.approx(-1.0)
        assert spec.tensor(2)[0, 0] == 1.0
        assert spec.tensor(2)[1, 1] == 0.0

    def test_lattice_validation(self):
        """Test lattice builders reject bad sizes and kernels."""
        with pytest.raises(ValueError, match="at least 2 sites"):
            build_lattice_hartree(1, 1.0, np.eye(1))
        with pytest.raises(ValueError, match="must be symmetric"):
            build_lattice_hartree(3, 1.0, np.triu(np.ones((3, 3))))
        with pytest.raises(ValueError, match="must have shape"):
            build_lattice_hartree(3, 1.0, np.eye(4))

    def test_momentum_eigenvectors(self):
        """Test plane waves are eigenvectors of the lattice momentum."""
        L = 6
        P = lattice_momentum(L)
        np.testing.assert_allclose(P, P.conj().T, atol=1e-12)
        for j in (0, 1, 2, 3):
            k = 2 * np.pi * j / L
            v = plane_wave(L, j)
            np.testing.assert_allclose(P @ v, k * v, atol=1e-12)

    def test_plane_wave_norm(self):
        """Test plane waves carry the requested squared norm."""
        assert np.linalg.norm(plane_wave(5, 2, norm=3.0)) ** 2 == pytest.approx(3.0)


class TestFockTruncation:
    """Test suite for FockTruncation and BlockOperator."""

    def test_dimensions(self):
        """Test sector dimensions of a bosonic truncation."""
        fock = FockTruncation(2, "+", 3)
        assert fock.dims == [1, 2, 3, 4]
        assert fock.total_dim == 10
        assert fock.identity().dense().shape == (10, 10)

    def test_block_count(self):
        """Test a block operator needs one block per sector."""
        fock = FockTruncation(2, "+", 2)
        with pytest.raises(DimensionError, match="Expected 3 blocks"):
            BlockOperator(fock, [np.eye(1), np.eye(2)])

    def test_mismatched_truncations(self):
        """Test arithmetic across truncations raises error."""
        a = FockTruncation(2, "+", 2).identity()
        b = FockTruncation(2, "+", 3).identity()
        with pytest.raises(DimensionError, match="different Fock truncations"):
            a + b

    def test_number_observable(self):
        """Test the second-quantized identity counts particles."""
        fock = FockTruncation(3, "-", 3)
        N = number_observable(np.eye(3), fock)
        for n in range(4):
            np.testing.assert_allclose(N[n], n * np.eye(fock.dims[n]), atol=1e-12)

    def test_number_observable_hermiticity(self):
        """Test a non-Hermitian one-body operator is rejected."""
        with pytest.raises(NotPseudoHermitianError, match="not metric-Hermitian"):
            number_observable(np.array([[0.0, 1.0], [0.0, 0.0]]), FockTruncation(2, "+", 2))

    def test_one_body_operators_commute_with_number(self):
        """Test n^(A) commutes with n^(I)."""
        fock = FockTruncation(2, "+", 4)
        A = number_observable(SpecSampler(2, seed=5).observable(), fock)
        N = number_observable(np.eye(2), fock)
        assert A.commutator(N).max_norm() < 1e-12


class TestRepresentingFunctionals:
    """Test suite for the generating functionals of uniformized observables."""

    def test_unit_functional_evaluates_to_epsilon(self):
        """Test the identity family evaluates to eps on any pure state."""
        eps = 0.5
        f = unit_functional(FockTruncation(2, "+", 14), eps)
        psi = np.array([0.5, 0.5j])
        assert functional_eval(f, psi) == pytest.approx(eps, abs=1e-9)

    def test_linear_observable_evaluates_to_expectation(self):
        """Test n^(A) represents <rho, A>."""
        A = np.array([[1.0, 0.3], [0.3, -2.0]])
        f = linear_observable(A, UniformizationParams(0.5, 20))
        psi = np.array([0.4, 0.5 + 0.2j])
        expected = np.real(psi.conj() @ A @ psi)
        assert functional_eval(f, psi) == pytest.approx(expected, abs=1e-9)

    def test_spec_functional_evaluates_to_gamma(self):
        """Test the family H^(n) represents gamma itself."""
        spec = build_two_mode(0.7)
        params = UniformizationParams(0.5, 24)
        psi = np.array([0.5, 0.4j])
        rho = StateDensity.from_ket(spec.realization, psi)
        value = functional_eval(spec_functional(spec, params), rho)
        assert value == pytest.approx(gamma_eval(spec, rho), abs=1e-8)

    def test_mixed_state_rejected(self):
        """Test sector components refuse mixed densities."""
        realization = QuantumRealization(2)
        f = unit_functional(FockTruncation(2, "+", 2), 0.5)
        with pytest.raises(ValueError, match="pure states"):
            functional_eval(f, StateDensity(realization, np.eye(2) / 2))

    def test_encode_decode(self):
        """Test components survive encode and decode."""
        fock = FockTruncation(2, "+", 2)
        blocks = [np.array([[2.0]]), np.diag([1.0, 2.0]), np.eye(3)]
        f = functional_encode(blocks, 0.3, fock)
        decoded = functional_decode(f)
        for block, original in zip(decoded, blocks):
            np.testing.assert_allclose(block, original)

    def test_encode_needs_truncation(self):
        """Test encoding plain arrays without a truncation raises error."""
        with pytest.raises(DimensionError, match="pass fock="):
            functional_encode([1.0, np.eye(2)], 0.3)

    def test_products_need_matching_epsilon(self):
        """Test combining functionals with different couplings raises error."""
        fock = FockTruncation(2, "+", 2)
        with pytest.raises(ValueError, match="different epsilon"):
            uniformized_product(unit_functional(fock, 0.5), unit_functional(fock, 0.25))

    @pytest.mark.parametrize("kind, combine", [
        ("associative", uniformized_product),
        ("jordan", uniformized_jordan),
        ("poisson", uniformized_poisson),
    ])
    def test_products_of_linear_observables(self, kind, combine):
        """Test sector products of n^(A), n^(B) match the derivative expansion."""
        eps = 0.5
        realization = QuantumRealization(2)
        sampler = SpecSampler(2, degree=1, seed=9)
        A, B = sampler.observable(), sampler.observable()
        params = UniformizationParams(eps, 30)
        psi = sampler.ket(norm=0.5)
        rho = StateDensity.from_ket(realization, psi)
        sector_side = functional_eval(combine(linear_observable(A, params), linear_observable(B, params)), psi)
        expansion = functional_product_expansion(
            HamiltonianFunctionalSpec(realization, [A]),
            HamiltonianFunctionalSpec(realization, [B]),
            rho, eps, kind,
        )
        assert abs(sector_side - expansion) < 1e-8

    def test_unknown_product_kind(self):
        """Test an unknown product kind raises error."""
        spec = build_two_mode(1.0)
        rho = StateDensity.from_ket(spec.realization, np.array([1.0, 0.0]))
        with pytest.raises(ValueError, match="Product kind must be"):
            functional_product_expansion(spec, spec, rho, 0.5, "lie")


class TestFullPowerFunctionals:
    """Test suite for functionals stored on full tensor powers."""

    RHO = np.array([[0.15, 0.03], [0.03, 0.1]])

    def test_unit_functional_on_mixed_state(self):
        """Test the identity family evaluates to eps on a mixed density."""
        f = unit_functional(FockTruncation.full(2, 8), 0.5)
        rho = StateDensity(QuantumRealization(2), self.RHO)
        assert functional_eval(f, rho) == pytest.approx(0.5, abs=1e-8)
        assert functional_eval(f, self.RHO) == pytest.approx(functional_eval(f, rho))

    def test_linear_observable_on_mixed_state(self):
        """Test full-power n^(A) represents Tr(rho A) for a mixed density."""
        A = np.array([[1.0, 0.3], [0.3, -2.0]])
        f = linear_observable(A, UniformizationParams(0.5, 8), full_powers=True)
        assert f.fock.is_full
        assert functional_eval(f, self.RHO) == pytest.approx(np.trace(self.RHO @ A), abs=1e-8)

    def test_spec_functional_on_mixed_state(self):
        """Test full-power H^(n) represent gamma at a mixed density."""
        spec = build_two_mode(0.7)
        rho = StateDensity(spec.realization, self.RHO)
        f = spec_functional(spec, UniformizationParams(0.5, 6), full_powers=True)
        assert functional_eval(f, rho) == pytest.approx(gamma_eval(spec, rho), abs=1e-5)

    def test_products_agree_with_sectors_on_pure_states(self):
        """Test full-power and sector products give the same value on psi psi^*."""
        spec = build_two_mode(0.7)
        A = np.array([[1.0, 0.3], [0.3, -2.0]])
        params = UniformizationParams(0.5, 5)
        psi = np.array([0.4, 0.3j])
        for combine in (uniformized_product, uniformized_jordan, uniformized_poisson):
            sector = combine(spec_functional(spec, params), linear_observable(A, params))
            full = combine(spec_functional(spec, params, full_powers=True),
                           linear_observable(A, params, full_powers=True))
            assert functional_eval(full, psi) == pytest.approx(functional_eval(sector, psi), abs=1e-10)

    def test_full_power_cap(self):
        """Test a full truncation beyond the dimension cap raises error."""
        with pytest.raises(DimensionError, match="exceeds cap"):
            FockTruncation.full(2, 13)
        assert "full" in repr(FockTruncation.full(2, 3))

    def test_mixed_density_shape(self):
        """Test a density on the wrong space raises error."""
        f = unit_functional(FockTruncation.full(2, 3), 0.5)
        with pytest.raises(DimensionError, match="does not act on C\\^2"):
            functional_eval(f, np.eye(3) / 3)


class TestTensorPowers:
    """Test suite for products of primitive tensor powers."""

    def test_single_slot(self):
        """Test n = 1 reduces to the Jordan product and the bracket."""
        sampler = SpecSampler(2, seed=10)
        X, Y = sampler.observable(), sampler.observable()
        np.testing.assert_allclose(tensor_power_product(X, Y, 1), 0.5 * (X @ Y + Y @ X))
        np.testing.assert_allclose(tensor_power_bracket(X, Y, 1), 1j * (X @ Y - Y @ X))

    def test_bracket_of_commuting_elements(self):
        """Test the bracket of commuting primitives vanishes."""
        X = np.diag([1.0, 2.0])
        Y = np.diag([-1.0, 0.5])
        np.testing.assert_allclose(tensor_power_bracket(X, Y, 3), 0.0)
        np.testing.assert_allclose(tensor_power_product(X, Y, 2), np.kron(X @ Y, X @ Y))
