"""
Unit tests for the verification suites.
"""
import numpy as np
import pytest

from uniformize.hamiltonian_algebra import HamiltonianFunctionalSpec, QuantumRealization
from uniformize.verification import (
    CheckResult,
    VerificationReport,
    algebra_suite,
    appendix_identity_suite,
    classical_limit_deviations,
    commutation_suite,
    halving_ratios,
    run_verification,
)


class TestReports:
    """Test suite for CheckResult and VerificationReport."""

    def test_check_passes_within_tolerance(self):
        """Test the pass flag compares the residual with the tolerance."""
        assert CheckResult("a", 1e-12, 1e-10, 3).passed
        assert not CheckResult("a", 1e-8, 1e-10, 3).passed

    def test_nan_residual_fails(self):
        """Test a non-finite residual never passes."""
        assert not CheckResult("a", float("nan"), 1.0, 1).passed

    def test_report_summary(self):
        """Test the report lines and dictionary form."""
        report = VerificationReport("demo", [CheckResult("a", 1e-12, 1e-10, 3), CheckResult("b", 1.0, 1e-10, 3)])
        assert not report.passed
        assert report.max_residual == 1.0
        lines = report.lines()
        assert lines[0] == "demo: FAIL"
        assert "FAIL" in lines[2]
        data = report.to_dict()
        assert data["checks"][0]["passed"] is True
        assert data["passed"] is False

    def test_empty_report_passes(self):
        """Test a report without checks passes with zero residual."""
        report = VerificationReport("empty")
        assert report.passed
        assert report.max_residual == 0.0


class TestSuites:
    """Test suite for the seeded property checks."""

    def test_algebra_suite(self):
        """Test the algebra properties hold on a few random trials."""
        report = algebra_suite(d=2, degree=3, trials=10, seed=1)
        assert [c.name for c in report.checks][:3] == [
            "derivation law", "bracket antisymmetry", "bracket hermiticity"
        ]
        assert report.passed, "\n".join(report.lines())

    def test_identity_suite(self):
        """Test the tensor-power identities and the dual path on a few trials."""
        report = appendix_identity_suite(d=2, n_max=3, trials=3, seed=2)
        assert len(report.checks) == 7
        assert [c.name for c in report.checks[-2:]] == ["classical limit (poisson)", "classical limit (jordan)"]
        assert report.passed, "\n".join(report.lines())

    def test_identity_suite_limits(self):
        """Test the identity suite refuses large sizes."""
        with pytest.raises(ValueError, match="1 <= d <= 3"):
            appendix_identity_suite(d=4)
        with pytest.raises(ValueError, match="1 <= n_max <= 4"):
            appendix_identity_suite(n_max=5)

    def test_commutation_suite(self):
        """Test number-observable commutators for both parities."""
        report = commutation_suite(d=3, n_max=3, trials=4, seed=3)
        assert [c.name for c in report.checks] == ["number commutators (+)", "number commutators (-)"]
        assert report.passed, "\n".join(report.lines())

    def test_seed_reproducible(self):
        """Test the same seed gives the same residuals."""
        a = commutation_suite(trials=2, seed=5)
        b = commutation_suite(trials=2, seed=5)
        assert [c.max_residual for c in a.checks] == [c.max_residual for c in b.checks]

    @pytest.mark.slow
    def test_full_verification(self):
        """Test every suite passes at its default size."""
        reports = run_verification(seed=42)
        assert len(reports) == 3
        for report in reports:
            assert report.passed, "\n".join(report.lines())
        assert np.isfinite(max(report.max_residual for report in reports))


def quadratic_pair():
    sigma_x = np.array([[0.0, 1.0], [1.0, 0.0]])
    realization = QuantumRealization(2)
    gamma = HamiltonianFunctionalSpec(realization, [np.diag([1.0, 2.0]), np.diag([1.0, 0.0, 0.0, 1.0])])
    alpha = HamiltonianFunctionalSpec(
        realization, [sigma_x + 2 * np.eye(2), np.kron(sigma_x, np.eye(2)) + np.kron(np.eye(2), sigma_x)]
    )
    return gamma, alpha


class TestClassicalLimit:
    """Test suite for the eps -> 0 limit of the uniformized products."""

    def test_bracket_and_product_limits(self):
        """Test both deviations halve with eps for a pair of quadratic functionals."""
        gamma, alpha = quadratic_pair()
        deviations = classical_limit_deviations(gamma, alpha, np.array([0.2, 0.1j]))
        for kind in ("poisson", "jordan"):
            assert np.all(np.diff(deviations[kind]) < 0), kind
            ratios = halving_ratios(deviations[kind])
            assert np.all((ratios >= 1.6) & (ratios <= 2.4)), (kind, ratios)

    def test_bracket_limit_is_not_trivial(self):
        """Test the pair has a non-zero classical bracket and a first-order gap to it."""
        gamma, alpha = quadratic_pair()
        deviations = classical_limit_deviations(gamma, alpha, np.array([0.2, 0.1j]), epsilons=[0.1])
        assert deviations["poisson"][0] > 1e-6

    def test_commuting_pair_has_no_bracket_gap(self):
        """Test a functional paired with itself has vanishing bracket at every eps."""
        gamma, _ = quadratic_pair()
        deviations = classical_limit_deviations(gamma, gamma, np.array([0.2, 0.1j]))
        np.testing.assert_allclose(deviations["poisson"], 0.0, atol=1e-12)

    def test_halving_ratios(self):
        """Test ratios of consecutive deviations."""
        np.testing.assert_allclose(halving_ratios([4.0, 2.0, 1.0]), [2.0, 2.0])
