"""
Verification - Seeded property suites for the algebra, the tensor-power
identities of the uniformized products and the number-observable
commutation relations.

Each suite returns a VerificationReport; nothing here raises on a failed
check, failures are carried in the report.
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Sequence

import numpy as np

from .dynamics import TimeGrid, hartree_evolve
from .hamiltonian_algebra import (
    ClassicalRealization,
    HamiltonianFunctionalSpec,
    QuantumRealization,
    StateDensity,
    classical_bracket_functionals,
    derivative_tensor,
    gamma_eval,
    gamma_value,
)
from .phase_space import GridSpec
from .sampling import SpecSampler
from .tensor_core import contract_slots
from .uniformization import (
    FockTruncation,
    UniformizationParams,
    functional_eval,
    functional_product_expansion,
    number_observable,
    spec_functional,
    tensor_power_bracket,
    tensor_power_product,
    uniformized_jordan,
    uniformized_poisson,
    uniformized_product,
)

logger = logging.getLogger(__name__)

DEFAULT_SEED = 42
ALGEBRA_TOL = 1e-10
DERIVATIVE_TOL = 1e-6
FD_STEP = 1e-5
CONSERVATION_TOL = 1e-8
CLASSICAL_DERIVATION_TOL = 1e-4
IDENTITY_TOL = 1e-9
COMMUTATION_TOL = 1e-12

# Truncation and state scale for the functional-side dual path; the
# neglected Poisson tail at mean 1 beyond sector 30 is far below 1e-20.
DUAL_PATH_N_MAX = 30
DUAL_PATH_EPSILON = 0.5
DUAL_PATH_NORM = 0.5

# Two halvings of eps; a deviation linear in eps halves each time. The
# small squared norm keeps the eps^2 term of the Jordan limit negligible.
CLASSICAL_LIMIT_EPSILONS = (0.1, 0.05, 0.025)
CLASSICAL_LIMIT_N_MAX = 20
CLASSICAL_LIMIT_NORM = 0.05
CLASSICAL_LIMIT_TRIALS = 3
HALVING_RATIO = 2.0
HALVING_RATIO_TOL = 0.4
DEVIATION_FLOOR = 1e-12


@dataclass
class CheckResult:
    """Largest residual of one property over its trials."""

    name: str
    max_residual: float
    tolerance: float
    trials: int

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.max_residual)) and self.max_residual <= self.tolerance


@dataclass
class VerificationReport:
    title: str
    checks: List[CheckResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    @property
    def max_residual(self) -> float:
        return max((check.max_residual for check in self.checks), default=0.0)

    def lines(self) -> List[str]:
        lines = [f"{self.title}: {'PASS' if self.passed else 'FAIL'}"]
        for check in self.checks:
            status = "ok  " if check.passed else "FAIL"
            lines.append(
                f"  {status} {check.name:<32} max residual {check.max_residual:.3e} "
                f"(tol {check.tolerance:.0e}, {check.trials} trials)"
            )
        return lines

    def to_dict(self) -> Dict:
        return {
            "title": self.title,
            "passed": self.passed,
            "checks": [
                {
                    "name": c.name,
                    "max_residual": c.max_residual,
                    "tolerance": c.tolerance,
                    "trials": c.trials,
                    "passed": c.passed,
                }
                for c in self.checks
            ],
        }


def _relative(a: complex, b: complex) -> float:
    return abs(a - b) / max(1.0, abs(b))


def _random_density(sampler: SpecSampler, norm: float = 1.0) -> np.ndarray:
    psi = sampler.ket(norm)
    return np.outer(psi, psi.conj())


def classical_limit_deviations(
    gamma_spec: HamiltonianFunctionalSpec,
    alpha_spec: HamiltonianFunctionalSpec,
    psi: np.ndarray,
    epsilons: Sequence[float] = CLASSICAL_LIMIT_EPSILONS,
    n_max: int = CLASSICAL_LIMIT_N_MAX,
) -> Dict[str, np.ndarray]:
    """
    Distance of the uniformized products from their eps -> 0 limits.

    For each eps, "poisson" is |eval(uniformized_poisson(f, g)) - {gamma, alpha}_cl|
    and "jordan" is |eps eval(uniformized_jordan(f, g)) - gamma alpha|, with
    f, g the representing functionals of the two specs and every value
    taken at rho = psi psi^*.
    """
    state = StateDensity.from_ket(gamma_spec.realization, psi)
    bracket = classical_bracket_functionals(gamma_spec, alpha_spec, state)
    product = gamma_eval(gamma_spec, state) * gamma_eval(alpha_spec, state)
    deviations = {"poisson": [], "jordan": []}
    for eps in epsilons:
        params = UniformizationParams(eps, n_max)
        f, g = spec_functional(gamma_spec, params), spec_functional(alpha_spec, params)
        deviations["poisson"].append(abs(functional_eval(uniformized_poisson(f, g), psi) - bracket))
        deviations["jordan"].append(abs(eps * functional_eval(uniformized_jordan(f, g), psi) - product))
    return {kind: np.array(values) for kind, values in deviations.items()}


def halving_ratios(deviations: Sequence[float]) -> np.ndarray:
    """Ratios of consecutive deviations; about 2 when eps halves and the deviation is linear in eps."""
    deviations = np.asarray(deviations, dtype=float)
    return deviations[:-1] / deviations[1:]


def _classical_derivation_residual() -> float:
    grid = GridSpec((0.0, 2 * np.pi), (0.0, 2 * np.pi), (128, 128))
    realization = ClassicalRealization(grid)
    H = grid.field(lambda q, p: np.cos(q) * np.sin(p))
    A = grid.field(lambda q, p: np.sin(q) * np.cos(p))
    B = grid.field(lambda q, p: np.cos(q) + np.sin(p))
    lhs = realization.poisson(H, realization.jordan(A, B))
    rhs = realization.jordan(A, realization.poisson(H, B)) + realization.jordan(realization.poisson(H, A), B)
    return float(np.max(np.abs(lhs - rhs)))


def algebra_suite(d: int = 2, degree: int = 3, trials: int = 100, seed: int = DEFAULT_SEED) -> VerificationReport:
    """
    Derivation law, antisymmetry and hermiticity of the bracket, the
    derivative identity of gamma against central differences, and
    conservation of the norm along Hartree trajectories.
    """
    sampler = SpecSampler(d, degree, seed=seed)
    realization = QuantumRealization(d)
    derivation = antisymmetry = hermiticity = derivative = conservation = 0.0
    conservation_trials = max(1, trials // 10)
    grid = TimeGrid(0.0, 0.25, 0.005, store_every=10)

    for trial in range(trials):
        H, A, B = sampler.observable(), sampler.observable(), sampler.observable()
        bracket = realization.poisson(H, A)
        derivation = max(derivation, float(np.linalg.norm(
            realization.poisson(H, realization.jordan(A, B))
            - realization.jordan(A, realization.poisson(H, B))
            - realization.jordan(bracket, B)
        )))
        antisymmetry = max(antisymmetry, float(np.linalg.norm(bracket + realization.poisson(A, H))))
        hermiticity = max(hermiticity, float(np.linalg.norm(bracket - bracket.conj().T)))

        spec = sampler.spec()
        rho = _random_density(sampler)
        sigma = sampler.observable()
        analytic = float(np.real(np.trace(sigma @ derivative_tensor(spec, rho, 1))))
        fd = (gamma_value(spec, rho + FD_STEP * sigma) - gamma_value(spec, rho - FD_STEP * sigma)) / (2 * FD_STEP)
        derivative = max(derivative, _relative(fd, analytic))

        if trial < conservation_trials:
            small = SpecSampler(d, degree, scale=0.5, seed=seed + trial + 1).spec()
            trajectory = hartree_evolve(small, sampler.ket(1.0), grid, norm_tolerance=np.inf)
            conservation = max(conservation, trajectory.max_norm_drift())

    report = VerificationReport(f"algebra (d={d}, N={degree})", [
        CheckResult("derivation law", derivation, ALGEBRA_TOL, trials),
        CheckResult("bracket antisymmetry", antisymmetry, ALGEBRA_TOL, trials),
        CheckResult("bracket hermiticity", hermiticity, ALGEBRA_TOL, trials),
        CheckResult("derivative identity", derivative, DERIVATIVE_TOL, trials),
        CheckResult("norm conservation", conservation, CONSERVATION_TOL, conservation_trials),
        CheckResult("classical derivation law", _classical_derivation_residual(), CLASSICAL_DERIVATION_TOL, 1),
    ])
    logger.info("algebra suite: %s, max residual %.2e", "pass" if report.passed else "FAIL", report.max_residual)
    return report


def appendix_identity_suite(d: int = 2, n_max: int = 3, trials: int = 50, seed: int = DEFAULT_SEED) -> VerificationReport:
    """
    Tensor-power identities of primitive elements and the dual-path
    equality of the uniformized products.

    For primitive elements X^{⊗n}, Y^{⊗n} and a pure density rho:
    <rho^{⊗n}, (X·Y)^{⊗n}> = <rho, X·Y>^n and the bracket contracts to
    n <rho, X·Y>^(n-1) <rho, {X, Y}>. The functional-side expansion of
    each uniformized product must match the evaluation of its
    sector-wise components. For quadratic specs, the uniformized bracket
    tends to the classical bracket and eps times the Jordan product to
    the pointwise product, both at first order in eps.
    """
    if not 1 <= d <= 3:
        raise ValueError("Identity suite supports 1 <= d <= 3")
    if not 1 <= n_max <= 4:
        raise ValueError("Identity suite supports 1 <= n_max <= 4")
    sampler = SpecSampler(d, 2, seed=seed)
    realization = QuantumRealization(d)
    power = bracket = 0.0
    dual = {"associative": 0.0, "jordan": 0.0, "poisson": 0.0}
    products = {"associative": uniformized_product, "jordan": uniformized_jordan, "poisson": uniformized_poisson}
    params = UniformizationParams(DUAL_PATH_EPSILON, DUAL_PATH_N_MAX)

    for _ in range(trials):
        X, Y = sampler.observable(), sampler.observable()
        rho = _random_density(sampler)
        jordan_pairing = np.trace(rho @ realization.jordan(X, Y))
        bracket_pairing = np.trace(rho @ realization.poisson(X, Y))
        for n in range(1, n_max + 1):
            lhs = contract_slots(tensor_power_product(X, Y, n), d, n, [rho] * n)[0, 0]
            power = max(power, _relative(lhs, jordan_pairing ** n))
            lhs = contract_slots(tensor_power_bracket(X, Y, n), d, n, [rho] * n)[0, 0]
            bracket = max(bracket, _relative(lhs, n * jordan_pairing ** (n - 1) * bracket_pairing))

        gamma_spec, alpha_spec = sampler.spec(), sampler.spec()
        psi = sampler.ket(DUAL_PATH_NORM)
        state = StateDensity.from_ket(realization, psi)
        f, g = spec_functional(gamma_spec, params), spec_functional(alpha_spec, params)
        for kind, product in products.items():
            expected = functional_product_expansion(gamma_spec, alpha_spec, state, params.epsilon, kind)
            dual[kind] = max(dual[kind], _relative(functional_eval(product(f, g), psi), expected))

    limit = {"poisson": 0.0, "jordan": 0.0}
    limit_trials = min(trials, CLASSICAL_LIMIT_TRIALS)
    for _ in range(limit_trials):
        gamma_spec, alpha_spec = sampler.spec(), sampler.spec()
        deviations = classical_limit_deviations(gamma_spec, alpha_spec, sampler.ket(CLASSICAL_LIMIT_NORM))
        for kind, values in deviations.items():
            # an exactly vanishing leading term (d = 1 brackets) has nothing to halve
            if values[0] > DEVIATION_FLOOR:
                limit[kind] = max(limit[kind], float(np.max(np.abs(halving_ratios(values) - HALVING_RATIO))))

    checks = [
        CheckResult("power contraction", power, IDENTITY_TOL, trials),
        CheckResult("bracket contraction", bracket, IDENTITY_TOL, trials),
    ]
    checks += [CheckResult(f"dual path ({kind})", value, IDENTITY_TOL, trials) for kind, value in dual.items()]
    checks += [
        CheckResult(f"classical limit ({kind})", value, HALVING_RATIO_TOL, limit_trials) for kind, value in limit.items()
    ]
    report = VerificationReport(f"tensor-power identities (d={d}, n_max={n_max})", checks)
    logger.info("identity suite: %s, max residual %.2e", "pass" if report.passed else "FAIL", report.max_residual)
    return report


def commutation_suite(d: int = 2, n_max: int = 5, trials: int = 20, seed: int = DEFAULT_SEED,
                      parities: Sequence[str] = ("+", "-")) -> VerificationReport:
    """[n^(H), n^(A)] against n^([H, A]) sector-wise, for each parity."""
    checks = []
    for parity in parities:
        sampler = SpecSampler(d, 1, seed=seed)
        fock = FockTruncation(d, parity, n_max)
        worst = 0.0
        for _ in range(trials):
            H, A = sampler.observable(), sampler.observable()
            commutator = number_observable(H, fock).commutator(number_observable(A, fock))
            expected = number_observable(1j * (H @ A - A @ H), fock)
            residual = (commutator.scale(1j) - expected).max_norm()
            worst = max(worst, residual / max(1.0, expected.max_norm()))
        checks.append(CheckResult(f"number commutators ({parity})", worst, COMMUTATION_TOL, trials))
    report = VerificationReport(f"commutation relations (d={d}, n_max={n_max})", checks)
    logger.info("commutation suite: %s, max residual %.2e", "pass" if report.passed else "FAIL", report.max_residual)
    return report


def run_verification(seed: int = DEFAULT_SEED) -> List[VerificationReport]:
    """All suites at their default sizes."""
    return [
        algebra_suite(seed=seed),
        appendix_identity_suite(seed=seed),
        commutation_suite(seed=seed),
    ]
