"""
Uniformize - Uniformized n-particle systems and their mean-field limit.
"""

__version__ = "0.1.0"

from .errors import (
    ConfigError,
    ConvergenceError,
    DimensionError,
    NonCommutingError,
    NotPseudoHermitianError,
    NumericalGuardError,
    UniformizeError,
)
from .tensor_core import Ket, Metric, Operator, Sector, SpaceLabel, metric_expm, symmetrizer
from .phase_space import GridSpec
from .hamiltonian_algebra import (
    ClassicalRealization,
    HamiltonianFunctionalSpec,
    QuantumRealization,
    StateDensity,
    gamma_eval,
    functional_derivative,
)
from .uniformization import (
    FockTruncation,
    UniformizationParams,
    build_Hn,
    build_lattice_hartree,
    build_two_mode,
    functional_product_expansion,
)
from .dynamics import TimeGrid, Trajectory, hartree_evolve, sector_propagate, vlasov_evolve_density
from .meanfield import (
    SolitonProblem,
    build_disentangled,
    coherent_state_oracle,
    convergence_study,
    epsilon_solution,
    finite_difference_directions,
    gap_study,
    generalized_soliton_check,
    hartree_fixed_point,
)
from .sampling import SpecSampler
from .config import ExperimentConfig, load_config
from .harness import ResultTable, RunResult, describe, run

__all__ = [
    'UniformizeError', 'ConfigError', 'DimensionError', 'NonCommutingError',
    'NotPseudoHermitianError', 'NumericalGuardError', 'ConvergenceError',
    'Sector', 'SpaceLabel', 'Metric', 'Operator', 'Ket', 'symmetrizer', 'metric_expm',
    'GridSpec',
    'QuantumRealization', 'ClassicalRealization', 'StateDensity', 'HamiltonianFunctionalSpec',
    'gamma_eval', 'functional_derivative',
    'UniformizationParams', 'FockTruncation', 'build_Hn', 'build_lattice_hartree',
    'build_two_mode', 'functional_product_expansion',
    'TimeGrid', 'Trajectory', 'hartree_evolve', 'vlasov_evolve_density', 'sector_propagate',
    'build_disentangled', 'epsilon_solution', 'coherent_state_oracle', 'convergence_study',
    'hartree_fixed_point', 'gap_study', 'SolitonProblem', 'generalized_soliton_check',
    'finite_difference_directions',
    'SpecSampler',
    'ExperimentConfig', 'load_config', 'ResultTable', 'RunResult', 'run', 'describe',
]
