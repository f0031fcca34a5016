"""
Errors - Exception hierarchy for the uniformize package.

Validation problems subclass ValueError and numerical guard failures
subclass RuntimeError, so callers can catch either the package base
class or the builtin they already expect.
"""
from typing import List, Optional


class UniformizeError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(UniformizeError, ValueError):
    """An experiment configuration failed schema or value validation."""


class DimensionError(UniformizeError, ValueError):
    """Spaces, sectors or truncations do not match, or a size cap is exceeded."""


class NonCommutingError(UniformizeError, ValueError):
    """An operator that must commute with a projector or another operator does not."""

    def __init__(self, message: str, commutator_norm: float):
        super().__init__(f"{message} (commutator norm {commutator_norm:.3e})")
        self.commutator_norm = commutator_norm


class NotPseudoHermitianError(UniformizeError, ValueError):
    """An operator is not Hermitian with respect to the attached metric."""

    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (residual {residual:.3e})")
        self.residual = residual


class NumericalGuardError(UniformizeError, RuntimeError):
    """A numerical safeguard (tail weight, CFL bound, norm drift) tripped."""


class ConvergenceError(NumericalGuardError):
    """An iteration did not reach its tolerance."""

    def __init__(self, message: str, history: Optional[List[float]] = None):
        super().__init__(message)
        self.history = list(history) if history is not None else []
