"""
Custom exceptions for rabi-lab
"""

from typing import Sequence


class RabiLabError(Exception):
    """Base exception for rabi-lab errors"""
    pass


class ValidationError(RabiLabError):
    """Raised when an input fails validation"""
    pass


class DimensionError(ValidationError):
    """Raised when a Fock-space or matrix dimension is unusable"""
    pass


class DomainError(ValidationError):
    """Raised when an argument lies outside the operation's domain"""
    pass


class UndefinedInputError(ValidationError):
    """Raised when a quantity is undefined for the given input (e.g. G at g = 0)"""
    pass


class ScheduleError(ValidationError):
    """Raised when a sweep schedule violates its endpoint constraints"""
    pass


class ConfigError(ValidationError):
    """Raised for unknown keys or unparsable values in a configuration"""
    pass


class ContractViolationError(RabiLabError):
    """Raised when a matrix does not satisfy its declared structure"""
    pass


class ConvergenceError(RabiLabError):
    """Raised when truncation growth hits its ceiling before levels settle"""

    def __init__(self, message: str, last_dim: int = 0,
                 residuals: Sequence[float] = ()) -> None:
        super().__init__(message)
        self.last_dim = last_dim
        self.residuals = tuple(residuals)


class IllConditionedError(RabiLabError):
    """Raised when a reference state barely overlaps the state it should project on"""
    pass


class OutputError(RabiLabError):
    """Raised when result files cannot be written"""
    pass
