"""
rabilab: truncated Fock-space laboratory for the quantum Rabi model
"""

__version__ = "0.1.0"

from .analysis import (
    ActionReport,
    HeatKernelSpec,
    SweepSchedule,
    e_pm_heat_kernel,
    resolvent_distance,
    run_sweep,
    tunneling_gap,
)
from .exceptions import (
    ContractViolationError,
    ConvergenceError,
    RabiLabError,
    ValidationError,
)
from .hamiltonians import ModelKind, h_qr, h_transformed
from .operators import ModelParams, OperatorMatrix, Structure
from .spectra import SpectrumResult, TruncationSpec, converged_spectrum

__all__ = [
    "ActionReport",
    "ContractViolationError",
    "ConvergenceError",
    "HeatKernelSpec",
    "ModelKind",
    "ModelParams",
    "OperatorMatrix",
    "RabiLabError",
    "SpectrumResult",
    "Structure",
    "SweepSchedule",
    "TruncationSpec",
    "ValidationError",
    "converged_spectrum",
    "e_pm_heat_kernel",
    "h_qr",
    "h_transformed",
    "resolvent_distance",
    "run_sweep",
    "tunneling_gap",
]
