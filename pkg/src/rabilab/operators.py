"""
Elementary operators on the truncated single-boson Fock space and the qubit

Qubit basis ordering is index 0 = |up>, index 1 = |down>, so that
tensor(q, b) lays out the operator matrix [[q00 b, q01 b], [q10 b, q11 b]]
with the |up> block first.
"""

import enum
import logging
import math
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np
import scipy.linalg
from scipy.special import gammaln

from .constants import HERMITIAN_TOL, UNITARY_TOL
from .exceptions import ContractViolationError, DimensionError, ValidationError

logger = logging.getLogger(__name__)

_tolerances = {"hermitian": HERMITIAN_TOL, "unitary": UNITARY_TOL}

DISPLACEMENT_METHODS = ("exponentiate", "laguerre")


def configure_tolerances(hermitian: Optional[float] = None,
                         unitary: Optional[float] = None) -> None:
    """Override the structure-flag tolerances for this process"""
    if hermitian is not None:
        if hermitian <= 0:
            raise ValidationError("hermitian tolerance must be positive")
        _tolerances["hermitian"] = float(hermitian)
    if unitary is not None:
        if unitary <= 0:
            raise ValidationError("unitary tolerance must be positive")
        _tolerances["unitary"] = float(unitary)


def structure_tolerances() -> Tuple[float, float]:
    """Return the (hermitian, unitary) tolerances currently in force"""
    return _tolerances["hermitian"], _tolerances["unitary"]


@dataclass(frozen=True)
class ModelParams:
    """Physical parameters of one model instance.

    Frequencies are in units of a reference frequency; hbar defaults to 1.
    ``a2_coeff`` is the coefficient C of the A^2 (mass) term
    hbar C g^2 (a + a^dagger)^2; zero gives the plain quantum Rabi model.
    """

    omega_a: float
    omega_c: float
    g: float = 0.0
    hbar: float = 1.0
    a2_coeff: float = 0.0

    def __post_init__(self) -> None:
        for name in ("omega_a", "omega_c", "g", "hbar", "a2_coeff"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ValidationError(f"{name} must be finite, got {value!r}")
        if self.omega_c <= 0:
            raise ValidationError(f"omega_c must be positive, got {self.omega_c}")
        if self.omega_a < 0:
            raise ValidationError(f"omega_a must be non-negative, got {self.omega_a}")
        if self.g < 0:
            raise ValidationError(f"g must be non-negative, got {self.g}")
        if self.hbar <= 0:
            raise ValidationError(f"hbar must be positive, got {self.hbar}")


class Structure(enum.Flag):
    """Declared structure of an OperatorMatrix; flags combine"""

    GENERAL = 0
    HERMITIAN = enum.auto()
    UNITARY = enum.auto()
    DIAGONAL = enum.auto()


@dataclass(frozen=True, eq=False)
class OperatorMatrix:
    """Dense complex square matrix with numerically checked structure flags"""

    entries: np.ndarray
    structure: Structure = Structure.GENERAL

    def __post_init__(self) -> None:
        matrix = np.array(self.entries, dtype=complex)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1] or matrix.shape[0] == 0:
            raise DimensionError(f"operator matrix must be square and non-empty, "
                                 f"got shape {matrix.shape}")
        matrix.setflags(write=False)
        object.__setattr__(self, "entries", matrix)
        self.verify()

    @property
    def dim(self) -> int:
        """Number of rows (and columns)"""
        return int(self.entries.shape[0])

    def has(self, flag: Structure) -> bool:
        """True when every bit of ``flag`` is declared"""
        return (self.structure & flag) == flag

    def verify(self, hermitian_tol: Optional[float] = None,
               unitary_tol: Optional[float] = None) -> None:
        """Check every declared flag against its numeric criterion"""
        default_h, default_u = structure_tolerances()
        hermitian_tol = default_h if hermitian_tol is None else hermitian_tol
        unitary_tol = default_u if unitary_tol is None else unitary_tol
        m = self.entries
        if not np.all(np.isfinite(m)):
            bad = int(np.count_nonzero(~np.isfinite(m)))
            raise ValidationError(f"operator matrix has {bad} non-finite entries")
        if self.has(Structure.HERMITIAN):
            deviation = float(np.max(np.abs(m - m.conj().T)))
            if deviation > hermitian_tol:
                raise ContractViolationError(
                    f"matrix flagged hermitian deviates by {deviation:.3e} "
                    f"(tolerance {hermitian_tol:.1e})")
        if self.has(Structure.UNITARY):
            if self.has(Structure.DIAGONAL):
                deviation = float(np.max(np.abs(np.abs(np.diag(m)) ** 2 - 1.0)))
            else:
                deviation = float(np.max(np.abs(m.conj().T @ m - np.eye(self.dim))))
            if deviation > unitary_tol:
                raise ContractViolationError(
                    f"matrix flagged unitary deviates by {deviation:.3e} "
                    f"(tolerance {unitary_tol:.1e})")
        if self.has(Structure.DIAGONAL):
            if np.count_nonzero(m - np.diag(np.diag(m))):
                raise ContractViolationError("matrix flagged diagonal has off-diagonal entries")

    def dagger(self) -> "OperatorMatrix":
        return OperatorMatrix(self.entries.conj().T, self.structure)


def _require_dim(n_boson: int, minimum: int) -> None:
    if int(n_boson) != n_boson or n_boson < minimum:
        raise DimensionError(f"n_boson must be an integer >= {minimum}, got {n_boson!r}")


def identity(dim: int) -> OperatorMatrix:
    _require_dim(dim, 1)
    return OperatorMatrix(np.eye(dim),
                          Structure.HERMITIAN | Structure.UNITARY | Structure.DIAGONAL)


def make_ladder(n_boson: int) -> Tuple[OperatorMatrix, OperatorMatrix]:
    """Return (a, a^dagger) with a[m, m+1] = sqrt(m+1)"""
    _require_dim(n_boson, 2)
    a = np.diag(np.sqrt(np.arange(1, n_boson, dtype=float)), 1).astype(complex)
    return OperatorMatrix(a), OperatorMatrix(a.conj().T)


def number_operator(n_boson: int) -> OperatorMatrix:
    """a^dagger a with exact integer diagonal 0..n_boson-1"""
    _require_dim(n_boson, 1)
    return OperatorMatrix(np.diag(np.arange(n_boson, dtype=float)),
                          Structure.HERMITIAN | Structure.DIAGONAL)


def make_quadratures(n_boson: int,
                     params: ModelParams) -> Tuple[OperatorMatrix, OperatorMatrix]:
    """Position x = sqrt(hbar/2w)(a + a^dag) and momentum p = -i sqrt(hbar w/2)(a - a^dag)"""
    a, a_dag = make_ladder(n_boson)
    hbar, omega = params.hbar, params.omega_c
    x = math.sqrt(hbar / (2.0 * omega)) * (a.entries + a_dag.entries)
    p = -1j * math.sqrt(hbar * omega / 2.0) * (a.entries - a_dag.entries)
    return OperatorMatrix(x, Structure.HERMITIAN), OperatorMatrix(p, Structure.HERMITIAN)


def number_parity(n_boson: int) -> OperatorMatrix:
    """(-1)^(a^dagger a)"""
    _require_dim(n_boson, 1)
    signs = np.where(np.arange(n_boson) % 2 == 0, 1.0, -1.0)
    return OperatorMatrix(np.diag(signs),
                          Structure.HERMITIAN | Structure.UNITARY | Structure.DIAGONAL)


def _exponentiated_displacement(alpha: complex, n_boson: int) -> np.ndarray:
    a, a_dag = make_ladder(n_boson)
    generator = alpha * a_dag.entries - np.conj(alpha) * a.entries
    # i * generator is hermitian; exp(G) = V exp(-i w) V^dagger
    w, v = scipy.linalg.eigh(1j * generator)
    return (v * np.exp(-1j * w)) @ v.conj().T


def _laguerre_functions(x: float, log_abs_alpha: float, n_boson: int) -> np.ndarray:
    """Table f[j, k] = sqrt(j!/(j+k)!) |alpha|^k e^(-x/2) L_j^(k)(x), x = |alpha|^2.

    Built by the three-term recurrence in j on the normalized functions, which
    stay bounded by 1 where the raw polynomial and its prefactor over- and
    underflow.
    """
    k = np.arange(n_boson, dtype=float)
    table = np.zeros((n_boson, n_boson))
    previous = np.zeros(n_boson)
    current = np.exp(k * log_abs_alpha - 0.5 * x - 0.5 * gammaln(k + 1.0))
    for j in range(n_boson):
        table[j] = current
        following = ((2.0 * j + 1.0 + k - x) * current
                     - np.sqrt(j * (j + k)) * previous) / np.sqrt((j + 1.0) * (j + k + 1.0))
        previous, current = current, following
    return table


def _laguerre_displacement(alpha: complex, n_boson: int) -> np.ndarray:
    x = abs(alpha) ** 2
    rows, cols = np.tril_indices(n_boson)
    k = rows - cols
    magnitude = _laguerre_functions(x, math.log(abs(alpha)), n_boson)[cols, k]

    # powers of the unit phase by repeated multiplication keep axis-aligned alphas exact
    unit = alpha / abs(alpha)
    lower_phase = np.cumprod(np.concatenate(([1.0 + 0j], np.full(n_boson - 1, unit))))
    upper_phase = np.cumprod(np.concatenate(([1.0 + 0j], np.full(n_boson - 1, -np.conj(unit)))))

    out = np.zeros((n_boson, n_boson), dtype=complex)
    out[rows, cols] = magnitude * lower_phase[k]
    out[cols, rows] = magnitude * upper_phase[k]
    return out


def displacement(alpha: complex, n_boson: int,
                 method: str = "exponentiate") -> OperatorMatrix:
    """Displacement operator exp(alpha a^dagger - alpha* a).

    ``exponentiate`` exponentiates the truncated generator and is exactly
    unitary on the truncated space. ``laguerre`` fills in the closed-form
    matrix elements of the untruncated operator, so it is only approximately
    unitary near the truncation edge.
    """
    _require_dim(n_boson, 2)
    if method not in DISPLACEMENT_METHODS:
        raise ValidationError(f"unknown displacement method {method!r}, "
                              f"expected one of {DISPLACEMENT_METHODS}")
    alpha = complex(alpha)
    if alpha == 0:
        return identity(n_boson)
    if method == "exponentiate":
        return OperatorMatrix(_exponentiated_displacement(alpha, n_boson), Structure.UNITARY)
    return OperatorMatrix(_laguerre_displacement(alpha, n_boson))


def tensor(q: OperatorMatrix, b: OperatorMatrix) -> OperatorMatrix:
    """Qubit (2x2) tensor boson (n x n), |up> block first"""
    if q.dim != 2:
        raise DimensionError(f"qubit factor must be 2x2, got {q.dim}x{q.dim}")
    return OperatorMatrix(np.kron(q.entries, b.entries), q.structure & b.structure)


def pauli() -> Dict[str, OperatorMatrix]:
    """sigma_x, sigma_y, sigma_z and the spin ladder sigma_+ = (sigma_x + i sigma_y)/2, sigma_-"""
    hu = Structure.HERMITIAN | Structure.UNITARY
    return {
        "x": OperatorMatrix(np.array([[0, 1], [1, 0]]), hu),
        "y": OperatorMatrix(np.array([[0, -1j], [1j, 0]]), hu),
        "z": OperatorMatrix(np.array([[1, 0], [0, -1]]), hu | Structure.DIAGONAL),
        "plus": OperatorMatrix(np.array([[0, 1], [0, 0]])),
        "minus": OperatorMatrix(np.array([[0, 0], [1, 0]])),
    }


def grading_operator() -> OperatorMatrix:
    """N_F = -sigma_z: +1 on bosonic |down>, -1 on fermionic |up>"""
    return OperatorMatrix(np.diag([-1.0, 1.0]),
                          Structure.HERMITIAN | Structure.UNITARY | Structure.DIAGONAL)
