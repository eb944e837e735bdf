"""
Hermitian eigensolution, truncation-convergence control and spectral pattern detection
"""

import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.linalg

from .constants import (
    DEFAULT_GROWTH_FACTOR,
    DEFAULT_INITIAL_DIM,
    DEFAULT_LEVEL_TOL,
    DEFAULT_MAX_DIM,
    HEURISTIC_OFFSET,
    HEURISTIC_SLOPE,
    MIN_INITIAL_DIM,
    PARITY_EPS,
    SECTOR_MINUS,
    SECTOR_MIXED,
    SECTOR_PLUS,
)
from .exceptions import ContractViolationError, ConvergenceError, DimensionError, ValidationError
from .hamiltonians import ModelKind, build_hamiltonian, parity_for
from .operators import (
    ModelParams,
    OperatorMatrix,
    Structure,
    grading_operator,
    identity,
    tensor,
)

logger = logging.getLogger(__name__)

# sector blocks of a parity-symmetric operator must decouple to this relative accuracy
_SECTOR_LEAK_RTOL = 1e-8

_SECTOR_ORDER = {SECTOR_PLUS: 0, SECTOR_MINUS: 1, SECTOR_MIXED: 2}


@dataclass(frozen=True)
class TruncationSpec:
    """Schedule for growing the boson truncation until the low spectrum settles"""

    initial_dim: int = DEFAULT_INITIAL_DIM
    growth_factor: float = DEFAULT_GROWTH_FACTOR
    max_dim: int = DEFAULT_MAX_DIM
    level_tol: float = DEFAULT_LEVEL_TOL

    def __post_init__(self) -> None:
        if self.initial_dim < MIN_INITIAL_DIM:
            raise ValidationError(f"initial_dim must be at least {MIN_INITIAL_DIM}, "
                                  f"got {self.initial_dim}")
        if not self.growth_factor > 1:
            raise ValidationError(f"growth_factor must exceed 1, got {self.growth_factor}")
        if self.max_dim < self.initial_dim:
            raise ValidationError(f"max_dim ({self.max_dim}) is below initial_dim "
                                  f"({self.initial_dim})")
        if not self.level_tol > 0:
            raise ValidationError(f"level_tol must be positive, got {self.level_tol}")

    def next_dim(self, n_boson: int) -> int:
        return min(max(n_boson + 1, math.ceil(n_boson * self.growth_factor)), self.max_dim)


@dataclass(frozen=True)
class SpectrumResult:
    levels: Tuple[float, ...]
    parity_sector: Tuple[str, ...]
    converged_dim: int
    residual: Tuple[float, ...]
    kind: Optional[str] = None


@dataclass(frozen=True)
class SectorSpectrum:
    """Eigenpairs of one parity sector; vectors are columns in the full space"""

    values: np.ndarray
    vectors: np.ndarray


@dataclass(frozen=True)
class SusyReport:
    is_susy_n2: bool
    spacing: Optional[float]


def dimension_heuristic(params: ModelParams) -> int:
    """Starting truncation that covers the displaced oscillator: 16 (g/w_c)^2 + 60"""
    return int(math.ceil(HEURISTIC_SLOPE * (params.g / params.omega_c) ** 2 + HEURISTIC_OFFSET))


def eigensolve(h: OperatorMatrix, k: int) -> Tuple[np.ndarray, np.ndarray]:
    """k smallest eigenvalues (ascending) and their orthonormal eigenvectors as columns"""
    if not h.has(Structure.HERMITIAN):
        raise ContractViolationError("eigensolve requires a matrix flagged hermitian")
    if int(k) != k or not 1 <= k <= h.dim:
        raise ValidationError(f"k must be an integer in [1, {h.dim}], got {k!r}")
    values, vectors = scipy.linalg.eigh(h.entries)
    return values[:k], vectors[:, :k]


def _sector_bases(parity_op: OperatorMatrix) -> Dict[str, np.ndarray]:
    """Orthonormal bases for the -1 (plus) and +1 (minus) eigenspaces"""
    dim = parity_op.dim
    if parity_op.has(Structure.DIAGONAL):
        signs = np.diag(parity_op.entries).real
        eye = np.eye(dim)
        return {SECTOR_PLUS: eye[:, signs < 0], SECTOR_MINUS: eye[:, signs > 0]}

    values, vectors = scipy.linalg.eigh(parity_op.entries)
    if np.max(np.abs(np.abs(values) - 1.0)) > 1e-8:
        raise ContractViolationError("parity operator must have eigenvalues +1 and -1 only")
    return {SECTOR_PLUS: vectors[:, values < 0], SECTOR_MINUS: vectors[:, values > 0]}


def sector_decompose(h: OperatorMatrix, parity_op: OperatorMatrix) -> Dict[str, SectorSpectrum]:
    """Diagonalize H separately on the two eigenspaces of a commuting parity"""
    if not h.has(Structure.HERMITIAN):
        raise ContractViolationError("sector_decompose requires a matrix flagged hermitian")
    if h.dim != parity_op.dim:
        raise DimensionError(f"Hamiltonian ({h.dim}) and parity ({parity_op.dim}) differ in size")

    bases = _sector_bases(parity_op)
    plus, minus = bases[SECTOR_PLUS], bases[SECTOR_MINUS]
    scale = max(1.0, float(np.max(np.abs(h.entries))))
    leak = 0.0
    if plus.size and minus.size:
        leak = float(np.max(np.abs(minus.conj().T @ h.entries @ plus)))
    if leak > _SECTOR_LEAK_RTOL * scale:
        raise ContractViolationError(f"Hamiltonian does not commute with the parity operator "
                                     f"(sector coupling {leak:.3e})")

    sectors = {}
    for name, basis in bases.items():
        block = basis.conj().T @ h.entries @ basis
        block = 0.5 * (block + block.conj().T)
        if block.size:
            values, local = scipy.linalg.eigh(block)
        else:
            values, local = np.zeros(0), np.zeros((0, 0))
        sectors[name] = SectorSpectrum(values=values, vectors=basis @ local)
    return sectors


def merge_sectors(sectors: Dict[str, SectorSpectrum], k: int) -> Tuple[np.ndarray, Tuple[str, ...]]:
    """k lowest levels across sectors, ascending; exact ties list plus before minus"""
    entries: List[Tuple[float, int, int, str]] = []
    for name, sector in sectors.items():
        for index, value in enumerate(sector.values[:k]):
            entries.append((float(value), _SECTOR_ORDER[name], index, name))
    entries.sort()
    chosen = entries[:k]
    return np.array([entry[0] for entry in chosen]), tuple(entry[3] for entry in chosen)


def _labelled_levels(params: ModelParams, kind: ModelKind, k: int,
                     n_boson: int) -> Tuple[np.ndarray, Tuple[str, ...]]:
    h = build_hamiltonian(kind, params, n_boson)
    sectors = sector_decompose(h, parity_for(kind, n_boson))
    return merge_sectors(sectors, k)


def converged_spectrum(params: ModelParams, kind: ModelKind, k: int,
                       trunc: Optional[TruncationSpec] = None) -> SpectrumResult:
    """Lowest k levels, grown in truncation until they stop moving.

    The reported levels are those of the smaller of the last two truncations,
    and ``residual`` holds their per-level change against the larger one.
    """
    trunc = trunc or TruncationSpec()
    if int(k) != k or k < 1:
        raise ValidationError(f"k must be a positive integer, got {k!r}")
    if k > 2 * trunc.initial_dim:
        raise DimensionError(f"cannot report {k} levels from a {2 * trunc.initial_dim}-dimensional "
                             f"initial truncation")

    n_boson = trunc.initial_dim
    levels, sectors = _labelled_levels(params, kind, k, n_boson)
    residual: Tuple[float, ...] = ()
    while n_boson < trunc.max_dim:
        next_dim = trunc.next_dim(n_boson)
        next_levels, next_sectors = _labelled_levels(params, kind, k, next_dim)
        change = np.abs(next_levels - levels)
        residual = tuple(float(x) for x in change)
        logger.debug("%s: n=%d -> %d, max level change %.3e", kind.value, n_boson, next_dim,
                     float(change.max()))
        if float(change.max()) < trunc.level_tol:
            return SpectrumResult(levels=tuple(float(x) for x in levels),
                                  parity_sector=sectors, converged_dim=n_boson,
                                  residual=residual, kind=kind.value)
        n_boson, levels, sectors = next_dim, next_levels, next_sectors

    raise ConvergenceError(f"{kind.value} spectrum did not converge to {trunc.level_tol:.1e} "
                           f"within max_dim={trunc.max_dim}",
                           last_dim=n_boson, residuals=residual)


def parity_labels(vectors: np.ndarray, parity_op: OperatorMatrix,
                  eps: float = PARITY_EPS) -> Tuple[str, ...]:
    """Sector tag per column: plus for expectation -1, minus for +1, mixed otherwise"""
    vectors = np.asarray(vectors)
    if vectors.ndim == 1:
        vectors = vectors[:, np.newaxis]
    if vectors.shape[0] != parity_op.dim:
        raise DimensionError(f"vectors of length {vectors.shape[0]} do not match parity "
                             f"dimension {parity_op.dim}")
    expectations = np.real(np.sum(vectors.conj() * (parity_op.entries @ vectors), axis=0))
    labels = []
    for value in expectations:
        if value <= -1.0 + eps:
            labels.append(SECTOR_PLUS)
        elif value >= 1.0 - eps:
            labels.append(SECTOR_MINUS)
        else:
            labels.append(SECTOR_MIXED)
    return tuple(labels)


def _levels_of(source: Union[SpectrumResult, Sequence[float]]) -> List[float]:
    if isinstance(source, SpectrumResult):
        return list(source.levels)
    return [float(x) for x in source]


def degeneracy_gaps(result: Union[SpectrumResult, Sequence[float]],
                    offset: int = 0) -> List[Tuple[int, float]]:
    """Pair splittings E[2m+1+offset] - E[2m+offset].

    offset=0 pairs the ground level with the first excited level; offset=1
    skips a simple ground level and pairs what follows.
    """
    levels = _levels_of(result)
    gaps = []
    pair = 0
    while 2 * pair + 1 + offset < len(levels):
        lower = 2 * pair + offset
        gaps.append((pair, levels[lower + 1] - levels[lower]))
        pair += 1
    return gaps


def detect_susy(result: Union[SpectrumResult, Sequence[float]], tol: float = 1e-8) -> SusyReport:
    """N=2 pattern: simple ground level, then equally spaced doublets"""
    levels = _levels_of(result)
    if len(levels) < 3 or levels[1] - levels[0] <= tol:
        return SusyReport(is_susy_n2=False, spacing=None)
    if any(abs(gap) > tol for _, gap in degeneracy_gaps(levels, offset=1)):
        return SusyReport(is_susy_n2=False, spacing=None)

    distinct = [levels[0]] + [0.5 * (levels[i] + levels[i + 1])
                              for i in range(1, len(levels) - 1, 2)]
    if len(levels) % 2 == 0:
        # unpaired top level; its partner fell outside the requested window
        distinct.append(levels[-1])

    spacings = np.diff(distinct)
    spacing = float(spacings[0])
    if spacing <= tol or np.any(np.abs(spacings - spacing) > tol):
        return SusyReport(is_susy_n2=False, spacing=None)
    return SusyReport(is_susy_n2=True, spacing=spacing)


def fermion_number(vector: np.ndarray) -> float:
    """<N_F> of a composite-space state, with N_F = -sigma_z acting on the qubit"""
    n_boson = vector.shape[0] // 2
    grading = tensor(grading_operator(), identity(n_boson)).entries
    norm = float(np.vdot(vector, vector).real)
    return float(np.vdot(vector, grading @ vector).real) / norm
