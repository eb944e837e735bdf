"""
Position-grid discretization of the spin-boson form of the Hamiltonian

Serves as an independent cross-check of the Fock-space pipeline: the grid
Hamiltonian is U0^dagger H_QR U0, which shares its spectrum with H~.
"""

import logging
import math
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np

from .constants import DEFAULT_GRID_POINTS, DEFAULT_STENCIL_ORDER, MIN_GRID_POINTS
from .exceptions import DomainError, ValidationError
from .hamiltonians import boson_rotation
from .operators import ModelParams, OperatorMatrix, Structure, make_quadratures
from .spectra import SpectrumResult, eigensolve, parity_labels

logger = logging.getLogger(__name__)

# central-difference weights for d^2/dx^2 at offsets 0, 1, 2 (times 1/h^2)
_STENCILS: Dict[int, Tuple[float, ...]] = {
    2: (-2.0, 1.0),
    4: (-5.0 / 2.0, 4.0 / 3.0, -1.0 / 12.0),
}


@dataclass(frozen=True)
class GridSpec:
    """Uniform grid on (-L, L) with Dirichlet walls at +-L"""

    half_width: float
    points: int = DEFAULT_GRID_POINTS
    stencil_order: int = DEFAULT_STENCIL_ORDER

    def __post_init__(self) -> None:
        if self.stencil_order not in _STENCILS:
            raise ValidationError(f"stencil_order must be one of {sorted(_STENCILS)}, "
                                  f"got {self.stencil_order}")
        if self.points < MIN_GRID_POINTS:
            raise DomainError(f"grid needs at least {MIN_GRID_POINTS} points, got {self.points}")
        if not self.half_width > 0:
            raise DomainError(f"half_width must be positive, got {self.half_width}")

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_width / (self.points + 1)


def well_position(params: ModelParams) -> float:
    """|x| of the displaced potential minima, (g/w_c) sqrt(2 hbar/w_c)"""
    return params.g / params.omega_c * math.sqrt(2.0 * params.hbar / params.omega_c)


def required_half_width(params: ModelParams) -> float:
    return 4.0 * well_position(params) + 6.0 * math.sqrt(params.hbar / params.omega_c)


def check_coverage(params: ModelParams, grid: GridSpec) -> None:
    needed = required_half_width(params)
    if grid.half_width <= needed:
        raise DomainError(f"half_width {grid.half_width} does not cover the displaced wells; "
                          f"need L > {needed:.4g}")


def grid_positions(grid: GridSpec) -> np.ndarray:
    """Interior nodes x_j = h (j - (M+1)/2), j = 1..M, symmetric about 0"""
    j = np.arange(1, grid.points + 1, dtype=float)
    return grid.spacing * (j - 0.5 * (grid.points + 1))


def _second_derivative(grid: GridSpec) -> np.ndarray:
    weights = _STENCILS[grid.stencil_order]
    m = grid.points
    laplacian = weights[0] * np.eye(m)
    for offset, weight in enumerate(weights[1:], start=1):
        band = weight * np.ones(m - offset)
        laplacian += np.diag(band, offset) + np.diag(band, -offset)
    return laplacian / grid.spacing ** 2


def block_potentials(params: ModelParams, x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """(|up>, |down>) potentials (w_c^2/2) x^2 +- g sqrt(2 hbar w_c) x"""
    harmonic = 0.5 * params.omega_c ** 2 * x ** 2
    linear = params.g * math.sqrt(2.0 * params.hbar * params.omega_c) * x
    return harmonic + linear, harmonic - linear


def grid_hamiltonian(params: ModelParams, grid: GridSpec) -> OperatorMatrix:
    """Two-component finite-difference Hamiltonian of size 2M"""
    if params.a2_coeff:
        raise ValidationError("the grid oracle does not model the A^2 term")
    check_coverage(params, grid)
    x = grid_positions(grid)
    kinetic = -0.5 * params.hbar ** 2 * _second_derivative(grid)
    upper, lower = block_potentials(params, x)
    coupling = -0.5 * params.hbar * params.omega_a * np.eye(grid.points)
    h = np.block([[kinetic + np.diag(upper), coupling],
                  [coupling, kinetic + np.diag(lower)]])
    logger.debug("grid Hamiltonian: M=%d, L=%.4g, order=%d", grid.points, grid.half_width,
                 grid.stencil_order)
    return OperatorMatrix(h, Structure.HERMITIAN)


def grid_parity(grid: GridSpec) -> OperatorMatrix:
    """-sigma_x composed with the reflection x -> -x"""
    reflection = np.fliplr(np.eye(grid.points))
    zero = np.zeros_like(reflection)
    return OperatorMatrix(np.block([[zero, -reflection], [-reflection, zero]]),
                          Structure.HERMITIAN | Structure.UNITARY)


def oracle_spectrum(params: ModelParams, grid: GridSpec, k: int) -> SpectrumResult:
    values, vectors = eigensolve(grid_hamiltonian(params, grid), k)
    labels = parity_labels(vectors, grid_parity(grid))
    return SpectrumResult(levels=tuple(float(v) for v in values), parity_sector=labels,
                          converged_dim=grid.points, residual=tuple([math.nan] * k),
                          kind="grid")


def ground_state_components(params: ModelParams, grid: GridSpec) -> Tuple[np.ndarray, np.ndarray]:
    """(|up>, |down>) grid amplitudes of the ground state, phased so the largest is positive"""
    _, vectors = eigensolve(grid_hamiltonian(params, grid), 1)
    vector = vectors[:, 0]
    pivot = vector[np.argmax(np.abs(vector))]
    state = (vector * np.conj(pivot) / abs(pivot)).real
    return state[:grid.points], state[grid.points:]


def fourier_check(n_boson: int, params: Optional[ModelParams] = None,
                  projected: bool = True) -> float:
    """Largest deviation of U1^dag x U1 from p/w_c and of U1^dag p U1 from -w_c x.

    With ``projected`` the comparison is restricted to Fock states 0..n-2.
    """
    params = params or ModelParams(omega_a=0.0, omega_c=1.0)
    x, p = make_quadratures(n_boson, params)
    rotation = boson_rotation(n_boson).entries
    x_rotated = rotation.conj().T @ x.entries @ rotation
    p_rotated = rotation.conj().T @ p.entries @ rotation

    first = x_rotated - p.entries / params.omega_c
    second = p_rotated + params.omega_c * x.entries
    if projected:
        first, second = first[:-1, :-1], second[:-1, :-1]
    return float(max(np.max(np.abs(first)), np.max(np.abs(second))))
