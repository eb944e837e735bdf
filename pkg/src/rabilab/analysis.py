"""
Instanton observables extracted from the spectrum, and the LMT1/LMT2 sweep drivers
"""

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg
from scipy.special import logsumexp

from .constants import (
    ACTION_WARN_RTOL,
    DEFAULT_BETA,
    DEFAULT_BETA_GROWTH,
    DEFAULT_HK_REL_TOL,
    DEFAULT_LMT2_G_MAX,
    DEFAULT_LMT2_STEPS,
    G_BOUND_SLACK,
    MAX_BETA,
    MIN_OVERLAP,
    SECTOR_MINUS,
    SECTOR_PLUS,
)
from .exceptions import (
    ConvergenceError,
    DomainError,
    IllConditionedError,
    RabiLabError,
    ScheduleError,
    UndefinedInputError,
    ValidationError,
)
from .hamiltonians import (
    ModelKind,
    h_free_boson,
    h_transformed,
    parity_transformed,
    self_energy_shift,
)
from .operators import ModelParams, configure_tolerances, structure_tolerances
from .spectra import SpectrumResult, TruncationSpec, converged_spectrum, sector_decompose

logger = logging.getLogger(__name__)

LMT1 = "lmt1"
LMT2 = "lmt2"


@dataclass(frozen=True)
class ActionReport:
    """Tunneling observables at one parameter point.

    ``s_euc`` is ``inf`` when the gap has closed (``gap_zero``), and
    ``g_of_g`` is ``nan`` at g = 0 (``g_undefined``).
    """

    e0: float
    e1: float
    gap: float
    s_euc: float
    g_of_g: float
    self_energy: float
    mean_deviation: float
    q0: Optional[float] = None
    c_dw: Optional[float] = None
    gap_zero: bool = False
    negative_action: bool = False
    g_undefined: bool = False
    g_bound_violated: bool = False


@dataclass(frozen=True)
class HeatKernelSpec:
    beta: float = DEFAULT_BETA
    beta_growth: float = DEFAULT_BETA_GROWTH
    rel_tol: float = DEFAULT_HK_REL_TOL

    def __post_init__(self) -> None:
        if not self.beta > 0:
            raise ValidationError(f"beta must be positive, got {self.beta}")
        if not self.beta_growth > 1:
            raise ValidationError(f"beta_growth must exceed 1, got {self.beta_growth}")
        if not self.rel_tol > 0:
            raise ValidationError(f"rel_tol must be positive, got {self.rel_tol}")


@dataclass(frozen=True)
class SweepPoint:
    index: int
    sweep_param: float
    params: ModelParams


@dataclass(frozen=True)
class SweepSchedule:
    """Ordered parameter points; sweep_param is g for lmt1 and r for lmt2"""

    mode: str
    points: Tuple[SweepPoint, ...]

    def __post_init__(self) -> None:
        if self.mode not in (LMT1, LMT2):
            raise ScheduleError(f"unknown sweep mode {self.mode!r}, expected {LMT1} or {LMT2}")
        if not self.points:
            raise ScheduleError("schedule has no points")
        if self.mode == LMT2:
            for point in self.points:
                _check_lmt2_point(point.sweep_param, point.params)


@dataclass(frozen=True)
class SweepOutcome:
    point: SweepPoint
    spectrum: Optional[SpectrumResult]
    report: Optional[ActionReport]
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.error is None


@dataclass(frozen=True)
class ResolventResult:
    distance: float
    converged_dim: int


def _check_lmt2_point(r: float, params: ModelParams) -> None:
    if not 0.0 <= r <= 1.0:
        raise ScheduleError(f"r must lie in [0, 1], got r={r}")
    if r < 1.0 and not params.omega_a > 0:
        raise ScheduleError(f"constraint omega_a(r) > 0 for r < 1 violated at r={r} "
                            f"(omega_a={params.omega_a})")
    if r == 1.0 and params.omega_a != 0:
        raise ScheduleError(f"constraint omega_a(1) = 0 violated (omega_a={params.omega_a})")
    if r == 0.0 and params.g != 0:
        raise ScheduleError(f"constraint g(0) = 0 violated (g={params.g})")
    if r > 0.0 and not params.g > 0:
        raise ScheduleError(f"constraint g(r) > 0 for r > 0 violated at r={r} (g={params.g})")


def lmt1_schedule(base: ModelParams, g_start: float, g_end: float, steps: int) -> SweepSchedule:
    """Uniform coupling grid at fixed frequencies"""
    if steps < 1:
        raise ScheduleError(f"steps must be at least 1, got {steps}")
    if g_start < 0 or g_end < g_start:
        raise ScheduleError(f"need 0 <= g_start <= g_end, got [{g_start}, {g_end}]")
    couplings = np.linspace(g_start, g_end, steps) if steps > 1 else np.array([g_start])
    points = tuple(SweepPoint(index, float(g), replace(base, g=float(g)))
                   for index, g in enumerate(couplings))
    return SweepSchedule(LMT1, points)


def lmt2_schedule(base: ModelParams, steps: int = DEFAULT_LMT2_STEPS,
                  g_max: Optional[float] = None,
                  omega_a0: Optional[float] = None) -> SweepSchedule:
    """Linear schedule omega_a(r) = omega_a0 (1 - r), g(r) = g_max r on r in [0, 1]"""
    if steps < 2:
        raise ScheduleError(f"an lmt2 schedule needs at least 2 points, got {steps}")
    g_max = DEFAULT_LMT2_G_MAX * base.omega_c if g_max is None else g_max
    omega_a0 = base.omega_a if omega_a0 is None else omega_a0
    if not omega_a0 > 0:
        raise ScheduleError(f"omega_a(0) must be positive, got {omega_a0}")
    if not g_max > 0:
        raise ScheduleError(f"g_max must be positive, got {g_max}")
    points = []
    for index, r in enumerate(np.linspace(0.0, 1.0, steps)):
        r = float(r)
        params = replace(base, omega_a=omega_a0 * (1.0 - r), g=g_max * r)
        points.append(SweepPoint(index, r, params))
    return SweepSchedule(LMT2, tuple(points))


def schedule_from_rows(base: ModelParams,
                       rows: Sequence[Tuple[float, float, float]]) -> SweepSchedule:
    """LMT2 schedule from tabulated (r, omega_a, g) rows"""
    points = tuple(SweepPoint(index, float(r), replace(base, omega_a=float(omega_a), g=float(g)))
                   for index, (r, omega_a, g) in enumerate(rows))
    return SweepSchedule(LMT2, points)


def self_energy(params: ModelParams) -> float:
    """-hbar g^2 / omega_c"""
    return -self_energy_shift(params)


def tunneling_gap(params: ModelParams,
                  trunc: Optional[TruncationSpec] = None) -> Tuple[float, float, float]:
    """(E0, E1, E1 - E0) of the quantum Rabi Hamiltonian"""
    result = converged_spectrum(params, ModelKind.QR, 2, trunc)
    e0, e1 = result.levels[0], result.levels[1]
    return e0, e1, e1 - e0


def euclidean_action_from_gap(gap: float, params: ModelParams) -> float:
    """-hbar ln(gap / hbar omega_a); inf once the gap has closed"""
    if gap <= 0 or params.omega_a == 0:
        return math.inf
    unperturbed = params.hbar * params.omega_a
    if gap > unperturbed * (1.0 + ACTION_WARN_RTOL):
        logger.warning("gap %.6g exceeds hbar*omega_a=%.6g; Euclidean action is negative",
                       gap, unperturbed)
    return -params.hbar * math.log(gap / unperturbed)


def g_function(s_euc: float, params: ModelParams) -> float:
    """G(g) = s_euc omega_c^2 / (2 hbar g^2) - 1"""
    if params.g == 0:
        raise UndefinedInputError("G(g) is undefined at g = 0")
    if math.isinf(s_euc):
        return math.inf
    return s_euc * params.omega_c ** 2 / (2.0 * params.hbar * params.g ** 2) - 1.0


def predicted_levels(s_euc: float, params: ModelParams) -> Tuple[float, float]:
    """Renormalized (E0, E1) predicted from the action: hbar w_c/2 -/+ (hbar w_a/2) e^(-s/hbar)"""
    centre = 0.5 * params.hbar * params.omega_c
    half_split = 0.5 * params.hbar * params.omega_a * math.exp(-s_euc / params.hbar)
    return centre - half_split, centre + half_split


def minima_separation(s_euc: float, c_dw: float, params: ModelParams) -> float:
    """Half-separation q0 of the quartic double well with coefficient c_dw"""
    if not c_dw > 0:
        raise ValidationError(f"c_dw must be positive, got {c_dw}")
    if s_euc < 0:
        raise ValidationError(f"q0 needs a non-negative action, got {s_euc}")
    if math.isinf(s_euc):
        return math.inf
    return (3.0 * s_euc / (4.0 * math.sqrt(2.0 * c_dw))) ** (1.0 / 3.0)


def action_report(params: ModelParams, e0: float, e1: float, renormalized: bool = False,
                  c_dw: Optional[float] = None) -> ActionReport:
    """Run the gap -> action -> G(g) -> q0 pipeline on measured levels"""
    gap = e1 - e0
    s_euc = euclidean_action_from_gap(gap, params)
    gap_zero = math.isinf(s_euc)
    # s_euc is about -1e-16 at g = 0 from round-off alone
    negative_action = gap > params.hbar * params.omega_a * (1.0 + ACTION_WARN_RTOL)

    try:
        g_of_g = g_function(s_euc, params)
        g_undefined = False
    except UndefinedInputError:
        g_of_g, g_undefined = math.nan, True
    g_bound_violated = (not g_undefined
                        and not (-1.0 - G_BOUND_SLACK <= g_of_g <= G_BOUND_SLACK))
    if g_bound_violated:
        logger.warning("G(g)=%.6g outside [-1, 0] at g=%.6g", g_of_g, params.g)

    shift = 0.0 if renormalized else self_energy_shift(params)
    measured_mean = 0.5 * (e0 + e1) + shift
    mean_deviation = measured_mean - 0.5 * params.hbar * params.omega_c

    q0 = None
    if c_dw is not None and not negative_action:
        q0 = minima_separation(max(s_euc, 0.0), c_dw, params)

    return ActionReport(e0=e0, e1=e1, gap=gap, s_euc=s_euc, g_of_g=g_of_g,
                        self_energy=self_energy(params), mean_deviation=mean_deviation,
                        q0=q0, c_dw=c_dw, gap_zero=gap_zero, negative_action=negative_action,
                        g_undefined=g_undefined, g_bound_violated=g_bound_violated)


def _heat_kernel_energy(values: np.ndarray, weights: np.ndarray, beta: float) -> float:
    return float(-logsumexp(-beta * values, b=weights) / beta)


def _sector_heat_kernel(values: np.ndarray, weights: np.ndarray, params: ModelParams,
                        hk: HeatKernelSpec, level_tol: float) -> float:
    cluster = float(np.sum(weights[values - values[0] <= level_tol]))
    if cluster < MIN_OVERLAP:
        raise IllConditionedError(f"reference state overlap with the sector ground level is "
                                  f"{cluster:.3e}")
    beta = hk.beta
    energy = _heat_kernel_energy(values, weights, beta)
    while beta < MAX_BETA:
        beta *= hk.beta_growth
        refined = _heat_kernel_energy(values, weights, beta)
        logger.debug("heat kernel: beta=%.3e E=%.15g", beta, refined)
        if abs(refined - energy) <= hk.rel_tol * max(abs(refined), params.hbar * params.omega_c):
            return refined
        energy = refined
    raise ConvergenceError(f"heat-kernel energy did not settle below beta={MAX_BETA:.1e}")


def e_pm_heat_kernel(params: ModelParams, trunc: Optional[TruncationSpec] = None,
                     hk: Optional[HeatKernelSpec] = None,
                     renormalized: bool = False) -> Tuple[float, float]:
    """E+ and E- as the large-beta limits of -(1/beta) ln <Omega~|exp(-beta H~)|Omega~>.

    Omega~+- = (|up,0> +- |down,0>)/sqrt(2) lie in the plus and minus sectors
    of P~, so each limit is taken inside one sector of H~.
    """
    trunc = trunc or TruncationSpec()
    hk = hk or HeatKernelSpec()
    kind = ModelKind.TRANSFORMED_REN if renormalized else ModelKind.TRANSFORMED
    n_boson = converged_spectrum(params, kind, 2, trunc).converged_dim

    h = h_transformed(params, n_boson, renormalized=renormalized)
    sectors = sector_decompose(h, parity_transformed(n_boson))

    reference = {SECTOR_PLUS: np.zeros(2 * n_boson), SECTOR_MINUS: np.zeros(2 * n_boson)}
    reference[SECTOR_PLUS][[0, n_boson]] = [1.0, 1.0]
    reference[SECTOR_MINUS][[0, n_boson]] = [1.0, -1.0]

    energies = {}
    for name in (SECTOR_PLUS, SECTOR_MINUS):
        sector = sectors[name]
        state = reference[name] / math.sqrt(2.0)
        weights = np.abs(sector.vectors.conj().T @ state) ** 2
        energies[name] = _sector_heat_kernel(sector.values, weights, params, hk, trunc.level_tol)
    return energies[SECTOR_PLUS], energies[SECTOR_MINUS]


def _resolvent_gap(params: ModelParams, z: complex, n_boson: int) -> float:
    dim = 2 * n_boson
    shifted = h_transformed(params, n_boson, renormalized=True).entries - z * np.eye(dim)
    interacting = scipy.linalg.solve(shifted, np.eye(dim, dtype=complex))
    free = np.diag(1.0 / (np.diag(h_free_boson(params, n_boson).entries) - z))
    return float(np.linalg.norm(interacting - free, 2))


def resolvent_report(params: ModelParams, z: complex,
                     trunc: Optional[TruncationSpec] = None) -> ResolventResult:
    """Resolvent distance grown in truncation until it settles"""
    trunc = trunc or TruncationSpec()
    z = complex(z)
    if z.imag == 0:
        raise DomainError(f"resolvent needs Im z != 0, got z={z}")

    n_boson = trunc.initial_dim
    distance = _resolvent_gap(params, z, n_boson)
    while n_boson < trunc.max_dim:
        next_dim = trunc.next_dim(n_boson)
        refined = _resolvent_gap(params, z, next_dim)
        if abs(refined - distance) < trunc.level_tol:
            return ResolventResult(distance=distance, converged_dim=n_boson)
        n_boson, distance = next_dim, refined
    raise ConvergenceError(f"resolvent distance did not converge within max_dim={trunc.max_dim}",
                           last_dim=n_boson)


def resolvent_distance(params: ModelParams, z: complex,
                       trunc: Optional[TruncationSpec] = None) -> float:
    """||(H~_ren - z)^-1 - (H_b - z)^-1|| on the common truncated space"""
    return resolvent_report(params, z, trunc).distance


def evaluate_point(point: SweepPoint, kind: ModelKind, k: int, trunc: TruncationSpec,
                   c_dw: Optional[float] = None) -> SweepOutcome:
    """Spectrum and action report for one schedule point; failures are recorded, not raised"""
    try:
        spectrum = converged_spectrum(point.params, kind, k, trunc)
        report = action_report(point.params, spectrum.levels[0], spectrum.levels[1],
                               renormalized=kind.renormalized, c_dw=c_dw)
    except RabiLabError as e:
        logger.warning("sweep point %d (%.6g) failed: %s", point.index, point.sweep_param, e)
        return SweepOutcome(point, None, None, error=str(e))
    return SweepOutcome(point, spectrum, report)


def _evaluate_packed(
        task: Tuple[SweepPoint, ModelKind, int, TruncationSpec, Optional[float]]) -> SweepOutcome:
    return evaluate_point(*task)


def run_sweep(schedule: SweepSchedule, kind: ModelKind, k: int,
              trunc: Optional[TruncationSpec] = None, jobs: int = 1,
              c_dw: Optional[float] = None) -> List[SweepOutcome]:
    """Evaluate every schedule point; results come back in schedule order"""
    trunc = trunc or TruncationSpec()
    if k < 2:
        raise ValidationError("a sweep needs at least 2 levels for the tunneling gap")
    tasks = [(point, kind, k, trunc, c_dw) for point in schedule.points]
    logger.info("sweeping %d %s points (%s, k=%d, jobs=%d)", len(tasks), schedule.mode,
                kind.value, k, jobs)

    if jobs <= 1 or len(tasks) == 1:
        return [_evaluate_packed(task) for task in tasks]

    with ProcessPoolExecutor(max_workers=jobs, initializer=configure_tolerances,
                             initargs=structure_tolerances()) as pool:
        return list(pool.map(_evaluate_packed, tasks))
