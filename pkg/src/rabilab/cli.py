"""
Command-line interface for rabi-lab
"""

import argparse
import logging
import sys
import time
from dataclasses import asdict
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple

from . import __version__
from .analysis import (
    LMT1,
    LMT2,
    SweepPoint,
    SweepSchedule,
    action_report,
    e_pm_heat_kernel,
    lmt1_schedule,
    lmt2_schedule,
    predicted_levels,
    resolvent_report,
    run_sweep,
    tunneling_gap,
)
from .config import LabConfig, resolve_config
from .constants import (
    EXIT_CONVERGENCE,
    EXIT_NO_SUSY,
    EXIT_OK,
    EXIT_USAGE,
    LOG_FORMAT,
    NODE_TOL,
)
from .exceptions import ConfigError, ConvergenceError, RabiLabError, ValidationError
from .fileio import (
    ACTION_HEADER,
    GROUND_HEADER,
    ORACLE_HEADER,
    RESOLVENT_HEADER,
    SPECTRUM_HEADER,
    action_row,
    ground_rows,
    read_schedule,
    spectrum_rows,
    write_csv,
)
from .hamiltonians import ModelKind, build_hamiltonian, z2_commutators
from .manifest import RunManifest, load_manifest, make_run_id, write_manifest
from .operators import ModelParams, configure_tolerances
from .oracle import fourier_check, ground_state_components, grid_positions, oracle_spectrum
from .spectra import (
    converged_spectrum,
    detect_susy,
    dimension_heuristic,
    eigensolve,
    fermion_number,
)

logger = logging.getLogger(__name__)

MODEL_CHOICES = ["qr", "qr-ren", "transformed", "transformed-ren", "free"]

# argparse destinations that are not LabConfig settings
_NON_SETTINGS = {"command", "config", "verbose", "sweep"}


def _common_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)

    physics = common.add_argument_group("model parameters (frequencies in units of --omega-unit)")
    physics.add_argument("--omega-c", type=float, help="Boson frequency (required)")
    physics.add_argument("--omega-a", type=float, help="Qubit frequency (default: 1)")
    physics.add_argument("--g", type=float, help="Coupling strength (default: 0)")
    physics.add_argument("--hbar", type=float, help="Reduced Planck constant (default: 1)")
    physics.add_argument("--a2-coeff", type=float, help="A^2-term coefficient C (default: 0)")
    physics.add_argument("--omega-unit", type=float, help="Reference frequency (default: 1)")
    physics.add_argument("--model", choices=MODEL_CHOICES, help="Hamiltonian (default: qr)")
    physics.add_argument("--levels", "-k", type=int, help="Number of levels (default: 10)")

    trunc = common.add_argument_group("truncation control")
    trunc.add_argument("--initial-dim", type=int, help="Starting Fock dimension")
    trunc.add_argument("--growth-factor", type=float, help="Fock dimension growth per step")
    trunc.add_argument("--max-dim", type=int, help="Largest Fock dimension to try")
    trunc.add_argument("--level-tol", type=float, help="Convergence tolerance on levels")
    trunc.add_argument("--hermitian-tol", type=float, help="Hermiticity check tolerance")
    trunc.add_argument("--unitary-tol", type=float, help="Unitarity check tolerance")

    run = common.add_argument_group("run control")
    run.add_argument("--config", "-c", help="key=value config file (or set RABI_LAB_CONFIG)")
    run.add_argument("--output-dir", "-o", help="Directory for CSV and manifest files")
    run.add_argument("--run-id", help="Fix the run identifier used in file names")
    run.add_argument("--verbose", "-v", action="count", default=0,
                     help="-v for progress, -vv for debug output")
    return common


def create_parser() -> argparse.ArgumentParser:
    """Create and configure argument parser"""
    parser = argparse.ArgumentParser(
        prog="rabi-lab",
        description="Spectra, tunneling gaps and instanton actions of the quantum Rabi model",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  # Lowest six levels at g = 0 on resonance
  rabi-lab spectrum --model qr --omega-a 1 --omega-c 1 --g 0 --levels 6

  # Pairwise level collapse along the coupling limit
  rabi-lab sweep --mode lmt1 --g-start 0 --g-end 3 --steps 61 --model qr-ren \\
      --omega-a 0.5 --omega-c 1 --levels 10

  # Euclidean action from the tunneling gap
  rabi-lab action --g 1 --omega-a 1 --omega-c 1

  # Resolvent distance to the free boson
  rabi-lab resolvent --g 0 --omega-a 1 --omega-c 1 --z-imag 1

  # Exit status 0 when the N=2 SUSY pattern is present, 4 otherwise
  rabi-lab susy --omega-a 1 --omega-c 1 --g 0

Exit codes: 0 success, 2 usage/config error, 3 convergence failure, 4 no SUSY.
        """
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = _common_parser()
    subparsers = parser.add_subparsers(dest="command", metavar="COMMAND")

    subparsers.add_parser("spectrum", parents=[common],
                          help="Converged lowest levels at one parameter point")

    sweep = subparsers.add_parser("sweep", parents=[common],
                                  help="Spectra and action reports along LMT1 or LMT2")
    sweep.add_argument("--mode", choices=[LMT1, LMT2], help="Sweep mode (default: lmt1)")
    sweep.add_argument("--g-start", type=float, help="LMT1 first coupling (default: 0)")
    sweep.add_argument("--g-end", type=float, help="LMT1 last coupling (default: 3)")
    sweep.add_argument("--steps", type=int, help="Number of schedule points (default: 61)")
    sweep.add_argument("--g-max", type=float, help="LMT2 coupling at r = 1 (default: 3 omega_c)")
    sweep.add_argument("--omega-a0", type=float, help="LMT2 qubit frequency at r = 0")
    sweep.add_argument("--schedule", help="LMT2 schedule CSV with columns r,omega_a,g")
    sweep.add_argument("--jobs", "-j", type=int, help="Worker processes (default: all CPUs)")
    sweep.add_argument("--c-dw", type=float, help="Quartic coefficient for q0")

    action = subparsers.add_parser("action", parents=[common],
                                   help="Tunneling gap, Euclidean action, G(g) and E+/E-")
    action.add_argument("--c-dw", type=float, help="Quartic coefficient for q0")
    action.add_argument("--beta", type=float, help="Initial heat-kernel beta")
    action.add_argument("--beta-growth", type=float, help="Heat-kernel beta growth factor")
    action.add_argument("--hk-rel-tol", type=float, help="Heat-kernel relative tolerance")

    resolvent = subparsers.add_parser("resolvent", parents=[common],
                                      help="Norm distance between H~_ren and H_b resolvents")
    resolvent.add_argument("--z-real", type=float, help="Re z (default: 0)")
    resolvent.add_argument("--z-imag", type=float, help="Im z (default: hbar omega_c)")
    resolvent.add_argument("--sweep", action="store_true",
                           help="Evaluate on the LMT1 grid --g-start..--g-end")
    resolvent.add_argument("--g-start", type=float, help="First coupling with --sweep")
    resolvent.add_argument("--g-end", type=float, help="Last coupling with --sweep")
    resolvent.add_argument("--steps", type=int, help="Number of couplings with --sweep")

    susy = subparsers.add_parser("susy", parents=[common],
                                 help="Detect the N=2 SUSY level pattern")
    susy.add_argument("--susy-tol", type=float, help="Degeneracy/spacing tolerance")

    oracle = subparsers.add_parser("oracle-compare", parents=[common],
                                   help="Position-grid spectrum against the Fock pipeline")
    oracle.add_argument("--grid-half-width", type=float, help="Grid half width L")
    oracle.add_argument("--grid-points", type=int, help="Grid points M")
    oracle.add_argument("--stencil-order", type=int, choices=[2, 4],
                        help="Finite-difference order")

    return parser


def configure_logging(verbosity: int) -> None:
    level = logging.WARNING
    if verbosity == 1:
        level = logging.INFO
    elif verbosity >= 2:
        level = logging.DEBUG
    logging.basicConfig(level=level, format=LOG_FORMAT)


def config_from_args(args: argparse.Namespace) -> LabConfig:
    overrides = {key: value for key, value in vars(args).items() if key not in _NON_SETTINGS}
    return resolve_config(overrides, args.config)


def _model(config: LabConfig) -> Tuple[ModelKind, ModelParams]:
    kind = ModelKind.parse(config.model)
    params = config.model_params()
    if kind.transformed and params.a2_coeff:
        raise ValidationError(f"model {config.model} cannot carry an A^2 term; use qr or qr-ren")
    return kind, params


def _start(command: str, config: LabConfig) -> Tuple[RunManifest, float]:
    run_id = config.run_id or make_run_id(command, config.as_dict())
    manifest = RunManifest(run_id=run_id, command=command, tool_version=__version__,
                           parameters=config.as_dict(), truncation=asdict(config.truncation()),
                           started=datetime.now(timezone.utc).isoformat())
    previous_path = manifest.manifest_path(Path(config.output_dir))
    if previous_path.exists():
        try:
            previous = load_manifest(previous_path)
            logger.warning("Replacing run %s (%s, started %s)", run_id, previous["command"],
                           previous.get("started") or "unknown")
        except ValidationError as e:
            logger.warning("Replacing unreadable manifest %s: %s", previous_path, e)
    return manifest, time.monotonic()


def _finish(manifest: RunManifest, started: float, config: LabConfig) -> Path:
    manifest.duration_s = round(time.monotonic() - started, 6)
    path = write_manifest(manifest, Path(config.output_dir))
    print(f"✓ Manifest: {path}")
    return path


def _convergence_failure(manifest: RunManifest, started: float, config: LabConfig,
                         sweep_param: float, error: ConvergenceError) -> int:
    manifest.add_outcome(0, sweep_param, error.last_dim, str(error))
    _finish(manifest, started, config)
    print(f"✗ Convergence failure: {error}")
    return EXIT_CONVERGENCE


def cmd_spectrum(config: LabConfig, args: argparse.Namespace) -> int:
    kind, params = _model(config)
    manifest, started = _start("spectrum", config)
    try:
        result = converged_spectrum(params, kind, config.levels, config.truncation())
    except ConvergenceError as e:
        return _convergence_failure(manifest, started, config, params.g, e)

    manifest.add_outcome(0, params.g, result.converged_dim)
    path = write_csv(manifest.data_path(Path(config.output_dir), "spectrum"), SPECTRUM_HEADER,
                     spectrum_rows(params.g, result))
    print(f"✓ {len(result.levels)} levels of {kind.value} "
          f"(converged_dim={result.converged_dim}): {path}")
    _finish(manifest, started, config)
    return EXIT_OK


def build_schedule(config: LabConfig, base: ModelParams) -> SweepSchedule:
    if config.mode == LMT1:
        return lmt1_schedule(base, config.scaled(config.g_start), config.scaled(config.g_end),
                             config.steps)
    if config.mode == LMT2:
        if config.schedule:
            return read_schedule(Path(config.schedule), base, config.omega_unit)
        return lmt2_schedule(base, config.steps, g_max=config.scaled(config.g_max),
                             omega_a0=config.scaled(config.omega_a0))
    raise ConfigError(f"unknown sweep mode {config.mode!r}")


def cmd_sweep(config: LabConfig, args: argparse.Namespace) -> int:
    kind, base = _model(config)
    schedule = build_schedule(config, base)
    manifest, started = _start("sweep", config)
    outcomes = run_sweep(schedule, kind, config.levels, config.truncation(),
                         jobs=config.worker_count(), c_dw=config.c_dw)

    spectrum_data: List[List[Any]] = []
    action_data: List[List[Any]] = []
    flags: List[Dict[str, Any]] = []
    for outcome in outcomes:
        point = outcome.point
        if outcome.spectrum is None or outcome.report is None:
            manifest.add_outcome(point.index, point.sweep_param, None, outcome.error)
            continue
        manifest.add_outcome(point.index, point.sweep_param, outcome.spectrum.converged_dim)
        spectrum_data.extend(spectrum_rows(point.sweep_param, outcome.spectrum))
        action_data.append(action_row(point.sweep_param, outcome.report))
        report = outcome.report
        flags.append({"index": point.index, "gap_zero": report.gap_zero,
                      "negative_action": report.negative_action,
                      "g_undefined": report.g_undefined,
                      "g_bound_violated": report.g_bound_violated,
                      "mean_deviation": report.mean_deviation})

    output_dir = Path(config.output_dir)
    write_csv(manifest.data_path(output_dir, "spectrum"), SPECTRUM_HEADER, spectrum_data)
    write_csv(manifest.data_path(output_dir, "action"), ACTION_HEADER, action_data)
    manifest.extra = {"mode": schedule.mode, "model": kind.value, "points": len(outcomes),
                      "action_flags": flags}

    failed = sum(1 for outcome in outcomes if not outcome.ok)
    if failed:
        print(f"✗ {failed} of {len(outcomes)} {schedule.mode} points failed to converge")
    else:
        print(f"✓ {len(outcomes)} {schedule.mode} points of {kind.value} written to {output_dir}")
    _finish(manifest, started, config)
    return EXIT_CONVERGENCE if failed else EXIT_OK


def cmd_action(config: LabConfig, args: argparse.Namespace) -> int:
    params = config.model_params()
    trunc = config.truncation()
    manifest, started = _start("action", config)
    try:
        e0, e1, gap = tunneling_gap(params, trunc)
        report = action_report(params, e0, e1, renormalized=False, c_dw=config.c_dw)
        e_pm: Optional[Tuple[float, float]] = None
        commutators: Optional[Tuple[float, float]] = None
        if not params.a2_coeff:
            e_pm = e_pm_heat_kernel(params, trunc, config.heat_kernel())
            commutators = z2_commutators(params, dimension_heuristic(params))
    except ConvergenceError as e:
        return _convergence_failure(manifest, started, config, params.g, e)

    manifest.add_outcome(0, params.g, None)
    write_csv(manifest.data_path(Path(config.output_dir), "action"), ACTION_HEADER,
              [action_row(params.g, report)])
    manifest.extra = {
        "gap_zero": report.gap_zero,
        "negative_action": report.negative_action,
        "g_undefined": report.g_undefined,
        "g_bound_violated": report.g_bound_violated,
        "mean_deviation": report.mean_deviation,
        "predicted_levels_ren": list(predicted_levels(report.s_euc, params)),
        "e_plus": e_pm[0] if e_pm else None,
        "e_minus": e_pm[1] if e_pm else None,
        "parity_commutator_norm": commutators[0] if commutators else None,
        "sigma_x_commutator_norm": commutators[1] if commutators else None,
    }

    g_text = "undefined" if report.g_undefined else f"{report.g_of_g:.6g}"
    print(f"✓ gap = {report.gap:.6g}, s_euc = {report.s_euc:.6g}, G(g) = {g_text}")
    if e_pm:
        print(f"  E+ = {e_pm[0]:.10g}, E- = {e_pm[1]:.10g}")
    if report.q0 is not None:
        print(f"  q0 = {report.q0:.6g}")
    _finish(manifest, started, config)
    return EXIT_OK


def cmd_resolvent(config: LabConfig, args: argparse.Namespace) -> int:
    params = config.model_params()
    z = config.z()
    if getattr(args, "sweep", False):
        points = lmt1_schedule(params, config.scaled(config.g_start), config.scaled(config.g_end),
                               config.steps).points
    else:
        points = (SweepPoint(0, params.g, params),)

    manifest, started = _start("resolvent", config)
    rows = []
    for point in points:
        try:
            result = resolvent_report(point.params, z, config.truncation())
        except ConvergenceError as e:
            manifest.add_outcome(point.index, point.sweep_param, e.last_dim, str(e))
            continue
        manifest.add_outcome(point.index, point.sweep_param, result.converged_dim)
        rows.append([point.sweep_param, z.real, z.imag, result.distance, result.converged_dim])
        print(f"✓ g = {point.sweep_param:.6g}: distance = {result.distance:.10g}")

    write_csv(manifest.data_path(Path(config.output_dir), "resolvent"), RESOLVENT_HEADER, rows)
    _finish(manifest, started, config)
    return EXIT_CONVERGENCE if manifest.failed else EXIT_OK


def cmd_susy(config: LabConfig, args: argparse.Namespace) -> int:
    kind, params = _model(config)
    manifest, started = _start("susy", config)
    try:
        result = converged_spectrum(params, kind, config.levels, config.truncation())
    except ConvergenceError as e:
        return _convergence_failure(manifest, started, config, params.g, e)

    report = detect_susy(result, config.susy_tol)
    manifest.add_outcome(0, params.g, result.converged_dim)
    write_csv(manifest.data_path(Path(config.output_dir), "spectrum"), SPECTRUM_HEADER,
              spectrum_rows(params.g, result))
    manifest.extra = {"is_susy_n2": report.is_susy_n2, "spacing": report.spacing}
    if kind in (ModelKind.QR, ModelKind.QR_REN):
        _, vectors = eigensolve(build_hamiltonian(kind, params, result.converged_dim), 1)
        manifest.extra["ground_fermion_number"] = fermion_number(vectors[:, 0])
    if report.is_susy_n2:
        print(f"✓ N=2 SUSY pattern detected (spacing {report.spacing:.10g})")
    else:
        print("✗ No N=2 SUSY pattern in the lowest levels")
    _finish(manifest, started, config)
    return EXIT_OK if report.is_susy_n2 else EXIT_NO_SUSY


def cmd_oracle_compare(config: LabConfig, args: argparse.Namespace) -> int:
    params = config.model_params()
    grid = config.grid()
    manifest, started = _start("oracle-compare", config)
    grid_result = oracle_spectrum(params, grid, config.levels)
    try:
        fock = converged_spectrum(params, ModelKind.TRANSFORMED, config.levels,
                                  config.truncation())
    except ConvergenceError as e:
        return _convergence_failure(manifest, started, config, params.g, e)

    rows = []
    for index, (grid_energy, fock_energy) in enumerate(zip(grid_result.levels, fock.levels)):
        rows.append([index, grid_energy, fock_energy, grid_energy - fock_energy,
                     grid_result.parity_sector[index], fock.parity_sector[index]])
    max_deviation = max(abs(row[3]) for row in rows)
    up, down = ground_state_components(params, grid)
    manifest.add_outcome(0, params.g, fock.converged_dim)
    manifest.extra = {
        "grid": asdict(grid),
        "max_deviation": max_deviation,
        "ground_nodeless": bool(up.min() > -NODE_TOL and down.min() > -NODE_TOL),
        "rotation_deviation": fourier_check(fock.converged_dim, params),
    }
    output_dir = Path(config.output_dir)
    write_csv(manifest.data_path(output_dir, "oracle"), ORACLE_HEADER, rows)
    write_csv(manifest.data_path(output_dir, "ground"), GROUND_HEADER,
              ground_rows(grid_positions(grid), up, down))
    print(f"✓ grid vs Fock: max deviation {max_deviation:.3e} over {len(rows)} levels")
    _finish(manifest, started, config)
    return EXIT_OK


COMMANDS: Dict[str, Callable[[LabConfig, argparse.Namespace], int]] = {
    "spectrum": cmd_spectrum,
    "sweep": cmd_sweep,
    "action": cmd_action,
    "resolvent": cmd_resolvent,
    "susy": cmd_susy,
    "oracle-compare": cmd_oracle_compare,
}


def main(argv: Optional[List[str]] = None) -> None:
    """Main entry point for CLI"""
    parser = create_parser()
    args = parser.parse_args(argv)

    if not args.command:
        parser.print_help()
        sys.exit(EXIT_USAGE)

    configure_logging(args.verbose)
    try:
        config = config_from_args(args)
        configure_tolerances(config.hermitian_tol, config.unitary_tol)
        code = COMMANDS[args.command](config, args)
    except ValidationError as e:
        print(f"✗ Error: {e}")
        code = EXIT_USAGE
    except RabiLabError as e:
        print(f"✗ Error: {e}")
        code = 1

    sys.exit(code)


if __name__ == "__main__":
    main()
