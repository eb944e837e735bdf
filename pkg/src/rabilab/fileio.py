"""
Result files: atomic writes, fixed-format CSV rows and schedule files
"""

import csv
import fcntl
import io
import math
import os
import tempfile
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Union

from .analysis import ActionReport, SweepSchedule, schedule_from_rows
from .constants import CSV_FLOAT_FORMAT
from .exceptions import OutputError, ScheduleError
from .operators import ModelParams
from .spectra import SpectrumResult

SPECTRUM_HEADER = ("sweep_param", "level_index", "energy", "parity_sector", "converged_dim",
                   "residual")
ACTION_HEADER = ("sweep_param", "e0", "e1", "gap", "s_euc", "g_of_g", "self_energy", "q0")
RESOLVENT_HEADER = ("sweep_param", "z_real", "z_imag", "distance", "converged_dim")
ORACLE_HEADER = ("level_index", "grid_energy", "fock_energy", "deviation", "grid_parity",
                 "fock_parity")
GROUND_HEADER = ("x", "up", "down")
SCHEDULE_COLUMNS = ("r", "omega_a", "g")

Cell = Union[str, int, float, None]


def format_number(value: Optional[float]) -> str:
    """12 significant digits; -0 becomes 0, non-finite values become inf/-inf/nan"""
    if value is None or math.isnan(value):
        return "nan"
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    if value == 0:
        return "0"
    return format(value, CSV_FLOAT_FORMAT)


def _cell(value: Cell) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    return format_number(value)


def render_csv(header: Sequence[str], rows: Iterable[Sequence[Cell]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_cell(value) for value in row])
    return buffer.getvalue()


def atomic_write_text(path: Path, text: str) -> None:
    """Write through a locked temp file in the target directory, then rename into place"""
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        temp_fd, temp_path = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}_",
                                              suffix=".tmp")
        try:
            with os.fdopen(temp_fd, "w", encoding="utf-8", newline="") as f:
                fcntl.flock(f.fileno(), fcntl.LOCK_EX)
                try:
                    f.write(text)
                    f.flush()
                    os.fsync(f.fileno())
                finally:
                    fcntl.flock(f.fileno(), fcntl.LOCK_UN)
            os.chmod(temp_path, 0o644)
            os.replace(temp_path, path)
        except Exception:
            try:
                os.unlink(temp_path)
            except OSError:
                pass
            raise
    except OSError as e:
        if e.errno == 28:  # ENOSPC
            raise OutputError("No space left on device")
        elif e.errno == 13:  # EACCES
            raise OutputError(f"Permission denied writing {path}: {e}")
        else:
            raise OutputError(f"Failed to write {path}: {e}")


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[Cell]]) -> Path:
    atomic_write_text(path, render_csv(header, rows))
    return Path(path)


def spectrum_rows(sweep_param: float, result: SpectrumResult) -> List[List[Cell]]:
    return [[sweep_param, index, energy, sector, result.converged_dim, residual]
            for index, (energy, sector, residual)
            in enumerate(zip(result.levels, result.parity_sector, result.residual))]


def action_row(sweep_param: float, report: ActionReport) -> List[Cell]:
    return [sweep_param, report.e0, report.e1, report.gap, report.s_euc, report.g_of_g,
            report.self_energy, report.q0]


def ground_rows(positions: Sequence[float], up: Sequence[float],
                down: Sequence[float]) -> List[List[Cell]]:
    return [[float(x), float(u), float(d)] for x, u, d in zip(positions, up, down)]


def read_schedule(path: Path, base: ModelParams, omega_unit: float = 1.0) -> SweepSchedule:
    """LMT2 schedule from a CSV with columns r, omega_a, g (frequencies in omega_unit)"""
    try:
        with open(path, newline="", encoding="utf-8") as f:
            records = list(csv.DictReader(f))
            columns = set(records[0]) if records else set()
    except OSError as e:
        raise ScheduleError(f"Cannot read schedule file {path}: {e}")
    missing = [name for name in SCHEDULE_COLUMNS if name not in columns]
    if missing:
        raise ScheduleError(f"schedule file {path} is missing column(s): {', '.join(missing)}")
    rows = []
    for number, record in enumerate(records, start=2):
        try:
            rows.append((float(record["r"]), float(record["omega_a"]) * omega_unit,
                         float(record["g"]) * omega_unit))
        except (TypeError, ValueError) as e:
            raise ScheduleError(f"{path}:{number}: unparsable schedule row: {e}")
    return schedule_from_rows(base, rows)
