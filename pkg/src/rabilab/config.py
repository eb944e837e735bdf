"""
Configuration for rabi-lab runs

Values come from three layers, highest precedence first: command-line flags,
a key=value config file (``--config`` or the RABI_LAB_CONFIG environment
variable) and the built-in defaults below. All frequencies are expressed in
units of ``omega_unit``.
"""

import logging
import os
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Callable, Dict, Mapping, Optional

from .analysis import HeatKernelSpec
from .constants import (
    CONFIG_ENV_VAR,
    DEFAULT_BETA,
    DEFAULT_BETA_GROWTH,
    DEFAULT_GRID_POINTS,
    DEFAULT_GROWTH_FACTOR,
    DEFAULT_HK_REL_TOL,
    DEFAULT_INITIAL_DIM,
    DEFAULT_LEVEL_TOL,
    DEFAULT_LMT2_STEPS,
    DEFAULT_MAX_DIM,
    DEFAULT_STENCIL_ORDER,
    HERMITIAN_TOL,
    UNITARY_TOL,
)
from .exceptions import ConfigError, ValidationError
from .operators import ModelParams
from .oracle import GridSpec
from .spectra import TruncationSpec

logger = logging.getLogger(__name__)


def _optional(parse: Callable[[str], Any]) -> Callable[[str], Any]:
    def parse_optional(text: str) -> Any:
        return None if text.strip().lower() in ("", "none") else parse(text)

    return parse_optional


def _setting(default: Any, parse: Callable[[str], Any]) -> Any:
    return field(default=default, metadata={"parse": parse})


@dataclass(frozen=True)
class LabConfig:
    """Every tunable of a run after the config layers have been merged"""

    # physics (in units of omega_unit)
    omega_c: Optional[float] = _setting(None, _optional(float))
    omega_a: float = _setting(1.0, float)
    g: float = _setting(0.0, float)
    hbar: float = _setting(1.0, float)
    a2_coeff: float = _setting(0.0, float)
    omega_unit: float = _setting(1.0, float)
    model: str = _setting("qr", str)
    levels: int = _setting(10, int)

    # truncation control
    initial_dim: int = _setting(DEFAULT_INITIAL_DIM, int)
    growth_factor: float = _setting(DEFAULT_GROWTH_FACTOR, float)
    max_dim: int = _setting(DEFAULT_MAX_DIM, int)
    level_tol: float = _setting(DEFAULT_LEVEL_TOL, float)
    hermitian_tol: float = _setting(HERMITIAN_TOL, float)
    unitary_tol: float = _setting(UNITARY_TOL, float)

    # heat kernel
    beta: float = _setting(DEFAULT_BETA, float)
    beta_growth: float = _setting(DEFAULT_BETA_GROWTH, float)
    hk_rel_tol: float = _setting(DEFAULT_HK_REL_TOL, float)

    # sweeps
    mode: str = _setting("lmt1", str)
    g_start: float = _setting(0.0, float)
    g_end: float = _setting(3.0, float)
    steps: int = _setting(DEFAULT_LMT2_STEPS, int)
    g_max: Optional[float] = _setting(None, _optional(float))
    omega_a0: Optional[float] = _setting(None, _optional(float))
    schedule: Optional[str] = _setting(None, _optional(str))
    c_dw: Optional[float] = _setting(None, _optional(float))
    jobs: Optional[int] = _setting(None, _optional(int))

    # resolvent and SUSY
    z_real: float = _setting(0.0, float)
    z_imag: Optional[float] = _setting(None, _optional(float))
    susy_tol: float = _setting(1e-8, float)

    # grid oracle
    grid_half_width: float = _setting(12.0, float)
    grid_points: int = _setting(DEFAULT_GRID_POINTS, int)
    stencil_order: int = _setting(DEFAULT_STENCIL_ORDER, int)

    # output
    output_dir: str = _setting(".", str)
    run_id: Optional[str] = _setting(None, _optional(str))

    def __post_init__(self) -> None:
        if self.omega_c is None:
            raise ConfigError("omega_c is required (pass --omega-c or set omega_c in the "
                              "config file)")
        if not self.omega_unit > 0:
            raise ConfigError(f"omega_unit must be positive, got {self.omega_unit}")
        if self.levels < 1:
            raise ConfigError(f"levels must be at least 1, got {self.levels}")
        if self.jobs is not None and self.jobs < 1:
            raise ConfigError(f"jobs must be at least 1, got {self.jobs}")

    def model_params(self) -> ModelParams:
        unit = self.omega_unit
        assert self.omega_c is not None
        return ModelParams(omega_a=self.omega_a * unit, omega_c=self.omega_c * unit,
                           g=self.g * unit, hbar=self.hbar, a2_coeff=self.a2_coeff)

    def scaled(self, value: Optional[float]) -> Optional[float]:
        """A frequency-valued setting expressed in absolute units"""
        return None if value is None else value * self.omega_unit

    def truncation(self) -> TruncationSpec:
        return TruncationSpec(initial_dim=self.initial_dim, growth_factor=self.growth_factor,
                              max_dim=self.max_dim, level_tol=self.level_tol)

    def heat_kernel(self) -> HeatKernelSpec:
        return HeatKernelSpec(beta=self.beta, beta_growth=self.beta_growth,
                              rel_tol=self.hk_rel_tol)

    def grid(self) -> GridSpec:
        return GridSpec(half_width=self.grid_half_width, points=self.grid_points,
                        stencil_order=self.stencil_order)

    def z(self) -> complex:
        """Resolvent argument; Im z defaults to hbar * omega_c"""
        params = self.model_params()
        imag = params.hbar * params.omega_c if self.z_imag is None else self.scaled(self.z_imag)
        return complex(self.scaled(self.z_real), imag)

    def worker_count(self) -> int:
        return self.jobs if self.jobs is not None else (os.cpu_count() or 1)

    def as_dict(self) -> Dict[str, Any]:
        return asdict(self)


_PARSERS: Dict[str, Callable[[str], Any]] = {
    f.name: f.metadata["parse"] for f in fields(LabConfig)
}


def normalize_key(key: str) -> str:
    return key.strip().lower().replace("-", "_")


def parse_config_text(text: str, source: str = "<config>") -> Dict[str, Any]:
    """Parse key=value lines; '#' starts a comment"""
    values: Dict[str, Any] = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{number}: expected key=value, got {raw.strip()!r}")
        key, value = line.split("=", 1)
        key = normalize_key(key)
        if key not in _PARSERS:
            raise ConfigError(f"{source}:{number}: unknown key {key!r}")
        try:
            values[key] = _PARSERS[key](value.strip())
        except ValueError as e:
            raise ConfigError(f"{source}:{number}: bad value for {key!r}: {e}")
    return values


def load_config_file(path: str) -> Dict[str, Any]:
    config_path = Path(path)
    try:
        text = config_path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"Cannot read config file {config_path}: {e}")
    logger.info("loaded config file %s", config_path)
    return parse_config_text(text, source=str(config_path))


def resolve_config(overrides: Mapping[str, Any], config_path: Optional[str] = None,
                   environ: Optional[Mapping[str, str]] = None) -> LabConfig:
    """Merge defaults, the config file and explicit overrides (None means not given)"""
    environ = os.environ if environ is None else environ
    path = config_path or environ.get(CONFIG_ENV_VAR)

    merged: Dict[str, Any] = {}
    if path:
        merged.update(load_config_file(path))
    for key, value in overrides.items():
        key = normalize_key(key)
        if key not in _PARSERS:
            raise ConfigError(f"unknown setting {key!r}")
        if value is not None:
            merged[key] = value
    try:
        return LabConfig(**merged)
    except ValidationError:
        raise
    except (TypeError, ValueError) as e:
        raise ConfigError(f"invalid configuration: {e}")
