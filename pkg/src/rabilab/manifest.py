"""
Run manifests tying every emitted data file to one run identifier
"""

import hashlib
import json
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional

from .constants import MANIFEST_SUFFIX
from .exceptions import ValidationError
from .fileio import atomic_write_text

REQUIRED_KEYS = ("run_id", "command", "tool_version", "parameters", "data_files")


@dataclass
class RunManifest:
    """Provenance record of one command invocation"""

    run_id: str
    command: str
    tool_version: str
    parameters: Dict[str, Any]
    truncation: Dict[str, Any] = field(default_factory=dict)
    started: str = ""
    duration_s: float = 0.0
    outcomes: List[Dict[str, Any]] = field(default_factory=list)
    data_files: List[str] = field(default_factory=list)
    extra: Dict[str, Any] = field(default_factory=dict)

    def data_path(self, output_dir: Path, kind: str) -> Path:
        """Register and return ``<run_id>-<kind>.csv`` under output_dir"""
        name = f"{self.run_id}-{kind}.csv"
        if name not in self.data_files:
            self.data_files.append(name)
        return Path(output_dir) / name

    def manifest_path(self, output_dir: Path) -> Path:
        return Path(output_dir) / f"{self.run_id}-{MANIFEST_SUFFIX}"

    def add_outcome(self, index: int, sweep_param: float, converged_dim: Optional[int],
                    error: Optional[str] = None) -> None:
        self.outcomes.append({
            "index": index,
            "sweep_param": sweep_param,
            "status": "failed" if error else "converged",
            "converged_dim": converged_dim,
            "error": error,
        })

    @property
    def failed(self) -> bool:
        return any(outcome["status"] == "failed" for outcome in self.outcomes)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def make_run_id(command: str, parameters: Mapping[str, Any],
                now: Optional[datetime] = None) -> str:
    """<command>-<UTC timestamp>-<parameter hash>"""
    now = now or datetime.now(timezone.utc)
    digest = hashlib.sha1(json.dumps(parameters, sort_keys=True, default=str).encode("utf-8"))
    return f"{command}-{now.strftime('%Y%m%dT%H%M%S')}-{digest.hexdigest()[:8]}"


def _json_safe(value: Any) -> Any:
    """Replace non-finite floats, which JSON cannot carry, with their string tokens"""
    if isinstance(value, float):
        if value != value:
            return "nan"
        if value in (float("inf"), float("-inf")):
            return "inf" if value > 0 else "-inf"
        return value
    if isinstance(value, dict):
        return {key: _json_safe(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(item) for item in value]
    return value


def write_manifest(manifest: RunManifest, output_dir: Path) -> Path:
    path = manifest.manifest_path(output_dir)
    text = json.dumps(_json_safe(manifest.to_dict()), indent=2, sort_keys=True, default=str)
    atomic_write_text(path, text + "\n")
    return path


def load_manifest(path: Path) -> Dict[str, Any]:
    """Read a manifest back, checking the keys every manifest carries"""
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise ValidationError(f"Invalid JSON in manifest: {e}")
    except OSError as e:
        raise ValidationError(f"Cannot read manifest: {e}")
    if not isinstance(data, dict):
        raise ValidationError("Manifest must contain a JSON object")
    missing = [key for key in REQUIRED_KEYS if key not in data]
    if missing:
        raise ValidationError(f"Manifest missing required keys: {', '.join(missing)}")
    return data
