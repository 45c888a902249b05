"""
Experiment configuration: schema validation, overrides and hashing.
"""

import csv
import hashlib
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Mapping, Optional

from jsonschema import Draft7Validator

from .errors import ConfigError

logger = logging.getLogger(__name__)

SCHEMA_PATH = Path(__file__).resolve().parent.parent / "schema.json"
DEFAULT_OUTPUT_DIR = "wavepax-out"


@dataclass(frozen=True)
class ExperimentConfig:
    """
    Validated experiment document.

    Attributes:
        data: The document after overrides, with a loaded oscillator table inlined
        source: Path of the config file, if any
        config_hash: SHA-256 of the canonical JSON of data
    """

    data: Dict[str, Any]
    source: Optional[Path]
    config_hash: str

    def section(self, name: str) -> Dict[str, Any]:
        return dict(self.data.get(name) or {})

    @property
    def T(self) -> float:
        return float(self.data["T"])

    @property
    def dim(self) -> int:
        return int(self.data.get("dim", 1))

    @property
    def seed(self) -> Optional[int]:
        return self.data.get("seed")

    @property
    def out_dir(self) -> str:
        return self.section("outputs").get("dir", DEFAULT_OUTPUT_DIR)


def _pointer(path) -> str:
    return "".join(f"/{part}" for part in path)


def load_schema() -> Dict[str, Any]:
    with open(SCHEMA_PATH, "r", encoding="utf-8") as f:
        return json.load(f)


def config_hash(data: Mapping[str, Any]) -> str:
    canonical = json.dumps(data, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def validate_document(data: Any) -> None:
    """
    Validate a document against the experiment schema.

    Raises:
        ConfigError: For the first violation, ordered by location
    """
    validator = Draft7Validator(load_schema())
    errors = sorted(validator.iter_errors(data), key=lambda e: [str(part) for part in e.absolute_path])
    for error in errors:
        logger.debug(f"Schema violation at {_pointer(error.absolute_path) or '/'}: {error.message}")
    if errors:
        first = errors[0]
        raise ConfigError(first.message, pointer=_pointer(first.absolute_path))
    if data["oscillator"]["preset"] == "tabulated" and not (
        "table" in data["oscillator"] or "table_path" in data["oscillator"]
    ):
        raise ConfigError("tabulated preset requires 'table' or 'table_path'", pointer="/oscillator")


def read_table(path: Path) -> Dict[str, list]:
    """
    Read a coefficient table with columns t,kappa1,kappa2.

    Raises:
        ConfigError: If the file is missing or malformed
    """
    if not path.exists():
        raise ConfigError(f"table file {path} does not exist", pointer="/oscillator/table_path")
    columns: Dict[str, list] = {"t": [], "kappa1": [], "kappa2": []}
    try:
        with open(path, "r", encoding="utf-8", newline="") as f:
            for row in csv.DictReader(f):
                for name in columns:
                    columns[name].append(float(row[name]))
    except (KeyError, ValueError) as e:
        raise ConfigError(f"malformed table {path}: {e}", pointer="/oscillator/table_path") from None
    return columns


def load_config(path: Optional[str] = None, overrides: Optional[Mapping[str, Any]] = None) -> ExperimentConfig:
    """
    Load and validate an experiment file.

    Args:
        path: JSON config file
        overrides: Dotted keys (e.g. ``outputs.dir``) taking precedence over the file

    Returns:
        ExperimentConfig

    Raises:
        ConfigError: Unreadable file, invalid JSON, schema violation or missing table
    """
    source = Path(path) if path is not None else None
    if source is None:
        raise ConfigError("no configuration file given")
    try:
        with open(source, "r", encoding="utf-8") as f:
            data = json.load(f)
    except FileNotFoundError:
        raise ConfigError(f"config file {source} does not exist") from None
    except json.JSONDecodeError as e:
        raise ConfigError(f"invalid JSON in {source}: {e}") from None

    for key, value in (overrides or {}).items():
        if value is None:
            continue
        target = data
        *parents, leaf = key.split(".")
        for part in parents:
            target = target.setdefault(part, {})
        target[leaf] = value

    validate_document(data)
    oscillator = data["oscillator"]
    if "table_path" in oscillator and "table" not in oscillator:
        oscillator["table"] = read_table(source.parent / oscillator["table_path"])

    digest = config_hash(data)
    logger.info(f"Loaded config {source} (hash {digest[:12]})")
    return ExperimentConfig(data=data, source=source, config_hash=digest)
