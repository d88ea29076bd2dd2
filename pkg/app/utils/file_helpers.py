"""
File processing utilities.

Deterministic JSON/CSV writers, config file parsing and the config hash
embedded in every output for reproducibility.
"""

import hashlib
import json
from pathlib import Path
from typing import Any

import pandas as pd
import yaml
from pydantic import BaseModel

from app.core.exceptions import ConfigValidationError, IoError
from app.core.logging import get_logger

logger = get_logger(__name__)


def canonical_json(payload: Any) -> str:
    """
    Serialise to JSON with sorted keys and a trailing newline.

    Identical payloads always produce identical bytes.
    """
    if isinstance(payload, BaseModel):
        payload = payload.model_dump(mode="json")
    return json.dumps(payload, sort_keys=True, indent=2, allow_nan=False) + "\n"


def config_hash(payload: Any) -> str:
    """SHA-256 hex digest of the canonical JSON form of a config echo."""
    return hashlib.sha256(canonical_json(payload).encode("utf-8")).hexdigest()


def write_json(path: str | Path, payload: Any) -> Path:
    """
    Write a payload as canonical JSON, creating parent directories.

    Raises:
        IoError: If the file cannot be written
    """
    target = Path(path)
    try:
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(canonical_json(payload), encoding="utf-8")
    except OSError as e:
        raise IoError(str(target), str(e)) from e
    logger.info(f"Wrote {target}")
    return target


def sidecar_path(path: str | Path) -> Path:
    """Provenance sidecar of a table: ``name.csv`` -> ``name.meta.json``."""
    return Path(path).with_suffix(".meta.json")


def write_table(
    path: str | Path, frame: pd.DataFrame, index: bool = False, meta: Any | None = None
) -> Path:
    """
    Write a DataFrame as CSV with a fixed float format.

    When ``meta`` is given (normally a provenance block) it is written as
    the table's ``.meta.json`` sidecar.

    Raises:
        IoError: If the file cannot be written
    """
    target = Path(path)
    try:
        target.parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(target, index=index, lineterminator="\n", float_format="%.10g")
    except OSError as e:
        raise IoError(str(target), str(e)) from e
    logger.info(f"Wrote {target}")
    if meta is not None:
        write_json(sidecar_path(target), meta)
    return target


def read_config_file(path: str | Path) -> dict[str, Any]:
    """
    Parse a JSON or YAML config file into a dictionary.

    Raises:
        IoError: If the file is missing or unreadable
        ConfigValidationError: If the content is not a mapping
    """
    source = Path(path)
    try:
        text = source.read_text(encoding="utf-8")
    except OSError as e:
        raise IoError(str(source), str(e)) from e

    try:
        if source.suffix.lower() in {".yaml", ".yml"}:
            data = yaml.safe_load(text)
        else:
            data = json.loads(text)
    except (json.JSONDecodeError, yaml.YAMLError) as e:
        raise ConfigValidationError(f"Cannot parse {source}", details={"error": str(e)}) from e

    if not isinstance(data, dict):
        raise ConfigValidationError(f"{source} must contain a mapping at the top level")
    return data
