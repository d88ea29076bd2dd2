"""
Validation utilities for ingestion and configuration.

Provides functions to validate CSV headers, raw labels and thresholds.
"""

import re
from collections import Counter
from collections.abc import Sequence
from typing import Any

from pydantic import BaseModel, ValidationError

from app.core.exceptions import (
    BadLabelError,
    ConfigValidationError,
    IngestError,
    MissingColumnError,
)
from app.core.logging import get_logger

logger = get_logger(__name__)

_INTEGER_PATTERN = re.compile(r"^[+-]?\d+(\.0*)?$")


def validate_header(columns: Sequence[str], required: Sequence[str]) -> None:
    """
    Ensure column names are unique and every required column is present.

    Raises:
        IngestError: If a column name repeats
        MissingColumnError: For the first missing column
    """
    repeated = sorted(c for c, n in Counter(columns).items() if n > 1)
    if repeated:
        raise IngestError("Duplicate column names", details={"columns": repeated})
    present = set(columns)
    for column in required:
        if column not in present:
            raise MissingColumnError(column)


def parse_raw_label(value: str, row: int) -> int:
    """
    Parse a raw self-report label.

    Accepts integer text such as ``"4"`` or ``"4.0"`` in 1..5. Values outside
    the scale are rejected rather than clamped.

    Raises:
        BadLabelError: If the cell is not an integer in 1..5
    """
    text = value.strip()
    if not _INTEGER_PATTERN.match(text):
        raise BadLabelError(row, value)
    label = int(float(text))
    if not 1 <= label <= 5:
        raise BadLabelError(row, value)
    return label


def validate_threshold(th: float) -> None:
    """
    Ensure a similarity threshold lies in [0, 1].

    Raises:
        ConfigValidationError: If it does not
    """
    if not 0.0 <= th <= 1.0:
        raise ConfigValidationError(f"Threshold {th} outside [0, 1]", details={"threshold": th})


def validate_model[M: BaseModel](model: type[M], data: dict[str, Any]) -> M:
    """
    Validate a raw mapping into a pydantic model.

    Raises:
        ConfigValidationError: With the pydantic error list as details
    """
    try:
        return model.model_validate(data)
    except ValidationError as e:
        errors = [
            {"loc": ".".join(str(p) for p in err["loc"]), "msg": err["msg"]} for err in e.errors()
        ]
        raise ConfigValidationError(
            f"Invalid {model.__name__}", details={"errors": errors}
        ) from e
