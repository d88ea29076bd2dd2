"""
Custom exception classes for the engine.

Defines domain-specific exceptions with stable error codes and process
exit codes for consistent error handling across the library and CLI.
"""

from typing import Any


class BaseEngineError(Exception):
    """Base exception class for all engine exceptions."""

    code: str = "ENGINE_ERROR"
    exit_code: int = 1

    def __init__(
        self,
        message: str,
        details: dict[str, Any] | None = None,
    ) -> None:
        """
        Initialize engine exception.

        Args:
            message: Human-readable error message
            details: Additional error details
        """
        self.message = message
        self.details = details or {}
        super().__init__(self.message)

    def to_dict(self) -> dict[str, Any]:
        """Machine-readable form used by the CLI error handler."""
        return {"error": self.message, "code": self.code, "details": self.details}


# Ingestion errors


class IngestError(BaseEngineError):
    """Base class for cohort ingestion failures."""

    code = "INGEST_ERROR"
    exit_code = 65


class MissingColumnError(IngestError):
    """Raised when a required CSV column is absent."""

    code = "MISSING_COLUMN"

    def __init__(self, column: str) -> None:
        super().__init__(message=f"Missing required column: {column}", details={"column": column})


class BadLabelError(IngestError):
    """Raised when a label cell is not an integer in 1..5."""

    code = "BAD_LABEL"

    def __init__(self, row: int, value: Any) -> None:
        super().__init__(
            message=f"Bad label at row {row}: {value!r}",
            details={"row": row, "value": str(value)},
        )


class BadFeatureValueError(IngestError):
    """Raised when a feature cell is neither numeric nor empty."""

    code = "BAD_FEATURE_VALUE"

    def __init__(self, row: int, column: str, value: Any) -> None:
        super().__init__(
            message=f"Non-numeric value at row {row}, column {column}: {value!r}",
            details={"row": row, "column": column, "value": str(value)},
        )


class DuplicateReportIdError(IngestError):
    """Raised when two reports share an identifier."""

    code = "DUPLICATE_REPORT_ID"

    def __init__(self, report_id: str) -> None:
        super().__init__(
            message=f"Duplicate report_id: {report_id}", details={"report_id": report_id}
        )


class EmptyCohortError(BaseEngineError):
    """Raised when an operation needs at least one report."""

    code = "EMPTY_COHORT"
    exit_code = 65

    def __init__(self, message: str = "Cohort has no reports") -> None:
        super().__init__(message=message)


class MissingContextColumnError(BaseEngineError):
    """Raised when a context analysis runs on a cohort without context tags."""

    code = "MISSING_CONTEXT_COLUMN"
    exit_code = 65

    def __init__(self) -> None:
        super().__init__(message="Cohort has no context tags")


# Lookup / input errors


class UnknownUserError(BaseEngineError):
    """Raised when a user id is not part of a matrix or cohort."""

    code = "UNKNOWN_USER"

    def __init__(self, user_id: str) -> None:
        super().__init__(message=f"Unknown user: {user_id}", details={"user_id": user_id})


class EmptyInputError(BaseEngineError):
    """Raised when an aggregate is requested over nothing."""

    code = "EMPTY_INPUT"

    def __init__(self, message: str = "Input is empty") -> None:
        super().__init__(message=message)


class LengthMismatchError(BaseEngineError):
    """Raised when paired sequences differ in length."""

    code = "LENGTH_MISMATCH"

    def __init__(self, left: int, right: int) -> None:
        super().__init__(
            message=f"Length mismatch: {left} != {right}", details={"left": left, "right": right}
        )


class NoEligibleClassError(BaseEngineError):
    """Raised when no class has both positives and negatives for AUC."""

    code = "NO_ELIGIBLE_CLASS"

    def __init__(self) -> None:
        super().__init__(message="No class has both positive and negative test rows")


# Protocol / modelling errors


class InsufficientDataError(BaseEngineError):
    """Raised when a target user cannot be split for a protocol."""

    code = "INSUFFICIENT_DATA"

    def __init__(self, message: str, details: dict[str, Any] | None = None) -> None:
        super().__init__(message=message, details=details)


class EmptyCommunityError(BaseEngineError):
    """Raised when a CBM split is requested with no community members."""

    code = "EMPTY_COMMUNITY"

    def __init__(self, user_id: str, threshold: float) -> None:
        super().__init__(
            message=f"Empty community for {user_id} at threshold {threshold}",
            details={"user_id": user_id, "threshold": threshold},
        )


class EmptyTrainingSetError(BaseEngineError):
    """Raised when a classifier is fit on zero rows."""

    code = "EMPTY_TRAINING_SET"

    def __init__(self) -> None:
        super().__init__(message="Training set is empty")


class WidthMismatchError(BaseEngineError):
    """Raised when prediction rows do not match the fitted feature count."""

    code = "WIDTH_MISMATCH"

    def __init__(self, expected: int, got: int) -> None:
        super().__init__(
            message=f"Expected {expected} features, got {got}",
            details={"expected": expected, "got": got},
        )


class InsufficientRowsError(BaseEngineError):
    """Raised when grid search cannot build the requested folds."""

    code = "INSUFFICIENT_ROWS"

    def __init__(self, message: str, details: dict[str, Any] | None = None) -> None:
        super().__init__(message=message, details=details)


class InsufficientContextReportsError(BaseEngineError):
    """Raised when an injection sweep asks for more reports than exist."""

    code = "INSUFFICIENT_CONTEXT_REPORTS"

    def __init__(self, context: str, needed: int, available: int) -> None:
        super().__init__(
            message=f"Context {context!r} has {available} training reports, {needed} needed",
            details={"context": context, "needed": needed, "available": available},
        )


class LeakageError(BaseEngineError):
    """Raised when a split puts the same report in train and test."""

    code = "LEAKAGE"
    exit_code = 70

    def __init__(self, overlap: list[str]) -> None:
        super().__init__(
            message=f"{len(overlap)} reports appear in both train and test",
            details={"overlap": overlap[:20]},
        )


# Surface errors


class ConfigValidationError(BaseEngineError):
    """Raised when a run config fails validation."""

    code = "CONFIG_INVALID"
    exit_code = 64

    def __init__(self, message: str, details: dict[str, Any] | None = None) -> None:
        super().__init__(message=message, details=details)


class IoError(BaseEngineError):
    """Raised when reading or writing a file fails."""

    code = "IO_ERROR"
    exit_code = 74

    def __init__(self, path: str, reason: str) -> None:
        super().__init__(message=f"I/O error on {path}: {reason}", details={"path": path})
