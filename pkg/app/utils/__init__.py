"""Utilities package."""

from app.utils.file_helpers import canonical_json, config_hash, read_config_file, write_json
from app.utils.metrics import accuracy, auc_ovr_macro, confusion_counts, evaluate, macro_f1
from app.utils.validators import validate_model, validate_threshold

__all__ = [
    "canonical_json",
    "config_hash",
    "read_config_file",
    "write_json",
    "accuracy",
    "auc_ovr_macro",
    "confusion_counts",
    "evaluate",
    "macro_f1",
    "validate_model",
    "validate_threshold",
]
