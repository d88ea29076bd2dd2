"""Unit tests for validation utilities."""

import pytest

from app.core.exceptions import (
    BadLabelError,
    ConfigValidationError,
    IngestError,
    MissingColumnError,
)
from app.schemas.sampling import SmoteConfig
from app.utils.validators import (
    parse_raw_label,
    validate_header,
    validate_model,
    validate_threshold,
)


class TestValidateHeader:
    """Tests for validate_header function."""

    def test_all_present(self):
        """Test a header with every required column passes."""
        validate_header(["user_id", "label", "f0"], ["user_id", "label"])  # Should not raise

    def test_missing_column(self):
        """Test a missing column raises MissingColumnError naming it."""
        with pytest.raises(MissingColumnError) as exc:
            validate_header(["user_id", "f0"], ["user_id", "label"])
        assert exc.value.details == {"column": "label"}

    def test_duplicate_column(self):
        """Test a repeated column name raises IngestError naming it."""
        with pytest.raises(IngestError) as exc:
            validate_header(["user_id", "label", "f0", "f0"], ["user_id", "label"])
        assert exc.value.details == {"columns": ["f0"]}


class TestParseRawLabel:
    """Tests for parse_raw_label function."""

    @pytest.mark.parametrize("text,expected", [("1", 1), ("5", 5), (" 3 ", 3), ("4.0", 4)])
    def test_valid_labels(self, text, expected):
        """Test integer text in 1..5 is accepted."""
        assert parse_raw_label(text, 1) == expected

    @pytest.mark.parametrize("text", ["0", "6", "2.5", "", "five", "-1"])
    def test_invalid_labels(self, text):
        """Test anything else raises BadLabelError."""
        with pytest.raises(BadLabelError):
            parse_raw_label(text, 7)


class TestValidateThreshold:
    """Tests for validate_threshold function."""

    @pytest.mark.parametrize("th", [0.0, 0.5, 1.0])
    def test_in_range(self, th):
        """Test thresholds in [0, 1] pass."""
        validate_threshold(th)

    @pytest.mark.parametrize("th", [-0.01, 1.01])
    def test_out_of_range(self, th):
        """Test thresholds outside [0, 1] raise ConfigValidationError."""
        with pytest.raises(ConfigValidationError):
            validate_threshold(th)


class TestValidateModel:
    """Tests for validate_model function."""

    def test_valid(self):
        """Test a valid mapping returns the model."""
        assert validate_model(SmoteConfig, {"k_neighbors": 3}).k_neighbors == 3

    def test_errors_in_details(self):
        """Test pydantic errors are listed in the exception details."""
        with pytest.raises(ConfigValidationError) as exc:
            validate_model(SmoteConfig, {"k_neighbors": 0})
        assert exc.value.code == "CONFIG_INVALID"
        assert exc.value.details["errors"][0]["loc"] == "k_neighbors"
