"""Unit tests for settings and run config schemas."""

import pytest
from pydantic import ValidationError

from app.core.config import RunOverrides, Settings
from app.schemas.community import PerUserMaxPolicy, ThresholdGrid
from app.schemas.forest import HyperGrid
from app.schemas.protocol import ProtocolConfig
from app.schemas.run import RunConfig
from app.schemas.sampling import Protocol, SplitSpec


class TestSettings:
    """Tests for Settings."""

    def test_defaults(self, monkeypatch):
        """Test defaults when no environment variables are set."""
        monkeypatch.delenv("MOODCOMM_SEED", raising=False)
        monkeypatch.delenv("MOODCOMM_THREADS", raising=False)
        settings = Settings(_env_file=None)
        assert settings.SEED == 20240601
        assert settings.INCLUDE_TIMESTAMPS is False
        assert settings.n_jobs == -1

    def test_env_prefix(self, monkeypatch):
        """Test MOODCOMM_ variables override defaults."""
        monkeypatch.setenv("MOODCOMM_THREADS", "3")
        monkeypatch.setenv("MOODCOMM_LOG_LEVEL", "debug")
        settings = Settings(_env_file=None)
        assert settings.n_jobs == 3
        assert settings.LOG_LEVEL == "DEBUG"

    def test_bad_log_level(self, monkeypatch):
        """Test an unknown log level is rejected."""
        monkeypatch.setenv("MOODCOMM_LOG_LEVEL", "chatty")
        with pytest.raises(ValidationError):
            Settings(_env_file=None)


class TestRunOverrides:
    """Tests for RunOverrides settings."""

    def test_collects_present_keys(self, monkeypatch):
        """Test only keys with a MOODCOMM_RUN_ variable are reported, typed."""
        monkeypatch.setenv("MOODCOMM_RUN_SEED", "7")
        monkeypatch.delenv("MOODCOMM_RUN_OUT", raising=False)
        monkeypatch.delenv("MOODCOMM_RUN_THREADS", raising=False)
        monkeypatch.delenv("MOODCOMM_RUN_COHORT_PATH", raising=False)
        assert RunOverrides().present() == {"seed": 7}

    def test_string_keys(self, monkeypatch):
        """Test path-like overrides pass through as strings."""
        monkeypatch.setenv("MOODCOMM_RUN_OUT", "results")
        monkeypatch.setenv("MOODCOMM_RUN_COHORT_PATH", "data/cohort.csv")
        overrides = RunOverrides().present()
        assert overrides["out"] == "results"
        assert overrides["cohort_path"] == "data/cohort.csv"

    def test_non_integer_seed(self, monkeypatch):
        """Test a non-integer seed is rejected by validation."""
        monkeypatch.setenv("MOODCOMM_RUN_SEED", "seven")
        with pytest.raises(ValidationError):
            RunOverrides()

    def test_negative_threads(self, monkeypatch):
        """Test a negative worker count is rejected."""
        monkeypatch.setenv("MOODCOMM_RUN_THREADS", "-2")
        with pytest.raises(ValidationError):
            RunOverrides()


class TestThresholdGrid:
    """Tests for ThresholdGrid."""

    def test_parse(self):
        """Test parsing a comma-separated grid."""
        assert ThresholdGrid.parse("0.8, 0.9,0.95").values == [0.8, 0.9, 0.95]

    def test_rejects_unsorted(self):
        """Test a non-increasing grid is rejected."""
        with pytest.raises(ValidationError):
            ThresholdGrid(values=[0.9, 0.8])

    def test_rejects_out_of_range(self):
        """Test thresholds outside [0, 1] are rejected."""
        with pytest.raises(ValidationError):
            ThresholdGrid(values=[0.5, 1.5])


class TestProtocolConfig:
    """Tests for ProtocolConfig validation."""

    def test_cbm_requires_policy(self):
        """Test CBM without a threshold policy is rejected."""
        with pytest.raises(ValidationError):
            ProtocolConfig(protocol=Protocol.CBM)

    def test_plm_forbids_policy(self):
        """Test non-CBM protocols reject a threshold policy."""
        with pytest.raises(ValidationError):
            ProtocolConfig(protocol=Protocol.PLM, threshold_policy=PerUserMaxPolicy())

    def test_seed_propagates_to_split(self):
        """Test the master seed is copied into the split spec."""
        config = ProtocolConfig(protocol=Protocol.HM, split=SplitSpec(seed=1), seed=9)
        assert config.split.seed == 9

    def test_policy_discriminator(self):
        """Test a policy dict is parsed by its kind."""
        config = ProtocolConfig.model_validate(
            {"protocol": "CBM", "threshold_policy": {"kind": "fixed", "threshold": 0.9}}
        )
        assert config.threshold_policy.threshold == 0.9


class TestHyperGrid:
    """Tests for HyperGrid."""

    def test_candidate_order(self):
        """Test candidates enumerate n_trees, then max_depth, then min_samples_split."""
        grid = HyperGrid(n_trees=[1, 2], max_depth=[None], min_samples_split=[2, 3])
        assert grid.candidates() == [
            {"n_trees": 1, "max_depth": None, "min_samples_split": 2},
            {"n_trees": 1, "max_depth": None, "min_samples_split": 3},
            {"n_trees": 2, "max_depth": None, "min_samples_split": 2},
            {"n_trees": 2, "max_depth": None, "min_samples_split": 3},
        ]

    def test_only_accuracy_scoring(self):
        """Test scoring other than accuracy is rejected."""
        with pytest.raises(ValidationError):
            HyperGrid(scoring="f1")


class TestRunConfig:
    """Tests for RunConfig."""

    def test_unknown_keys_rejected(self):
        """Test unknown top-level keys fail validation."""
        with pytest.raises(ValidationError):
            RunConfig.model_validate({"seed": 1, "colour": "blue"})

    def test_nested_unknown_keys_rejected(self):
        """Test unknown keys inside a section fail validation."""
        with pytest.raises(ValidationError):
            RunConfig.model_validate({"generator": {"n_users": 4, "bogus": 1}})
