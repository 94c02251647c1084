"""Test configuration module.

This module tests the process-level Settings class.
"""

from pathlib import Path

import pytest
from pydantic import ValidationError

from dgsem_amr.config import Settings, get_settings


class TestSettingsDefaults:
    """Test default configuration values."""

    def test_app_name_default(self):
        """Test default app name."""
        settings = Settings()
        assert settings.app_name == "DGSEM-AMR Euler Solver"

    def test_debug_default(self):
        """Test debug assertions are disabled by default."""
        settings = Settings()
        assert settings.debug is False

    def test_log_level_default(self):
        """Test default log level is INFO."""
        settings = Settings()
        assert settings.log_level == "INFO"

    def test_output_dir_default(self):
        """Test default output directory."""
        settings = Settings()
        assert settings.output_dir == "./output"

    def test_diagnostics_filename_default(self):
        settings = Settings()
        assert settings.diagnostics_filename == "diagnostics.csv"

    def test_positivity_eps_default(self):
        """Test default positivity floor."""
        settings = Settings()
        assert settings.positivity_eps == 1e-13


class TestSettingsFromEnvironment:
    """Test loading settings from prefixed environment variables."""

    def test_debug_from_env(self, monkeypatch):
        """Test debug mode from environment."""
        monkeypatch.setenv("DGSEM_DEBUG", "true")
        settings = Settings()
        assert settings.debug is True

    def test_log_level_from_env(self, monkeypatch):
        """Test log level from environment."""
        monkeypatch.setenv("DGSEM_LOG_LEVEL", "DEBUG")
        settings = Settings()
        assert settings.log_level == "DEBUG"

    def test_log_level_case_insensitive(self, monkeypatch):
        """Test log level is normalized to upper case."""
        monkeypatch.setenv("DGSEM_LOG_LEVEL", "warning")
        settings = Settings()
        assert settings.log_level == "WARNING"

    def test_output_dir_from_env(self, monkeypatch, tmp_path):
        monkeypatch.setenv("DGSEM_OUTPUT_DIR", str(tmp_path))
        settings = Settings()
        assert settings.output_path == tmp_path

    def test_positivity_eps_from_env(self, monkeypatch):
        monkeypatch.setenv("DGSEM_POSITIVITY_EPS", "1e-10")
        settings = Settings()
        assert settings.positivity_eps == 1e-10

    def test_unprefixed_variables_ignored(self, monkeypatch):
        """Variables without the prefix do not leak into settings."""
        monkeypatch.setenv("DEBUG", "true")
        settings = Settings()
        assert settings.debug is False


class TestSettingsValidation:
    """Test settings validation."""

    def test_invalid_log_level_raises_error(self):
        """Test invalid log level raises validation error."""
        with pytest.raises(ValidationError) as exc_info:
            Settings(log_level="INVALID")
        assert "Log level must be one of" in str(exc_info.value)

    def test_all_valid_log_levels(self):
        """Test all valid log levels are accepted."""
        for level in ["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"]:
            settings = Settings(log_level=level)
            assert settings.log_level == level

    @pytest.mark.parametrize("eps", [0.0, -1e-13, 1e-2])
    def test_positivity_eps_out_of_range(self, eps):
        """Test the positivity floor must be a small positive number."""
        with pytest.raises(ValidationError) as exc_info:
            Settings(positivity_eps=eps)
        assert "Positivity eps" in str(exc_info.value)


class TestSettingsProperties:
    """Test settings computed properties."""

    def test_output_path(self):
        settings = Settings(output_dir="/tmp/dgsem-run")
        assert settings.output_path == Path("/tmp/dgsem-run")

    def test_declared_fields(self):
        """Every setting is read by the solver; the degree range lives in RunConfig."""
        assert set(Settings.model_fields) == {
            "app_name",
            "debug",
            "log_level",
            "output_dir",
            "diagnostics_filename",
            "positivity_eps",
        }


class TestGetSettings:
    """Test get_settings function."""

    def test_returns_fresh_instance(self):
        """Test a new instance is created on every call."""
        assert get_settings() is not get_settings()

    def test_reflects_environment(self, monkeypatch):
        monkeypatch.setenv("DGSEM_LOG_LEVEL", "ERROR")
        assert get_settings().log_level == "ERROR"
