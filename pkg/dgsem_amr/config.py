"""Application configuration."""

from pathlib import Path

from pydantic import field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Process-level settings loaded from environment variables or .env file."""

    # Application Settings
    app_name: str = "DGSEM-AMR Euler Solver"
    debug: bool = False  # Hard nodal admissibility assertions after every stage
    log_level: str = "INFO"

    # Output Settings
    output_dir: str = "./output"
    diagnostics_filename: str = "diagnostics.csv"

    # Numerics Settings
    positivity_eps: float = 1e-13  # Absolute floor of the positivity limiter

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        env_prefix="DGSEM_",
        case_sensitive=False,
        extra="ignore",  # Ignore extra environment variables
    )

    @field_validator("log_level")
    @classmethod
    def validate_log_level(cls, v: str) -> str:
        """Validate log level."""
        valid_levels = ["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"]
        v = v.upper()
        if v not in valid_levels:
            raise ValueError(f"Log level must be one of: {', '.join(valid_levels)}")
        return v

    @field_validator("positivity_eps")
    @classmethod
    def validate_positivity_eps(cls, v: float) -> float:
        """Validate the positivity floor is a small positive number."""
        if not 0 < v < 1e-3:
            raise ValueError("Positivity eps must be in (0, 1e-3)")
        return v

    @property
    def output_path(self) -> Path:
        """Get output directory path."""
        return Path(self.output_dir)


def get_settings() -> Settings:
    """Get application settings instance.

    This function creates a new Settings instance each time it's called,
    which allows for proper testing with different configurations.
    """
    return Settings()


# Global settings instance for convenience
# Note: For testing, use get_settings() or create Settings directly
settings = Settings()
