"""
Application configuration settings.
"""

from pydantic import AliasChoices, Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Application settings, read from SOS_* environment variables and .env."""

    # Application
    app_name: str = "sos-certify"
    app_version: str = "1.0.0"
    environment: str = "development"

    # SDP solver
    feas_tol: float = 1e-9
    solver_tol: float = 1e-7
    eigen_tol: float = 1e-6
    max_iterations: int = 200
    infeasibility_margin: float = 1e-6
    accept_residual: float = 1e-6

    # Rounding
    denominator_bound: int = 2**20
    max_denominator_bound: int = 2**40
    projection_max_shift: float = 1e-3

    # Face handling for singular Gram matrices
    kernel_tol: float = 1e-6
    kernel_gap: float = 1e3
    kernel_denominator: int = 1000
    max_face_rounds: int = 3

    # CLI guards
    dense_limit: int = 200

    # Sampling
    sample_precision_bits: int = 113
    samples: int = 100_000
    seed: int = 42
    shard_size: int = 10_000

    # Logging
    log_level: str = Field(
        "INFO", validation_alias=AliasChoices("log_level", "sos_log_level")
    )

    @field_validator("environment")
    @classmethod
    def validate_environment(cls, v):
        """
        Validate environment.
        """
        allowed_envs = ["development", "staging", "production"]
        if v not in allowed_envs:
            raise ValueError(f"Environment must be one of {allowed_envs}")
        return v

    @field_validator("log_level")
    @classmethod
    def validate_log_level(cls, v):
        """Validate log level name."""
        allowed = ["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"]
        if v.upper() not in allowed:
            raise ValueError(f"Log level must be one of {allowed}")
        return v.upper()

    @field_validator("denominator_bound", "max_denominator_bound")
    @classmethod
    def validate_power_of_two(cls, v):
        """Rounding grids are dyadic."""
        if v < 1 or v & (v - 1):
            raise ValueError("Denominator bounds must be powers of two")
        return v

    @field_validator("sample_precision_bits")
    @classmethod
    def validate_precision(cls, v):
        """Sampling needs at least an 80-bit significand."""
        if v < 80:
            raise ValueError("Sampling precision must be at least 80 bits")
        return v

    @field_validator("feas_tol", "solver_tol", "eigen_tol")
    @classmethod
    def validate_tolerance(cls, v):
        if not 0 < v < 1:
            raise ValueError("Tolerances must lie in (0, 1)")
        return v

    model_config = SettingsConfigDict(
        env_prefix="SOS_",
        env_file=".env",
        case_sensitive=False,
        extra="ignore",
        validate_assignment=True,
    )

    def with_overrides(self, **overrides) -> "Settings":
        """Return validated settings with CLI overrides applied."""
        values = self.model_dump()
        values.update({k: v for k, v in overrides.items() if v is not None})
        return Settings(**values)


# Global settings instance
settings = Settings()
