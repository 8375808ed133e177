"""
Configuration settings for the gradsense toolkit
"""
from functools import lru_cache
from typing import Optional

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Process-level settings (environment variables prefixed GRADSENSE_)"""

    # Application
    app_name: str = "gradsense - regional boundary gradient sensor analysis"
    version: str = "1.0.0"

    # Parallelism for location scans (GRADSENSE_THREADS)
    threads: int = Field(default=1, ge=1)

    # Numerical defaults
    singular_rcond: float = Field(default=1e-12, gt=0.0)
    trace_samples: int = Field(default=101, ge=2)

    # HTTP surface
    api_host: str = "127.0.0.1"
    api_port: int = 8000

    # Logging
    log_level: str = "INFO"
    log_file: Optional[str] = None

    model_config = SettingsConfigDict(
        env_prefix="GRADSENSE_",
        env_file=".env",
        case_sensitive=False,
        extra="ignore",
    )


def load_settings() -> Settings:
    """Re-read the environment (the CLI calls this per run so GRADSENSE_* changes apply)"""
    return Settings()


@lru_cache()
def get_settings() -> Settings:
    """Cached settings instance shared by the HTTP app"""
    return Settings()
