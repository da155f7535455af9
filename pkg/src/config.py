from pathlib import Path
from typing import Literal
from pydantic_settings import BaseSettings, SettingsConfigDict

BASE_DIR = Path(__file__).resolve().parent.parent

class Settings(BaseSettings):
    # App Settings
    APP_NAME: str = "trajkit"
    APP_DESCRIPTION: str = "Uncertainty-aware vehicle motion prediction on a from-scratch autodiff engine."
    APP_VERSION: str = "1.0.0"
    DEBUG: bool = False

    # Parallelism cap for scene generation, RIP scoring and per-scene prediction
    TRAJKIT_THREADS: int = 4

    # Logging
    # Empty string disables the rotating file handler (used by the test suite)
    TRAJKIT_LOG_FILE: str = "trajkit.log"
    TRAJKIT_LOG_LEVEL: str = "INFO"

    # Default dtype for tensors created at inference time.
    # Gradient checks always run in double precision regardless of this value.
    TRAJKIT_PRECISION: Literal["double", "single"] = "double"

    # Sentry
    SENTRY_DSN: str = ""

    # This config tells Pydantic to look for a .env file
    model_config = SettingsConfigDict(
        env_file=BASE_DIR / ".env",
        env_file_encoding='utf-8',
        extra='ignore' # Ignores extra variables in .env
    )

# Create a singleton instance to be used across the app
settings = Settings()
