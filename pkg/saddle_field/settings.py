# saddle_field/settings.py
import os
from dataclasses import dataclass

from dotenv import load_dotenv


def _as_bool(raw: str) -> bool:
    return str(raw).strip().lower() in ("1", "true", "yes", "on")


@dataclass(frozen=True)
class Settings:
    """Runtime settings read from the environment (all optional)"""

    log_dir: str = "logs"
    log_level: str = "WARNING"
    log_to_file: bool = True


def load_settings() -> Settings:
    """Load a .env file if present and build Settings from the environment"""
    load_dotenv()
    return Settings(
        log_dir=os.getenv("SADDLE_FIELD_LOG_DIR", "logs"),
        log_level=os.getenv("SADDLE_FIELD_LOG_LEVEL", "WARNING"),
        log_to_file=_as_bool(os.getenv("SADDLE_FIELD_LOG_TO_FILE", "true")),
    )
