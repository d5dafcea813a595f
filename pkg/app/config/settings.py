"""
This module handles runtime settings for the application.

Settings are read from the process environment after loading an optional
`.env` file from the working directory. They only affect how the program runs
(logging, worker count), never what it computes.
"""

import os
from dataclasses import dataclass
from typing import Optional

from dotenv import load_dotenv

# Values already present in the environment win over the .env file.
load_dotenv(override=False)


@dataclass(frozen=True)
class Settings:
    """Runtime settings.

    Attributes:
        env (str): Deployment environment name ("dev", "test", ...).
        log_level (str): Root level for application loggers.
        log_file (Optional[str]): Path of the buffered JSON log sink, if any.
        workers (int): Default number of worker processes for experiments.
    """

    env: str
    log_level: str
    log_file: Optional[str]
    workers: int

    @property
    def is_test(self) -> bool:
        """Return True when running under the test suite."""
        return self.env == "test"


def get_settings() -> Settings:
    """
    Build the settings from the current environment.

    Read on every call so tests can patch `os.environ`.
    """
    workers = os.environ.get("APP_WORKERS", "1")
    return Settings(
        env=os.environ.get("APP_ENV", "dev").lower(),
        log_level=os.environ.get("APP_LOG_LEVEL", "INFO").upper(),
        log_file=os.environ.get("APP_LOG_FILE") or None,
        workers=int(workers) if workers.isdigit() and int(workers) > 0 else 1,
    )
