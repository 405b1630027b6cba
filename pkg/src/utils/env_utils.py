"""
Environment variable utilities.
"""
import logging
import os
from typing import Optional

logger = logging.getLogger(__name__)

THREADS_ENV = "VERIDICT_THREADS"
LOG_LEVEL_ENV = "VERIDICT_LOG_LEVEL"
SEED_ENV = "VERIDICT_SEED"


def read_env_int(name: str, default: Optional[int] = None, minimum: Optional[int] = None) -> Optional[int]:
    """Read an integer environment variable, falling back on bad values."""
    raw = os.getenv(name)
    if raw is None or raw.strip() == "":
        return default
    try:
        value = int(raw)
    except ValueError:
        logger.warning(f"Ignoring non-integer {name}={raw!r}")
        return default
    if minimum is not None and value < minimum:
        logger.warning(f"Ignoring {name}={value} below minimum {minimum}")
        return default
    return value


def resolve_threads(cli_value: Optional[int] = None, config_value: Optional[int] = None) -> int:
    """
    Resolve the worker count.

    Args:
        cli_value: Value of --threads, if given
        config_value: Value from the pipeline config, if given

    Returns:
        Thread count, defaulting to 1 for exact reproducibility
    """
    if cli_value is not None:
        return max(1, int(cli_value))
    if config_value is not None:
        return max(1, int(config_value))
    env_value = read_env_int(THREADS_ENV, minimum=1)
    if env_value is not None:
        return env_value
    return 1


def resolve_log_level(cli_value: Optional[str] = None) -> str:
    """Log level from the CLI, then the environment, then INFO."""
    level = cli_value or os.getenv(LOG_LEVEL_ENV) or "INFO"
    return level.upper()
