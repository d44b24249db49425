"""Line-oriented ``key=value`` experiment configs with ``#`` comments."""
import logging
from typing import Optional

from pydantic import ValidationError

from app.core.exceptions import ConfigError
from app.entities.experiment_config import ExperimentConfig

logger = logging.getLogger(__name__)


def parse_config(text: str, overrides: Optional[dict] = None) -> ExperimentConfig:
    """
    Parses and validates an experiment config, collecting every problem before failing.

    Args:
        text (str): Config text, one ``key=value`` per line.
        overrides (dict): Values that replace config keys (command-line flags).

    Returns:
        ExperimentConfig: The validated config.

    Raises:
        ConfigError: With the full list of unknown, duplicate, malformed and out-of-range keys.
    """
    errors: list[str] = []
    values: dict[str, str] = {}
    seen: dict[str, int] = {}
    known = set(ExperimentConfig.model_fields)
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            errors.append(f"line {number}: expected key=value, got {line!r}")
            continue
        key, value = (part.strip() for part in line.split("=", 1))
        if key in seen:
            errors.append(f"duplicate key {key!r} on lines {seen[key]} and {number}")
            continue
        seen[key] = number
        if key not in known:
            errors.append(f"unknown key {key!r} on line {number}")
            continue
        values[key] = value
    for key, value in (overrides or {}).items():
        if value is not None:
            values[key] = value
    try:
        config = ExperimentConfig.model_validate(values)
    except ValidationError as exc:
        for error in exc.errors():
            key = ".".join(str(part) for part in error["loc"]) or "config"
            line = seen.get(str(error["loc"][0])) if error["loc"] else None
            where = f" (line {line})" if line else ""
            errors.append(f"{key}{where}: {error['msg']}")
        config = None
    if errors:
        raise ConfigError(errors)
    logger.debug(f"Parsed {config.kind.value} config with {len(values)} keys")
    return config
