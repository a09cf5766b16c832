"""Settings loading: flat key-value config file, environment, CLI overrides."""

import os
from pathlib import Path
from typing import Any, Dict, Mapping, Optional

from dotenv import dotenv_values

from .config import ENV_PREFIX
from .errors import ConfigError

# Keys holding comma-separated lists
LIST_KEYS = {"n_tx", "power_dbm"}

# Setting one of these from a later source drops the other
EXCLUSIVE_KEYS = {"snr_db": "power_dbm", "power_dbm": "snr_db"}

# Alternative spellings accepted in files and the environment
KEY_ALIASES = {"tolerance": "tol"}


def normalize_key(key: str) -> str:
    """
    Normalize a setting name to its field form.

    Converts format: N-TX / n_tx / --n-tx -> n_tx
    """
    name = key.strip().lstrip("-").lower().replace("-", "_")
    return KEY_ALIASES.get(name, name)


def _normalize_value(key: str, value: Any) -> Any:
    if key in LIST_KEYS and isinstance(value, str):
        items = [item.strip() for item in value.split(",")]
        return [item for item in items if item]
    return value


def _apply(settings: Dict[str, Any], updates: Mapping[str, Any]):
    normalized = {normalize_key(k): v for k, v in updates.items() if v is not None}
    for name in normalized:
        rival = EXCLUSIVE_KEYS.get(name)
        if rival and rival not in normalized:
            settings.pop(rival, None)
    for name, value in normalized.items():
        settings[name] = _normalize_value(name, value)


def load_settings(
    path: Optional[str] = None,
    environ: Optional[Mapping[str, str]] = None,
) -> Dict[str, Any]:
    """
    Read settings from a config file and the environment.

    The file uses dotenv syntax (one KEY=value per line, # comments).
    Environment variables named CRB_LPM_<KEY> override file values.

    Args:
        path: Optional config file path
        environ: Environment mapping (defaults to os.environ)

    Returns:
        Dict of normalized key -> raw value (lists already split)

    Raises:
        ConfigError: If the config file does not exist
    """
    settings: Dict[str, Any] = {}

    if path:
        if not Path(path).is_file():
            raise ConfigError(f"Config file not found: {path}")
        _apply(settings, dotenv_values(path))

    env = os.environ if environ is None else environ
    _apply(settings, {
        key[len(ENV_PREFIX):]: value
        for key, value in env.items()
        if key.startswith(ENV_PREFIX)
    })
    return settings


def merge_settings(base: Dict[str, Any], overrides: Mapping[str, Any]) -> Dict[str, Any]:
    """Return base updated with every override that is not None."""
    merged = dict(base)
    _apply(merged, overrides)
    return merged
