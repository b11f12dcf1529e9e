"""Configuration helpers: load, save and validate/apply run settings.

These helpers operate on a `configparser.ConfigParser` whose `[run]`
section holds the same settings as the command-line flags, and on a
`RunConfig` instance the CLI dispatches from.
"""

import os
import logging
from dataclasses import dataclass
from typing import Optional

from constants import (
    CONFIG_SECTION,
    DEFAULT_COND_TOL,
    DEFAULT_FREQ_COUNT,
    DEFAULT_HORIZON,
    DEFAULT_RANK_TOL,
    DEFAULT_REJECT_REL_TOL,
    DEFAULT_SAMPLES,
    DEFAULT_SCHEME,
    DEFAULT_SEED,
    DEFAULT_TOL,
    MAX_FREQ_COUNT,
    MAX_HORIZON,
    MAX_REJECT_REL_TOL,
    MAX_SAMPLES,
    MAX_SEED,
    MAX_TOL,
    MIN_FREQ_COUNT,
    MIN_HORIZON,
    MIN_SAMPLES,
)
from lib.errors import ConfigurationError

logger = logging.getLogger(__name__)


@dataclass
class RunConfig:
    """Settings for one CLI invocation."""

    command: str = "qi-check"
    input_path: Optional[str] = None
    tol: float = DEFAULT_TOL
    horizon: int = DEFAULT_HORIZON
    samples: int = DEFAULT_SAMPLES
    seed: int = DEFAULT_SEED
    out_path: Optional[str] = None
    example: Optional[str] = None
    scheme: str = DEFAULT_SCHEME
    cond_tol: float = DEFAULT_COND_TOL
    reject_rel_tol: float = DEFAULT_REJECT_REL_TOL
    freq_count: int = DEFAULT_FREQ_COUNT
    rank_tol: float = DEFAULT_RANK_TOL
    log_file: Optional[str] = None
    verbose: bool = False


# key -> (parser, default, lower, upper, lower bound exclusive)
_NUMERIC_KEYS = {
    "tol": (float, DEFAULT_TOL, 0.0, MAX_TOL, True),
    "horizon": (int, DEFAULT_HORIZON, MIN_HORIZON, MAX_HORIZON, False),
    "samples": (int, DEFAULT_SAMPLES, MIN_SAMPLES, MAX_SAMPLES, False),
    "seed": (int, DEFAULT_SEED, 0, MAX_SEED, False),
    "cond_tol": (float, DEFAULT_COND_TOL, 0.0, MAX_TOL, True),
    "reject_rel_tol": (float, DEFAULT_REJECT_REL_TOL, 0.0, MAX_REJECT_REL_TOL, True),
    "freq_count": (int, DEFAULT_FREQ_COUNT, MIN_FREQ_COUNT, MAX_FREQ_COUNT, False),
    "rank_tol": (float, DEFAULT_RANK_TOL, 0.0, MAX_TOL, True),
}

_DEFAULTS = {
    "tol": str(DEFAULT_TOL),
    "horizon": str(DEFAULT_HORIZON),
    "samples": str(DEFAULT_SAMPLES),
    "seed": str(DEFAULT_SEED),
    "scheme": DEFAULT_SCHEME,
    "cond_tol": str(DEFAULT_COND_TOL),
    "reject_rel_tol": str(DEFAULT_REJECT_REL_TOL),
    "freq_count": str(DEFAULT_FREQ_COUNT),
    "rank_tol": str(DEFAULT_RANK_TOL),
    "log_file": "",
    "verbose": "false",
}


def load_config(config_path: Optional[str]):
    """Load configuration from path and ensure defaults exist.

    Returns a ConfigParser instance with a `[run]` section whose missing keys
    are filled with the built-in defaults. A missing file is not an error;
    an unreadable one raises ConfigurationError.
    """
    import configparser

    config = configparser.ConfigParser()
    if config_path and os.path.exists(config_path):
        try:
            config.read(config_path, encoding="utf-8")
            logger.info("Configuration loaded from %s", config_path)
        except (configparser.Error, UnicodeDecodeError, OSError) as e:
            raise ConfigurationError(f"cannot read configuration {config_path}: {e}")
    elif config_path:
        logger.debug("Configuration file %s not found, using defaults", config_path)

    if CONFIG_SECTION not in config:
        config[CONFIG_SECTION] = {}

    for key, value in _DEFAULTS.items():
        if key not in config[CONFIG_SECTION]:
            config[CONFIG_SECTION][key] = value

    return config


def _parse_number(raw, kind):
    if kind is int:
        value = float(raw)
        if not value.is_integer():
            raise ValueError(f"{raw!r} is not an integer")
        return int(value)
    return float(raw)


def validate_and_apply_config(config, run_config: RunConfig) -> RunConfig:
    """Validate values in config['run'] and apply them to ``run_config``.

    Invalid or out-of-range entries are reset to their defaults, both in
    the parser and on the RunConfig.
    """
    section = config[CONFIG_SECTION]
    for key, (kind, default, lower, upper, exclusive) in _NUMERIC_KEYS.items():
        raw = section.get(key, str(default))
        try:
            value = _parse_number(raw, kind)
            too_low = value <= lower if exclusive else value < lower
            if too_low or value > upper:
                raise ValueError(f"{value} outside range")
        except (TypeError, ValueError):
            logger.warning("Invalid %s=%r in configuration, using %s", key, raw, default)
            section[key] = str(default)
            value = default
        setattr(run_config, key, value)

    scheme = section.get("scheme", DEFAULT_SCHEME).strip().lower()
    if scheme not in ("grid", "random"):
        logger.warning("Invalid scheme=%r in configuration, using %s", scheme, DEFAULT_SCHEME)
        section["scheme"] = DEFAULT_SCHEME
        scheme = DEFAULT_SCHEME
    run_config.scheme = scheme

    log_file = section.get("log_file", "").strip()
    run_config.log_file = log_file or None

    try:
        run_config.verbose = section.getboolean("verbose", fallback=False)
    except ValueError:
        section["verbose"] = "false"
        run_config.verbose = False

    return run_config


def save_config(config, config_path: str):
    """Persist the ConfigParser to disk, creating dirs if needed."""
    try:
        config_dir = os.path.dirname(config_path)
        if config_dir and not os.path.exists(config_dir):
            os.makedirs(config_dir, exist_ok=True)

        with open(config_path, "w", encoding="utf-8") as fh:
            config.write(fh)
        logger.info("Configuration saved to %s", config_path)
    except OSError as e:
        logger.error(f"Error saving configuration: {e}", exc_info=True)
        raise
