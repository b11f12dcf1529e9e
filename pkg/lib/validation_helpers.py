"""Validation helpers for command-line inputs.

These functions are pure or best-effort: they log what is wrong and return
False instead of raising, so the caller decides how to report it.
"""

import os
import logging

import numpy as np

from constants import EXAMPLE_IDS, MAX_INPUT_FILE_SIZE_BYTES

logger = logging.getLogger(__name__)


def validate_input_path(file_path: str) -> bool:
    """Validate a candidate input document path.

    Returns True if the path names an existing regular `.json` file. Very
    large files are accepted with a warning.
    """
    if not file_path or not isinstance(file_path, str):
        logger.warning("Invalid input path: empty or not a string")
        return False

    try:
        file_path = file_path.strip()
        resolved_path = os.path.abspath(os.path.normpath(file_path))

        if not os.path.exists(resolved_path):
            logger.warning(f"File does not exist: {resolved_path}")
            return False

        if not os.path.isfile(resolved_path):
            logger.warning("Path is not a file")
            return False

        if not resolved_path.lower().endswith(".json"):
            logger.warning("File is not a .json file")
            return False

        file_size = os.path.getsize(resolved_path)
        if file_size > MAX_INPUT_FILE_SIZE_BYTES:
            logger.warning(f"Input file is very large: {file_size / (1024*1024):.1f}MB")

        logger.debug(f"Input path validated successfully: {resolved_path}")
        return True

    except (OSError, ValueError) as e:
        logger.error(f"Error validating input path: {e}")
        return False


def validate_example_id(example_id) -> bool:
    if example_id not in EXAMPLE_IDS:
        logger.warning(
            "Unknown example %r; expected one of %s", example_id, ", ".join(EXAMPLE_IDS)
        )
        return False
    return True


def is_finite_matrix(value) -> bool:
    """True for a non-empty 2-D array of finite reals."""
    try:
        arr = np.asarray(value, dtype=float)
    except (TypeError, ValueError):
        return False
    return arr.ndim == 2 and arr.size > 0 and bool(np.all(np.isfinite(arr)))
