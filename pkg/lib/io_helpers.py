"""Reading input documents and resolving output paths.

Input documents are JSON objects. A plant carries the blocks P11, P12,
P21 and G (matrices, or FIR systems {"horizon", "taps"}); a subspace is
given by "basis" (list of matrices or FIR systems) or "pattern" (0/1
array, with "horizon" and optional "delays" for FIR use). qi-check also
accepts "G_pattern" with "pattern". Schema problems raise SchemaError
carrying the file path and, where it can be located, the line of the
offending key.
"""

import os
import re
import json
import logging
from dataclasses import dataclass
from typing import Any, Optional

import numpy as np

from lib.errors import DimensionError, SchemaError
from lib.fir_core import FirSubspace, FirTransferMatrix
from lib.patterns import Pattern, pattern_to_basis
from lib.static_core import StaticPlant, SubspaceBasis
from lib.synthesis import FirPlant
from lib.validation_helpers import is_finite_matrix

logger = logging.getLogger(__name__)

PLANT_KEYS = ("P11", "P12", "P21", "G")


def resolve_output_path(raw: Optional[str], default_name: str) -> str:
    """Resolve where an output file goes.

    Absolute paths are used directly; relative ones are resolved against the
    working directory. Parent directories are created.
    """
    if not raw:
        raw = default_name
    path = raw if os.path.isabs(raw) else os.path.join(os.getcwd(), raw)
    parent = os.path.dirname(path)
    if parent and not os.path.exists(parent):
        os.makedirs(parent, exist_ok=True)
    return path


@dataclass
class JsonDocument:
    path: str
    text: str
    data: Any

    def line_of(self, key: Optional[str]) -> Optional[int]:
        """1-based line of the first occurrence of ``"key"`` in the source."""
        if not key:
            return None
        match = re.search(r'"%s"\s*:' % re.escape(key), self.text)
        if match is None:
            return None
        return self.text.count("\n", 0, match.start()) + 1

    def has(self, key: str) -> bool:
        return key in self.data


def read_json_document(path: str) -> JsonDocument:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except (OSError, UnicodeDecodeError) as e:
        raise SchemaError(f"cannot read input: {e}", path=path)
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise SchemaError(f"invalid JSON: {e.msg}", path=path, line=e.lineno)
    if not isinstance(data, dict):
        raise SchemaError("top-level JSON value must be an object", path=path, line=1)
    logger.debug("read %s (%d keys)", path, len(data))
    return JsonDocument(path, text, data)


def parse_matrix(value, key: str) -> np.ndarray:
    if not isinstance(value, list) or not is_finite_matrix(value):
        raise SchemaError(
            f"'{key}' must be a non-empty array of equal-length arrays of finite numbers",
            key=key,
        )
    return np.asarray(value, dtype=float)


def parse_pattern(value, key: str = "pattern") -> Pattern:
    try:
        return Pattern.from_json(value)
    except SchemaError as e:
        raise SchemaError(f"'{key}': {e.message}", key=key)


def parse_fir(value, key: str) -> FirTransferMatrix:
    if isinstance(value, dict):
        try:
            fir = FirTransferMatrix.from_dict(value)
        except SchemaError as e:
            raise SchemaError(f"'{key}': {e.message}", key=key)
        if not np.all(np.isfinite(fir.taps)):
            raise SchemaError(f"'{key}': taps must be finite", key=key)
        return fir
    return FirTransferMatrix.from_static(parse_matrix(value, key))


def is_fir_document(doc: JsonDocument) -> bool:
    """FIR mode when any plant block or basis element is an FIR object."""
    data = doc.data
    blocks = [data.get(k) for k in PLANT_KEYS]
    if any(isinstance(b, dict) for b in blocks):
        return True
    basis = data.get("basis")
    return isinstance(basis, list) and any(isinstance(b, dict) for b in basis)


def _located(doc: JsonDocument, fn, *args, key: Optional[str] = None):
    try:
        return fn(*args)
    except SchemaError as e:
        e.path = e.path or doc.path
        if e.line is None:
            e.line = doc.line_of(e.key)
        raise
    except DimensionError as e:
        if key is None or not doc.has(key):
            key = next((k for k in PLANT_KEYS if doc.has(k)), None)
        raise SchemaError(str(e), path=doc.path, line=doc.line_of(key), key=key)


def _require(doc: JsonDocument, *keys):
    missing = [k for k in keys if k not in doc.data]
    if missing:
        raise SchemaError(
            f"missing required key(s): {', '.join(missing)}", path=doc.path, line=1
        )


def parse_static_plant(doc: JsonDocument) -> StaticPlant:
    _require(doc, *PLANT_KEYS)

    def build():
        blocks = [parse_matrix(doc.data[k], k) for k in PLANT_KEYS]
        return StaticPlant(*blocks)

    return _located(doc, build)


def parse_fir_plant(doc: JsonDocument) -> FirPlant:
    _require(doc, *PLANT_KEYS)

    def build():
        return FirPlant(*(parse_fir(doc.data[k], k) for k in PLANT_KEYS))

    return _located(doc, build)


def parse_static_g(doc: JsonDocument) -> np.ndarray:
    _require(doc, "G")
    return _located(doc, parse_matrix, doc.data["G"], "G")


def parse_fir_g(doc: JsonDocument) -> FirTransferMatrix:
    _require(doc, "G")
    return _located(doc, parse_fir, doc.data["G"], "G")


def _parse_horizon(doc: JsonDocument, default: int) -> int:
    raw = doc.data.get("horizon", default)
    if isinstance(raw, bool) or not isinstance(raw, int) or raw < 0:
        raise SchemaError(
            "'horizon' must be a nonnegative integer",
            path=doc.path,
            line=doc.line_of("horizon"),
            key="horizon",
        )
    return raw


def parse_subspace(doc: JsonDocument, fir: bool = False, horizon: int = 0):
    """SubspaceBasis (static) or FirSubspace from "basis" or "pattern"."""
    if "basis" not in doc.data and "pattern" not in doc.data:
        raise SchemaError(
            "subspace needs a 'basis' or a 'pattern'", path=doc.path, line=1
        )

    def build():
        if "pattern" in doc.data:
            pattern = parse_pattern(doc.data["pattern"])
            if not fir:
                return pattern_to_basis(pattern)
            delays = doc.data.get("delays")
            if delays is not None:
                delays = parse_matrix(delays, "delays")
                if np.any(delays < 0) or np.any(delays != np.round(delays)):
                    raise SchemaError(
                        "'delays' must hold nonnegative integers", key="delays"
                    )
            return FirSubspace.from_pattern(
                pattern, _parse_horizon(doc, horizon), delays
            )
        raw = doc.data["basis"]
        if not isinstance(raw, list):
            raise SchemaError("'basis' must be an array", key="basis")
        if not fir:
            elements = [parse_matrix(b, "basis") for b in raw]
            if not elements:
                if "shape" not in doc.data:
                    raise SchemaError("an empty 'basis' needs a 'shape'", key="basis")
                return SubspaceBasis([], shape=tuple(doc.data["shape"]))
            return SubspaceBasis(elements)
        elements = [parse_fir(b, "basis") for b in raw]
        h = _parse_horizon(doc, max([e.horizon for e in elements] + [horizon]))
        shape = tuple(doc.data["shape"]) if "shape" in doc.data else None
        return FirSubspace(elements, horizon=h, shape=shape)

    return _located(doc, build)


def parse_g_pattern(doc: JsonDocument) -> Pattern:
    _require(doc, "G_pattern")
    return _located(doc, parse_pattern, doc.data["G_pattern"], "G_pattern")


def parse_s_pattern(doc: JsonDocument) -> Pattern:
    _require(doc, "pattern")
    return _located(doc, parse_pattern, doc.data["pattern"], "pattern")


def located_call(doc: JsonDocument, key: str, fn, *args):
    """Call ``fn(*args)``; dimension and schema errors point at ``key`` in ``doc``."""
    return _located(doc, fn, *args, key=key)
