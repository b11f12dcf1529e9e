"""Boolean sparsity patterns and the pattern-level quadratic invariance test.

A Pattern marks which entries of a controller (or plant) matrix may be
nonzero. The subspace it induces is {K : K_ij = 0 wherever the pattern is
False}. Pattern products over-approximate the support of numeric products,
so the QI verdict here holds for generic numeric G on the given pattern.
"""

import logging
from typing import List

import numpy as np

from constants import MSG_GENERIC_PATTERN_NOTE
from lib.errors import DimensionError, SchemaError
from lib.reports import QiReport
from lib.static_core import SubspaceBasis

logger = logging.getLogger(__name__)


class Pattern:
    """Immutable boolean matrix; True means the entry is allowed to be nonzero."""

    __slots__ = ("_entries",)

    def __init__(self, entries):
        arr = np.array(entries, dtype=bool)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise DimensionError(
                f"pattern must be a non-empty 2-D array, got shape {arr.shape}"
            )
        arr.setflags(write=False)
        self._entries = arr

    @property
    def entries(self) -> np.ndarray:
        return self._entries

    @property
    def rows(self) -> int:
        return self._entries.shape[0]

    @property
    def cols(self) -> int:
        return self._entries.shape[1]

    @property
    def shape(self):
        return self._entries.shape

    @property
    def count(self) -> int:
        return int(self._entries.sum())

    def __eq__(self, other):
        if not isinstance(other, Pattern):
            return NotImplemented
        return np.array_equal(self._entries, other._entries)

    def __hash__(self):
        return hash((self._entries.shape, self._entries.tobytes()))

    def __repr__(self):
        return f"Pattern({self.to_json()})"

    @classmethod
    def identity(cls, n: int) -> "Pattern":
        return cls(np.eye(n, dtype=bool))

    @classmethod
    def full(cls, rows: int, cols: int) -> "Pattern":
        return cls(np.ones((rows, cols), dtype=bool))

    @classmethod
    def empty(cls, rows: int, cols: int) -> "Pattern":
        return cls(np.zeros((rows, cols), dtype=bool))

    @classmethod
    def support(cls, matrix, tol: float = 0.0) -> "Pattern":
        """Pattern of the entries of ``matrix`` whose magnitude exceeds ``tol``."""
        return cls(np.abs(np.asarray(matrix, dtype=float)) > tol)

    @classmethod
    def from_json(cls, data) -> "Pattern":
        """Parse a JSON array of arrays of 0/1 integers."""
        if not isinstance(data, list) or not data:
            raise SchemaError("pattern must be a non-empty array of arrays")
        width = None
        for row in data:
            if not isinstance(row, list):
                raise SchemaError("pattern rows must be arrays")
            if width is None:
                width = len(row)
            elif len(row) != width:
                raise SchemaError("pattern rows must all have the same length")
            for v in row:
                if isinstance(v, bool) or v not in (0, 1):
                    raise SchemaError(f"pattern entries must be 0 or 1, got {v!r}")
        return cls(np.array(data, dtype=int) == 1)

    def to_json(self) -> List[List[int]]:
        return self._entries.astype(int).tolist()

    def to_dict(self):
        return self.to_json()


def bool_product(A: Pattern, B: Pattern) -> Pattern:
    """Support pattern of any numeric product with supports A and B."""
    if A.cols != B.rows:
        raise DimensionError(
            f"cannot multiply patterns {A.shape} and {B.shape}: inner dimensions differ"
        )
    prod = A.entries.astype(np.int64) @ B.entries.astype(np.int64)
    return Pattern(prod > 0)


def _find_witness(S: Pattern, G: Pattern, i: int, k: int):
    s, g = S.entries, G.entries
    for l in np.flatnonzero(s[i, :]):
        for j in np.flatnonzero(g[l, :]):
            if s[j, k]:
                return int(l), int(j)
    # bool_product reported (i, k); a path must exist
    raise RuntimeError(f"no witness path for violating entry ({i}, {k})")


def pattern_qi_check(S: Pattern, G: Pattern) -> QiReport:
    """Decide quadratic invariance of the sparsity subspace S under pattern G.

    QI holds iff the boolean triple product S·G·S is contained in S. On
    failure the report carries the index quadruple (i, l, j, k) with
    S_il, G_lj, S_jk allowed and S_ik forbidden, and the witness controller
    K = E_il + E_jk.
    """
    if S.cols != G.rows or G.cols != S.rows:
        raise DimensionError(
            f"S is {S.shape} and G is {G.shape}; expected S n_u x n_y and G n_y x n_u"
        )
    triple = bool_product(bool_product(S, G), S)
    violations = triple.entries & ~S.entries
    if not violations.any():
        logger.debug("pattern QI holds for S %s under G %s", S.shape, G.shape)
        return QiReport(qi=True, method="pattern", notes=[MSG_GENERIC_PATTERN_NOTE])

    i, k = (int(v) for v in np.argwhere(violations)[0])
    l, j = _find_witness(S, G, i, k)
    witness = np.zeros(S.shape)
    witness[i, l] = 1.0
    witness[j, k] = 1.0

    kgk = witness @ G.entries.astype(float) @ witness
    outside = np.where(S.entries, 0.0, kgk)
    residual = float(np.linalg.norm(outside) / np.linalg.norm(kgk))
    logger.debug(
        "pattern QI fails: entry (%d, %d) reached via (%d,%d),(%d,%d)", i, k, i, l, j, k
    )
    return QiReport(
        qi=False,
        witness_controller=witness,
        witness_residual=residual,
        witness_indices=(i, l, j, k),
        method="pattern",
        notes=[MSG_GENERIC_PATTERN_NOTE],
    )


def pattern_to_basis(S: Pattern) -> SubspaceBasis:
    """One unit matrix per allowed entry, in row-major order."""
    elements = []
    for i, j in np.argwhere(S.entries):
        e = np.zeros(S.shape)
        e[i, j] = 1.0
        elements.append(e)
    return SubspaceBasis(elements, shape=S.shape)
