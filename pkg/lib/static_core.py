"""Finite-dimensional feedback map, closed loop and subspace QI testing.

Controllers K are real n_u x n_y matrices and G is n_y x n_u. The feedback
map h_G(K) = -K(I - GK)^{-1} is defined on the set M of K with I - GK
invertible, and is an involution there. In finite dimensions the spectrum
of GK is finite, so the set N (1 in the unbounded component of the
resolvent set) coincides with M; ``in_set_n`` exists to make that explicit.
"""

import logging
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Tuple

import numpy as np

from constants import (
    DEFAULT_COND_TOL,
    DEFAULT_ORTHO_DROP_TOL,
    DEFAULT_QI_TOL,
    MSG_FINITE_N_EQUALS_M,
)
from lib.errors import DimensionError, DomainError, SchemaError
from lib.reports import QiReport

logger = logging.getLogger(__name__)


def _as_matrix(value, name: str) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if arr.ndim != 2:
        raise DimensionError(f"{name} must be a 2-D matrix, got shape {arr.shape}")
    return arr


def _check_loop(G: np.ndarray, K: np.ndarray) -> None:
    if G.shape[1] != K.shape[0] or G.shape[0] != K.shape[1]:
        raise DimensionError(
            f"G is {G.shape} and K is {K.shape}; expected G n_y x n_u and K n_u x n_y"
        )


def orthonormalize(vectors: np.ndarray, drop_tol: float = DEFAULT_ORTHO_DROP_TOL):
    """Modified Gram-Schmidt on the rows of ``vectors``.

    Rows whose remaining norm falls below ``drop_tol`` times the largest
    input norm are dropped (linearly dependent). Returns the orthonormal
    rows and the indices of the kept input rows.
    """
    if vectors.shape[0] == 0:
        return vectors.copy(), []
    scale = max(float(np.max(np.linalg.norm(vectors, axis=1))), 1.0)
    out = []
    kept = []
    for idx, v in enumerate(vectors):
        w = v.astype(float).copy()
        # two passes keep the result orthogonal to working precision
        for _ in range(2):
            for q in out:
                w -= np.dot(q, w) * q
        n = np.linalg.norm(w)
        if n <= drop_tol * scale:
            logger.debug("dropping dependent basis element %d (norm %.3e)", idx, n)
            continue
        out.append(w / n)
        kept.append(idx)
    if not out:
        return np.zeros((0, vectors.shape[1])), []
    return np.array(out), kept


class SubspaceBasis:
    """Finite basis of real n_u x n_y matrices spanning the controller subspace S.

    ``elements`` keeps the matrices as given (they define the coordinates
    used for sampling). ``orthonormal`` holds a Frobenius-orthonormal basis
    of the same span, computed once at construction, used for projections
    and QI tests.
    """

    def __init__(
        self,
        elements: Iterable,
        shape: Optional[Tuple[int, int]] = None,
        orthonormalize_basis: bool = True,
    ):
        mats = [_as_matrix(e, "basis element") for e in elements]
        if shape is None:
            if not mats:
                raise DimensionError("an empty basis needs an explicit shape")
            shape = mats[0].shape
        shape = (int(shape[0]), int(shape[1]))
        for m in mats:
            if m.shape != shape:
                raise DimensionError(
                    f"basis elements must all be {shape}, got {m.shape}"
                )
        self.shape = shape
        self.elements = tuple(m.copy() for m in mats)
        for m in self.elements:
            m.setflags(write=False)
        self.orthonormalized_flag = bool(orthonormalize_basis)

        flat = (
            np.array([m.ravel() for m in self.elements])
            if mats
            else np.zeros((0, shape[0] * shape[1]))
        )
        if orthonormalize_basis:
            q, _ = orthonormalize(flat)
        else:
            q = flat
        self._flat = q
        self.orthonormal = tuple(row.reshape(shape) for row in q)

    def __len__(self):
        return len(self.elements)

    @property
    def dimension(self) -> int:
        return self._flat.shape[0]

    @property
    def flat(self) -> np.ndarray:
        return self._flat

    def combine(self, coefficients: Sequence[float]) -> np.ndarray:
        """Controller sum_m c_m * elements[m] in the given (raw) coordinates."""
        c = np.asarray(coefficients, dtype=float)
        if c.shape != (len(self.elements),):
            raise DimensionError(
                f"expected {len(self.elements)} coefficients, got shape {c.shape}"
            )
        if not self.elements:
            return np.zeros(self.shape)
        return np.tensordot(c, np.array(self.elements), axes=1)

    @classmethod
    def from_dict(cls, data) -> "SubspaceBasis":
        try:
            elements = data["basis"]
        except (KeyError, TypeError):
            raise SchemaError("subspace document needs a 'basis' array")
        shape = data.get("shape")
        return cls(elements, shape=tuple(shape) if shape else None)

    def to_dict(self):
        return {
            "shape": list(self.shape),
            "basis": [m.tolist() for m in self.elements],
        }


@dataclass(frozen=True)
class StaticPlant:
    """Four real blocks of the generalized plant; G is the P22 block."""

    P11: np.ndarray
    P12: np.ndarray
    P21: np.ndarray
    G: np.ndarray

    def __post_init__(self):
        blocks = {}
        for name in ("P11", "P12", "P21", "G"):
            arr = _as_matrix(getattr(self, name), name).copy()
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
            blocks[name] = arr
        n_z, n_w = blocks["P11"].shape
        if blocks["P12"].shape[0] != n_z:
            raise DimensionError("P12 must have as many rows as P11")
        if blocks["P21"].shape[1] != n_w:
            raise DimensionError("P21 must have as many columns as P11")
        n_u = blocks["P12"].shape[1]
        n_y = blocks["P21"].shape[0]
        if blocks["G"].shape != (n_y, n_u):
            raise DimensionError(
                f"G must be {n_y} x {n_u} to match P21 rows and P12 columns, "
                f"got {blocks['G'].shape}"
            )

    @property
    def dims(self):
        """(n_z, n_w, n_u, n_y)"""
        return (
            self.P11.shape[0],
            self.P11.shape[1],
            self.P12.shape[1],
            self.P21.shape[0],
        )

    @property
    def controller_shape(self):
        return (self.P12.shape[1], self.P21.shape[0])

    @classmethod
    def from_dict(cls, data) -> "StaticPlant":
        missing = [k for k in ("P11", "P12", "P21", "G") if k not in data]
        if missing:
            raise SchemaError(f"plant document missing blocks: {', '.join(missing)}")
        return cls(data["P11"], data["P12"], data["P21"], data["G"])

    def to_dict(self):
        return {
            "P11": self.P11.tolist(),
            "P12": self.P12.tolist(),
            "P21": self.P21.tolist(),
            "G": self.G.tolist(),
        }


def condition_ratio(A: np.ndarray) -> float:
    """Smallest over largest singular value (1 for the empty matrix)."""
    if A.size == 0:
        return 1.0
    s = np.linalg.svd(A, compute_uv=False)
    if s[0] == 0.0:
        return 0.0
    return float(s[-1] / s[0])


def in_domain_m(G, K, cond_tol: float = DEFAULT_COND_TOL) -> bool:
    """True iff I - GK is numerically invertible (relative smallest singular value)."""
    G = _as_matrix(G, "G")
    K = _as_matrix(K, "K")
    _check_loop(G, K)
    return condition_ratio(np.eye(G.shape[0]) - G @ K) >= cond_tol


def in_set_n(G, K, tol: float = DEFAULT_COND_TOL) -> bool:
    """True iff 1 is not an eigenvalue of GK (up to ``tol`` relative).

    The resolvent set of a matrix is the complement of finitely many
    points, hence connected and unbounded; membership of 1 in it is the
    same as invertibility of I - GK.
    """
    G = _as_matrix(G, "G")
    K = _as_matrix(K, "K")
    _check_loop(G, K)
    lam = np.linalg.eigvals(G @ K)
    if lam.size == 0:
        return True
    scale = max(1.0, float(np.max(np.abs(lam))))
    return bool(np.min(np.abs(1.0 - lam)) >= tol * scale)


def _right_solve(K: np.ndarray, R: np.ndarray) -> np.ndarray:
    """K @ inv(R) without forming the inverse."""
    return np.linalg.solve(R.T, K.T).T


def hmap(G, K, cond_tol: float = DEFAULT_COND_TOL) -> np.ndarray:
    """h_G(K) = -K (I - GK)^{-1}."""
    G = _as_matrix(G, "G")
    K = _as_matrix(K, "K")
    _check_loop(G, K)
    R = np.eye(G.shape[0]) - G @ K
    cond = condition_ratio(R)
    if cond < cond_tol:
        raise DomainError(
            f"I - GK is numerically singular (condition ratio {cond:.3e})",
            condition=cond,
        )
    return -_right_solve(K, R)


def closed_loop(P: StaticPlant, K, cond_tol: float = DEFAULT_COND_TOL) -> np.ndarray:
    """P11 - P12 h_G(K) P21, i.e. P11 + P12 K (I - GK)^{-1} P21."""
    K = _as_matrix(K, "K")
    if K.shape != P.controller_shape:
        raise DimensionError(
            f"controller must be {P.controller_shape} for this plant, got {K.shape}"
        )
    return P.P11 - P.P12 @ hmap(P.G, K, cond_tol) @ P.P21


def homotopy_g(G, K, alpha: float, cond_tol: float = DEFAULT_COND_TOL) -> np.ndarray:
    """g(alpha) = -K (I - (1 - alpha) GK)^{-1}; g(0) = h_G(K) and g(1) = -K."""
    G = _as_matrix(G, "G")
    K = _as_matrix(K, "K")
    _check_loop(G, K)
    alpha = float(alpha)
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    if alpha == 1.0:
        return -K.copy()
    R = np.eye(G.shape[0]) - (1.0 - alpha) * (G @ K)
    cond = condition_ratio(R)
    if cond < cond_tol:
        raise DomainError(
            f"resolvent I - (1-alpha)GK is singular at alpha={alpha} "
            f"(condition ratio {cond:.3e})",
            condition=cond,
        )
    return -_right_solve(K, R)


def scaling_identity_residual(G, K, alpha: float) -> float:
    """Frobenius residual of (I - (1-a)GK)(I - GK)^{-1} - (I - a G h_G(K)).

    The identity shows that alpha * h_G(K) stays in M whenever the
    resolvent at 1 - alpha is invertible.
    """
    G = _as_matrix(G, "G")
    K = _as_matrix(K, "K")
    n = G.shape[0]
    lhs = _right_solve(np.eye(n) - (1.0 - alpha) * (G @ K), np.eye(n) - G @ K)
    rhs = np.eye(n) - alpha * (G @ hmap(G, K))
    return float(np.linalg.norm(lhs - rhs))


def project_onto_subspace(basis: SubspaceBasis, X) -> Tuple[np.ndarray, float]:
    """Frobenius-orthogonal projection of X onto span(basis) and its residual."""
    X = _as_matrix(X, "X")
    if X.shape != basis.shape:
        raise DimensionError(f"X is {X.shape}, basis elements are {basis.shape}")
    x = X.ravel()
    q = basis.flat
    if q.shape[0] == 0:
        return np.zeros(basis.shape), float(np.linalg.norm(x))
    if basis.orthonormalized_flag:
        proj = q.T @ (q @ x)
    else:
        coef, *_ = np.linalg.lstsq(q.T, x, rcond=None)
        proj = q.T @ coef
    return proj.reshape(basis.shape), float(np.linalg.norm(x - proj))


def normalized_residual(basis: SubspaceBasis, X) -> float:
    """Projection residual of X divided by (1 + ||X||_F)."""
    X = _as_matrix(X, "X")
    _, r = project_onto_subspace(basis, X)
    return r / (1.0 + float(np.linalg.norm(X)))


def subspace_qi_check(basis: SubspaceBasis, G, tol: float = DEFAULT_QI_TOL) -> QiReport:
    """Exact QI test for a subspace given by a basis.

    K -> KGK is a quadratic form in the coordinates of K, so KGK lies in S
    for every K in S iff every symmetrized product B_i G B_j + B_j G B_i
    (i <= j, orthonormal basis) lies in S. Diagonal terms are examined
    first; the witness is the worst offender, K = B_i (i = j) or B_i + B_j.
    """
    G = _as_matrix(G, "G")
    n_u, n_y = basis.shape
    if G.shape != (n_y, n_u):
        raise DimensionError(
            f"G must be {n_y} x {n_u} for controllers of shape {basis.shape}, "
            f"got {G.shape}"
        )
    B = basis.orthonormal
    m = len(B)
    worst = {"diag": (0.0, None), "cross": (0.0, None)}
    for i in range(m):
        for j in range(i, m):
            prod = B[i] @ G @ B[j]
            sym = prod if i == j else prod + B[j] @ G @ B[i]
            _, r = project_onto_subspace(basis, sym)
            if r > tol * (1.0 + np.linalg.norm(sym)):
                key = "diag" if i == j else "cross"
                if r > worst[key][0]:
                    worst[key] = (r, (i, j))

    notes = [MSG_FINITE_N_EQUALS_M]
    pick = worst["diag"][1] or worst["cross"][1]
    if pick is None:
        logger.debug("subspace QI holds (dim S = %d, tol %.1e)", m, tol)
        return QiReport(qi=True, method="static", tol=tol, notes=notes)

    i, j = pick
    K = B[i].copy() if i == j else B[i] + B[j]
    kgk = K @ G @ K
    _, r = project_onto_subspace(basis, kgk)
    residual = r / max(float(np.linalg.norm(kgk)), np.finfo(float).tiny)
    logger.debug("subspace QI fails at basis pair (%d, %d), residual %.3e", i, j, residual)
    return QiReport(
        qi=False,
        witness_controller=K,
        witness_residual=residual,
        witness_indices=(i, j),
        method="static",
        tol=tol,
        notes=notes,
    )


def batch_in_domain(G: np.ndarray, Ks: np.ndarray, cond_tol: float = DEFAULT_COND_TOL):
    """Vectorized in_domain_m over a stack of controllers (N, n_u, n_y)."""
    n = G.shape[0]
    R = np.eye(n)[None, :, :] - np.einsum("ab,nbc->nac", G, Ks)
    s = np.linalg.svd(R, compute_uv=False)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(s[:, 0] > 0, s[:, -1] / s[:, 0], 0.0)
    return ratio >= cond_tol


def batch_hmap(G: np.ndarray, Ks: np.ndarray) -> np.ndarray:
    """Vectorized h_G over a stack of controllers already known to lie in M."""
    n = G.shape[0]
    R = np.eye(n)[None, :, :] - np.einsum("ab,nbc->nac", G, Ks)
    # K R^{-1} = (R^T \ K^T)^T
    X = np.linalg.solve(np.transpose(R, (0, 2, 1)), np.transpose(Ks, (0, 2, 1)))
    return -np.transpose(X, (0, 2, 1))


def batch_closed_loop(P: StaticPlant, Ks: np.ndarray) -> np.ndarray:
    H = batch_hmap(P.G, Ks)
    return P.P11[None, :, :] - np.einsum("ab,nbc,cd->nad", P.P12, H, P.P21)
