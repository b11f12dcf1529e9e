"""Causal LTI systems truncated to a finite horizon.

A FirTransferMatrix stores impulse-response taps X(0..N) with shape
(N + 1, rows, cols). All products and inverses are computed on an explicit
output horizon; taps beyond an operand's horizon count as zero, so results
are exact up to the horizon.
"""

import logging
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy import linalg

from constants import (
    DEFAULT_COND_TOL,
    DEFAULT_INERTNESS_MARGIN,
    DEFAULT_INERTNESS_SAMPLES,
    DEFAULT_QI_TOL,
    INERT_SAMPLED,
    INERT_STRUCTURAL,
    INERT_VIOLATED,
)
from lib.errors import DimensionError, InertnessError, SchemaError
from lib.reports import InertnessReport, QiReport
from lib.static_core import condition_ratio, orthonormalize

logger = logging.getLogger(__name__)


class FirTransferMatrix:
    """Read-only tap array of a causal convolution operator."""

    __slots__ = ("_taps",)

    def __init__(self, taps):
        arr = np.array(taps, dtype=float)
        if arr.ndim == 2:
            arr = arr[None, :, :]
        if arr.ndim != 3 or arr.shape[0] < 1:
            raise DimensionError(
                f"taps must have shape (N+1, rows, cols), got {arr.shape}"
            )
        arr.setflags(write=False)
        self._taps = arr

    @property
    def taps(self) -> np.ndarray:
        return self._taps

    @property
    def horizon(self) -> int:
        return self._taps.shape[0] - 1

    @property
    def shape(self):
        return self._taps.shape[1:]

    def tap(self, k: int) -> np.ndarray:
        if 0 <= k <= self.horizon:
            return self._taps[k]
        return np.zeros(self.shape)

    def constant(self) -> np.ndarray:
        return self._taps[0]

    def is_strictly_causal(self, tol: float = 0.0) -> bool:
        return bool(np.all(np.abs(self._taps[0]) <= tol))

    @classmethod
    def zeros(cls, shape, horizon: int = 0) -> "FirTransferMatrix":
        return cls(np.zeros((horizon + 1,) + tuple(shape)))

    @classmethod
    def identity(cls, n: int, horizon: int = 0) -> "FirTransferMatrix":
        taps = np.zeros((horizon + 1, n, n))
        taps[0] = np.eye(n)
        return cls(taps)

    @classmethod
    def from_static(cls, matrix, horizon: int = 0) -> "FirTransferMatrix":
        m = np.asarray(matrix, dtype=float)
        if m.ndim != 2:
            raise DimensionError(f"static matrix must be 2-D, got shape {m.shape}")
        taps = np.zeros((horizon + 1,) + m.shape)
        taps[0] = m
        return cls(taps)

    @classmethod
    def delay(cls, matrix, lag: int, horizon: int) -> "FirTransferMatrix":
        """``matrix`` placed at tap ``lag`` (zero system if lag > horizon)."""
        m = np.asarray(matrix, dtype=float)
        taps = np.zeros((horizon + 1,) + m.shape)
        if lag <= horizon:
            taps[lag] = m
        return cls(taps)

    def truncate(self, horizon: int) -> "FirTransferMatrix":
        """Cut or zero-pad to ``horizon``."""
        if horizon < 0:
            raise ValueError("horizon must be nonnegative")
        if horizon <= self.horizon:
            return FirTransferMatrix(self._taps[: horizon + 1])
        pad = np.zeros((horizon - self.horizon,) + self.shape)
        return FirTransferMatrix(np.concatenate([self._taps, pad]))

    def evaluate(self, omega: float) -> np.ndarray:
        """Frequency response sum_k X(k) exp(-i omega k)."""
        phase = np.exp(-1j * omega * np.arange(self.horizon + 1))
        return np.tensordot(phase, self._taps, axes=1)

    def _aligned(self, other: "FirTransferMatrix"):
        if not isinstance(other, FirTransferMatrix):
            return NotImplemented
        if other.shape != self.shape:
            raise DimensionError(f"shapes differ: {self.shape} vs {other.shape}")
        h = max(self.horizon, other.horizon)
        return self.truncate(h).taps, other.truncate(h).taps

    def __add__(self, other):
        pair = self._aligned(other)
        if pair is NotImplemented:
            return pair
        return FirTransferMatrix(pair[0] + pair[1])

    def __sub__(self, other):
        pair = self._aligned(other)
        if pair is NotImplemented:
            return pair
        return FirTransferMatrix(pair[0] - pair[1])

    def __neg__(self):
        return FirTransferMatrix(-self._taps)

    def __mul__(self, scalar):
        if isinstance(scalar, FirTransferMatrix):
            return NotImplemented
        return FirTransferMatrix(float(scalar) * self._taps)

    __rmul__ = __mul__

    def __repr__(self):
        return f"FirTransferMatrix(horizon={self.horizon}, shape={self.shape})"

    @classmethod
    def from_dict(cls, data) -> "FirTransferMatrix":
        if not isinstance(data, dict) or "taps" not in data:
            raise SchemaError("FIR system needs a 'taps' array")
        try:
            taps = np.array(data["taps"], dtype=float)
        except (TypeError, ValueError):
            raise SchemaError("FIR taps must be equally shaped numeric matrices")
        if taps.ndim != 3:
            raise SchemaError("FIR taps must be a list of matrices of one shape")
        if "horizon" in data and int(data["horizon"]) != taps.shape[0] - 1:
            raise SchemaError(
                f"horizon {data['horizon']} does not match {taps.shape[0]} taps"
            )
        return cls(taps)

    def to_dict(self):
        return {"horizon": self.horizon, "taps": self._taps.tolist()}


def convolve_taps(a: np.ndarray, b: np.ndarray, horizon: int) -> np.ndarray:
    """Tap convolution with broadcasting over leading axes.

    ``a`` is (..., Na, p, q) and ``b`` is (..., Nb, q, r); returns
    (..., horizon + 1, p, r).
    """
    na, nb = a.shape[-3], b.shape[-3]
    lead = np.broadcast_shapes(a.shape[:-3], b.shape[:-3])
    out = np.zeros(lead + (horizon + 1, a.shape[-2], b.shape[-1]))
    for j in range(min(na - 1, horizon) + 1):
        kmax = min(horizon, j + nb - 1)
        out[..., j : kmax + 1, :, :] += a[..., j : j + 1, :, :] @ b[..., : kmax - j + 1, :, :]
    return out


def fir_mul(
    A: FirTransferMatrix, B: FirTransferMatrix, out_horizon: Optional[int] = None
) -> FirTransferMatrix:
    """(AB)(k) = sum_{j<=k} A(j) B(k - j) for k <= out_horizon.

    Without ``out_horizon`` the full product (horizon A.horizon + B.horizon)
    is returned.
    """
    if A.shape[1] != B.shape[0]:
        raise DimensionError(
            f"cannot multiply FIR systems {A.shape} and {B.shape}: inner dimensions differ"
        )
    if out_horizon is None:
        out_horizon = A.horizon + B.horizon
    return FirTransferMatrix(convolve_taps(A.taps, B.taps, int(out_horizon)))


def spectral_radius(M: np.ndarray) -> float:
    if M.size == 0:
        return 0.0
    return float(np.max(np.abs(np.linalg.eigvals(M))))


def fir_causal_inverse(
    X: FirTransferMatrix, out_horizon: Optional[int] = None
) -> FirTransferMatrix:
    """Causal inverse Y of I - X on the horizon.

    (I - X(0)) Y(0) = I and (I - X(0)) Y(k) = sum_{j=1..k} X(j) Y(k - j).
    """
    rows, cols = X.shape
    if rows != cols:
        raise DimensionError(f"I - X needs square X, got {X.shape}")
    if out_horizon is None:
        out_horizon = X.horizon
    lead = np.eye(rows) - X.tap(0)
    cond = condition_ratio(lead)
    if cond < DEFAULT_COND_TOL:
        raise InertnessError(
            f"I - X(0) is singular (condition ratio {cond:.3e})",
            radius=spectral_radius(X.tap(0)),
        )
    lu = linalg.lu_factor(lead)
    taps = X.taps
    Y = np.zeros((out_horizon + 1, rows, rows))
    Y[0] = linalg.lu_solve(lu, np.eye(rows))
    for k in range(1, out_horizon + 1):
        top = min(k, X.horizon)
        if top < 1:
            break
        # sum_{j=1..top} X(j) Y(k-j)
        acc = np.einsum("jab,jbc->ac", taps[1 : top + 1], Y[k - 1 :: -1][:top])
        Y[k] = linalg.lu_solve(lu, acc)
    return FirTransferMatrix(Y)


def fir_hmap(
    G: FirTransferMatrix,
    K: FirTransferMatrix,
    out_horizon: Optional[int] = None,
    margin: float = DEFAULT_INERTNESS_MARGIN,
) -> FirTransferMatrix:
    """h_G(K) = -K (I - GK)^{-1} on the horizon.

    Requires the spectral radius of (GK)(0) = G(0) K(0) below 1 - margin.
    """
    if G.shape != (K.shape[1], K.shape[0]):
        raise DimensionError(
            f"G is {G.shape} and K is {K.shape}; expected G n_y x n_u and K n_u x n_y"
        )
    if out_horizon is None:
        out_horizon = max(G.horizon, K.horizon)
    gk = fir_mul(G, K, out_horizon)
    radius = spectral_radius(gk.tap(0))
    if radius >= 1.0 - margin:
        raise InertnessError(
            f"spectral radius of (GK)(0) is {radius:.6g}, not below 1", radius=radius
        )
    return -fir_mul(K, fir_causal_inverse(gk, out_horizon), out_horizon)


def fir_h2_norm(X: FirTransferMatrix) -> float:
    """sqrt(sum_k ||X(k)||_F^2)"""
    return float(np.sqrt(np.sum(X.taps**2)))


class FirSubspace:
    """Span of FIR basis elements sharing one shape and horizon.

    Elements are brought to the common horizon (zero-padded or cut) and a
    Frobenius-orthonormal basis of the stacked taps is kept for projection.
    """

    def __init__(
        self,
        elements: Iterable[FirTransferMatrix],
        horizon: Optional[int] = None,
        shape=None,
    ):
        elements = list(elements)
        if horizon is None:
            if not elements:
                raise DimensionError("an empty FIR subspace needs an explicit horizon")
            horizon = max(e.horizon for e in elements)
        if shape is None:
            if not elements:
                raise DimensionError("an empty FIR subspace needs an explicit shape")
            shape = elements[0].shape
        self.shape = tuple(int(v) for v in shape)
        self.horizon = int(horizon)
        for e in elements:
            if e.shape != self.shape:
                raise DimensionError(
                    f"FIR basis elements must all be {self.shape}, got {e.shape}"
                )
        self.elements = tuple(e.truncate(self.horizon) for e in elements)
        self._tap_shape = (self.horizon + 1,) + self.shape
        raw = (
            np.array([e.taps.ravel() for e in self.elements])
            if self.elements
            else np.zeros((0, int(np.prod(self._tap_shape))))
        )
        q, _ = orthonormalize(raw)
        self._flat = q
        self._ortho_taps = q.reshape((q.shape[0],) + self._tap_shape)

    def __len__(self):
        return len(self.elements)

    @property
    def dimension(self) -> int:
        return self._flat.shape[0]

    @property
    def orthonormal(self):
        return tuple(FirTransferMatrix(t) for t in self._ortho_taps)

    @property
    def orthonormal_taps(self) -> np.ndarray:
        return self._ortho_taps

    def combine(self, coefficients: Sequence[float]) -> FirTransferMatrix:
        c = np.asarray(coefficients, dtype=float)
        if c.shape != (len(self.elements),):
            raise DimensionError(
                f"expected {len(self.elements)} coefficients, got shape {c.shape}"
            )
        if not self.elements:
            return FirTransferMatrix.zeros(self.shape, self.horizon)
        stack = np.array([e.taps for e in self.elements])
        return FirTransferMatrix(np.tensordot(c, stack, axes=1))

    def project(self, X: FirTransferMatrix):
        """Projection of X (truncated to the subspace horizon) and its residual."""
        if X.shape != self.shape:
            raise DimensionError(f"X is {X.shape}, subspace elements are {self.shape}")
        x = X.truncate(self.horizon).taps.ravel()
        proj = self._flat.T @ (self._flat @ x) if self.dimension else np.zeros_like(x)
        return (
            FirTransferMatrix(proj.reshape(self._tap_shape)),
            float(np.linalg.norm(x - proj)),
        )

    def normalized_residual(self, X: FirTransferMatrix) -> float:
        _, r = self.project(X)
        return r / (1.0 + fir_h2_norm(X.truncate(self.horizon)))

    def _residuals(self, flat_rows: np.ndarray) -> np.ndarray:
        if self.dimension == 0:
            return np.linalg.norm(flat_rows, axis=1)
        proj = (flat_rows @ self._flat.T) @ self._flat
        return np.linalg.norm(flat_rows - proj, axis=1)

    @classmethod
    def from_pattern(cls, pattern, horizon: int, delays=None) -> "FirSubspace":
        """Sparsity (and optional delay) structure as an FIR subspace.

        Entry (i, j) may be nonzero at lags ``delays[i][j]`` through
        ``horizon`` (all lags when ``delays`` is None).
        """
        entries = pattern.entries
        if delays is not None:
            delays = np.asarray(delays, dtype=int)
            if delays.shape != entries.shape:
                raise DimensionError(
                    f"delays {delays.shape} must match the pattern {entries.shape}"
                )
            if np.any(delays < 0):
                raise ValueError("delays must be nonnegative")
        elements = []
        for i, j in np.argwhere(entries):
            start = 0 if delays is None else int(delays[i, j])
            for lag in range(start, horizon + 1):
                unit = np.zeros(entries.shape)
                unit[i, j] = 1.0
                elements.append(FirTransferMatrix.delay(unit, lag, horizon))
        logger.debug(
            "FIR subspace from pattern %s: %d elements at horizon %d",
            entries.shape,
            len(elements),
            horizon,
        )
        return cls(elements, horizon=horizon, shape=entries.shape)

    @classmethod
    def from_static_basis(cls, basis, horizon: int) -> "FirSubspace":
        """FIR systems with every tap in the static subspace ``basis``."""
        elements = [
            FirTransferMatrix.delay(e, lag, horizon)
            for e in basis.orthonormal
            for lag in range(horizon + 1)
        ]
        return cls(elements, horizon=horizon, shape=basis.shape)

    def to_dict(self):
        return {
            "horizon": self.horizon,
            "shape": list(self.shape),
            "basis": [e.to_dict() for e in self.elements],
        }


def inertness_check(
    G: FirTransferMatrix,
    S: FirSubspace,
    samples: int = DEFAULT_INERTNESS_SAMPLES,
    margin: float = DEFAULT_INERTNESS_MARGIN,
    seed: int = 0,
) -> InertnessReport:
    """Spectral radius of (GK)(0) over the basis and random unit combinations.

    The level is ``structural`` when G(0) B(0) vanishes for every basis
    element, which covers all of S. Otherwise only the sampled controllers
    are certified.
    """
    if G.shape != (S.shape[1], S.shape[0]):
        raise DimensionError(
            f"G is {G.shape}; expected {S.shape[1]} x {S.shape[0]} for this subspace"
        )
    g0 = G.tap(0)
    notes = []
    lead = [g0 @ e.tap(0) for e in S.elements]
    scale = max(1.0, float(np.abs(g0).max(initial=0.0)))
    if all(np.max(np.abs(m), initial=0.0) <= 1e-15 * scale for m in lead):
        logger.debug("inertness certified structurally (G(0)B(0) = 0 for all B)")
        return InertnessReport(
            inert=True,
            level=INERT_STRUCTURAL,
            max_radius=0.0,
            margin=margin,
            basis_radii=[0.0] * len(lead),
            notes=["G(0)B(0) = 0 for every basis element; holds on all of S"],
        )

    basis_radii = [spectral_radius(m) for m in lead]
    offending = None
    max_radius = 0.0
    for idx, r in enumerate(basis_radii):
        if r > max_radius:
            max_radius = r
        if r >= 1.0 - margin and offending is None:
            offending = {"element": idx, "radius": r}

    rng = np.random.default_rng(seed)
    if lead and samples > 0:
        stack = np.array(lead)
        coeffs = rng.standard_normal((samples, len(lead)))
        coeffs /= np.linalg.norm(coeffs, axis=1, keepdims=True)
        combos = np.tensordot(coeffs, stack, axes=1)
        radii = np.max(np.abs(np.linalg.eigvals(combos)), axis=1)
        for n, r in enumerate(radii):
            r = float(r)
            if r > max_radius:
                max_radius = r
            if r >= 1.0 - margin and offending is None:
                offending = {"sample": n, "radius": r, "coefficients": coeffs[n]}

    inert = offending is None
    notes.append(
        "radius scales linearly with K; scaled members of S may still violate"
    )
    level = INERT_SAMPLED if inert else INERT_VIOLATED
    logger.debug("inertness %s, max radius %.3e", level, max_radius)
    return InertnessReport(
        inert=inert,
        level=level,
        max_radius=max_radius,
        margin=margin,
        basis_radii=basis_radii,
        sampled_count=int(samples) if lead else 0,
        offending=offending,
        notes=notes,
    )


def fir_subspace_qi_check(
    S: FirSubspace, G: FirTransferMatrix, tol: float = DEFAULT_QI_TOL
) -> QiReport:
    """QI test over an FIR subspace at the subspace horizon.

    Products B_i G B_j + B_j G B_i are formed to the horizon in blocks of
    one row of the pair table at a time and projected tap-wise onto S.
    """
    report = inertness_check(G, S)
    if not report.inert:
        raise InertnessError(
            "subspace is not inert with respect to G", radius=report.max_radius
        )
    N = S.horizon
    E = S.orthonormal_taps
    m = E.shape[0]
    notes = [f"inertness: {report.level}"]
    if m == 0:
        return QiReport(qi=True, method="fir", tol=tol, notes=notes)

    BG = convolve_taps(E, G.taps[None], N)
    worst = {"diag": (0.0, None), "cross": (0.0, None)}
    for i in range(m):
        row = convolve_taps(BG[i][None], E[i:], N)
        col = convolve_taps(BG[i:], E[i][None], N)
        sym = row + col
        sym[0] = row[0]
        flat = sym.reshape(sym.shape[0], -1)
        res = S._residuals(flat)
        bound = tol * (1.0 + np.linalg.norm(flat, axis=1))
        bad = np.flatnonzero(res > bound)
        for b in bad:
            j = i + int(b)
            key = "diag" if j == i else "cross"
            if res[b] > worst[key][0]:
                worst[key] = (float(res[b]), (i, j))

    pick = worst["diag"][1] or worst["cross"][1]
    if pick is None:
        logger.debug("FIR subspace QI holds (dim %d, horizon %d)", m, N)
        return QiReport(qi=True, method="fir", tol=tol, notes=notes)

    i, j = pick
    K = FirTransferMatrix(E[i] if i == j else E[i] + E[j])
    kgk = fir_mul(fir_mul(K, G, N), K, N)
    _, r = S.project(kgk)
    residual = r / max(fir_h2_norm(kgk), np.finfo(float).tiny)
    logger.debug("FIR QI fails at basis pair (%d, %d), residual %.3e", i, j, residual)
    return QiReport(
        qi=False,
        witness_controller=K,
        witness_residual=residual,
        witness_indices=(i, j),
        method="fir",
        tol=tol,
        notes=notes,
    )
