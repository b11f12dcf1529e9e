"""H2 model matching over the Youla-type parameter Q = h_G(K).

When S is quadratically invariant under G, h_G maps S onto itself, so the
closed-loop set is {P11 - P12 Q P21 : Q in S}, affine in Q. Minimizing the
truncated H2 norm over Q is then a linear least-squares problem in the
coordinates of Q; the controller is recovered as K = h_G(Q).
"""

import logging
from dataclasses import dataclass
from typing import Callable, Iterable, List, Optional, Union

import numpy as np
from scipy import linalg

from constants import (
    DEFAULT_FREQ_COUNT,
    DEFAULT_QI_TOL,
    DEFAULT_RANK_TOL,
    MSG_SYNTH_REFUSED,
)
from lib.errors import DimensionError, InertnessError, QiViolationError, SchemaError
from lib.fir_core import (
    FirSubspace,
    FirTransferMatrix,
    convolve_taps,
    fir_causal_inverse,
    fir_h2_norm,
    fir_hmap,
    fir_mul,
    fir_subspace_qi_check,
    spectral_radius,
)
from lib.reports import AssumptionReport, SynthesisResult
from lib.static_core import (
    StaticPlant,
    SubspaceBasis,
    hmap,
    normalized_residual,
    subspace_qi_check,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class FirPlant:
    """Generalized plant with FIR blocks; G is the P22 block."""

    P11: FirTransferMatrix
    P12: FirTransferMatrix
    P21: FirTransferMatrix
    G: FirTransferMatrix

    def __post_init__(self):
        for name in ("P11", "P12", "P21", "G"):
            block = getattr(self, name)
            if not isinstance(block, FirTransferMatrix):
                object.__setattr__(self, name, FirTransferMatrix(block))
        n_z, n_w = self.P11.shape
        if self.P12.shape[0] != n_z:
            raise DimensionError("P12 must have as many rows as P11")
        if self.P21.shape[1] != n_w:
            raise DimensionError("P21 must have as many columns as P11")
        n_u, n_y = self.P12.shape[1], self.P21.shape[0]
        if self.G.shape != (n_y, n_u):
            raise DimensionError(
                f"G must be {n_y} x {n_u} to match P21 rows and P12 columns, "
                f"got {self.G.shape}"
            )

    @property
    def controller_shape(self):
        return (self.P12.shape[1], self.P21.shape[0])

    @property
    def horizon(self) -> int:
        return max(b.horizon for b in (self.P11, self.P12, self.P21, self.G))

    @classmethod
    def from_static(cls, P: StaticPlant, horizon: int = 0) -> "FirPlant":
        return cls(
            FirTransferMatrix.from_static(P.P11, horizon),
            FirTransferMatrix.from_static(P.P12, horizon),
            FirTransferMatrix.from_static(P.P21, horizon),
            FirTransferMatrix.from_static(P.G, horizon),
        )

    @classmethod
    def from_dict(cls, data) -> "FirPlant":
        missing = [k for k in ("P11", "P12", "P21", "G") if k not in data]
        if missing:
            raise SchemaError(f"plant document missing blocks: {', '.join(missing)}")
        blocks = []
        for name in ("P11", "P12", "P21", "G"):
            raw = data[name]
            if isinstance(raw, dict):
                blocks.append(FirTransferMatrix.from_dict(raw))
            else:
                blocks.append(FirTransferMatrix.from_static(raw))
        return cls(*blocks)

    def to_dict(self):
        return {
            "P11": self.P11.to_dict(),
            "P12": self.P12.to_dict(),
            "P21": self.P21.to_dict(),
            "G": self.G.to_dict(),
        }


def _rank_ratio(M: np.ndarray, full: str) -> float:
    """sigma_min / sigma_max, or 0 when the shape rules out full rank."""
    rows, cols = M.shape
    if full == "column" and rows < cols:
        return 0.0
    if full == "row" and cols < rows:
        return 0.0
    s = np.linalg.svd(M, compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0.0
    return float(s[-1] / s[0])


def rank_checks(
    P: Union[StaticPlant, FirPlant],
    freq_count: int = DEFAULT_FREQ_COUNT,
    tol: float = DEFAULT_RANK_TOL,
) -> AssumptionReport:
    """Left invertibility of P12 and right invertibility of P21.

    Static plants use the singular values of the matrices. FIR plants are
    evaluated at ``freq_count`` frequencies on [0, pi]; the lag-0 taps give
    the D12/D21 verdicts.
    """
    if isinstance(P, StaticPlant):
        r12 = _rank_ratio(P.P12, "column")
        r21 = _rank_ratio(P.P21, "row")
        left, right = r12 >= tol, r21 >= tol
        report = AssumptionReport(
            p12_left_invertible=left,
            p21_right_invertible=right,
            d12_full_column_rank=left,
            d21_full_row_rank=right,
            p12_min_singular=r12,
            p21_min_singular=r21,
            tol=tol,
            frequency_samples={},
        )
    else:
        omegas = np.linspace(0.0, np.pi, int(freq_count))
        table12 = [(float(w), _rank_ratio(P.P12.evaluate(w), "column")) for w in omegas]
        table21 = [(float(w), _rank_ratio(P.P21.evaluate(w), "row")) for w in omegas]
        r12 = min(v for _, v in table12)
        r21 = min(v for _, v in table21)
        report = AssumptionReport(
            p12_left_invertible=r12 >= tol,
            p21_right_invertible=r21 >= tol,
            d12_full_column_rank=_rank_ratio(P.P12.tap(0), "column") >= tol,
            d21_full_row_rank=_rank_ratio(P.P21.tap(0), "row") >= tol,
            p12_min_singular=r12,
            p21_min_singular=r21,
            tol=tol,
            frequency_samples={"P12": table12, "P21": table21},
        )
    logger.info(
        "rank checks: P12 left-invertible=%s (min ratio %.3e), "
        "P21 right-invertible=%s (min ratio %.3e)",
        report.p12_left_invertible,
        report.p12_min_singular,
        report.p21_right_invertible,
        report.p21_min_singular,
    )
    return report


@dataclass
class ModelMatchingProblem:
    """min_a ||y - A a|| with y = vec(P11) and column m = vec(P12 B_m P21)."""

    A: np.ndarray
    y: np.ndarray
    horizon: int
    tap_shape: tuple

    def objective(self, coefficients) -> np.ndarray:
        """H2 objective for one coefficient vector or a stack of them (rows)."""
        a = np.asarray(coefficients, dtype=float)
        if a.ndim == 1:
            return float(np.linalg.norm(self.y - self.A @ a))
        return np.linalg.norm(self.y[None, :] - a @ self.A.T, axis=1)


def _as_fir_problem(P, S):
    if isinstance(P, StaticPlant):
        P = FirPlant.from_static(P)
    if isinstance(S, SubspaceBasis):
        S = FirSubspace.from_static_basis(S, 0)
    return P, S


def assemble_model_matching(
    P: FirPlant, S: FirSubspace, horizon: Optional[int] = None
) -> ModelMatchingProblem:
    if S.shape != P.controller_shape:
        raise DimensionError(
            f"subspace elements are {S.shape}, plant needs {P.controller_shape}"
        )
    if horizon is None:
        horizon = S.horizon
    n_z, n_w = P.P11.shape
    y = P.P11.truncate(horizon).taps.ravel()
    if not S.elements:
        return ModelMatchingProblem(
            np.zeros((y.size, 0)), y, horizon, (horizon + 1, n_z, n_w)
        )
    E = np.array([e.taps for e in S.elements])
    left = convolve_taps(P.P12.taps[None], E, horizon)
    cols = convolve_taps(left, P.P21.taps[None], horizon)
    A = cols.reshape(cols.shape[0], -1).T
    return ModelMatchingProblem(A, y, horizon, (horizon + 1, n_z, n_w))


def recover_controller(
    G: FirTransferMatrix, Q: FirTransferMatrix, horizon: Optional[int] = None
) -> FirTransferMatrix:
    """K = h_G(Q); the involution makes h_G(K) = Q again."""
    return fir_hmap(G, Q, horizon)


def fir_closed_loop(
    P: FirPlant, K: FirTransferMatrix, horizon: Optional[int] = None
) -> FirTransferMatrix:
    """P11 + P12 K (I - GK)^{-1} P21 on the horizon."""
    if K.shape != P.controller_shape:
        raise DimensionError(
            f"controller must be {P.controller_shape} for this plant, got {K.shape}"
        )
    if horizon is None:
        horizon = max(P.horizon, K.horizon)
    gk = fir_mul(P.G, K, horizon)
    radius = spectral_radius(gk.tap(0))
    if radius >= 1.0:
        raise InertnessError(
            f"spectral radius of (GK)(0) is {radius:.6g}, not below 1", radius=radius
        )
    inner = fir_mul(K, fir_causal_inverse(gk, horizon), horizon)
    return P.P11.truncate(horizon) + fir_mul(
        fir_mul(P.P12, inner, horizon), P.P21, horizon
    )


def pull_back_closed_loop(P: StaticPlant, X) -> np.ndarray:
    """P12^+ (P11 - X) P21^+.

    Recovers h_G(K) from the closed loop X = P11 - P12 h_G(K) P21 exactly
    when P12 is left-invertible and P21 right-invertible; otherwise it is
    the least-squares preimage.
    """
    X = np.asarray(X, dtype=float)
    if X.shape != P.P11.shape:
        raise DimensionError(f"closed loop must be {P.P11.shape}, got {X.shape}")
    return np.linalg.pinv(P.P12) @ (P.P11 - X) @ np.linalg.pinv(P.P21)


def h2_model_match(
    P: Union[FirPlant, StaticPlant],
    S: Union[FirSubspace, SubspaceBasis],
    horizon: Optional[int] = None,
    tol: float = DEFAULT_QI_TOL,
) -> SynthesisResult:
    """Minimize ||P11 - P12 Q P21||_H2 over Q in S on the horizon.

    Refuses with QiViolationError (carrying the QiReport) unless S is QI
    under G. Rank-deficient systems return the minimum-norm coefficients.
    """
    static = isinstance(P, StaticPlant)
    if static:
        if not isinstance(S, SubspaceBasis):
            raise DimensionError("a static plant needs a static SubspaceBasis")
        if S.shape != P.controller_shape:
            raise DimensionError(
                f"subspace elements are {S.shape}, plant needs {P.controller_shape}"
            )
        static_basis, static_G = S, P.G
        qi = subspace_qi_check(S, P.G, tol)
        horizon = 0
    P, S = _as_fir_problem(P, S)
    if S.shape != P.controller_shape:
        raise DimensionError(
            f"subspace elements are {S.shape}, plant needs {P.controller_shape}"
        )
    if not static:
        qi = fir_subspace_qi_check(S, P.G, tol)
    if not qi.qi:
        raise QiViolationError(MSG_SYNTH_REFUSED, report=qi)

    problem = assemble_model_matching(P, S, horizon)
    A, y = problem.A, problem.y
    if A.shape[1] == 0:
        coef, rank, top = np.zeros(0), 0, 0.0
    else:
        coef, _, rank, sv = linalg.lstsq(A, y, lapack_driver="gelsd")
        top = float(sv[0]) if sv.size else 0.0
    resid = y - A @ coef
    objective = float(np.linalg.norm(resid))
    gradient = float(np.linalg.norm(A.T @ resid)) if A.size else 0.0
    denom = top * (top * float(np.linalg.norm(coef)) + float(np.linalg.norm(y)))
    normal_residual = gradient / (denom + np.finfo(float).tiny)

    Q = S.combine(coef)
    if static:
        Q = Q.tap(0)
        q_residual = normalized_residual(static_basis, Q)
        K = hmap(static_G, Q)
        k_residual = normalized_residual(static_basis, K)
    else:
        q_residual = S.normalized_residual(Q)
        K = recover_controller(P.G, Q, max(problem.horizon, S.horizon))
        k_residual = S.normalized_residual(K)
    logger.info(
        "model matching: objective %.6g, rank %d of %d, horizon %d",
        objective,
        int(rank),
        A.shape[1],
        problem.horizon,
    )
    return SynthesisResult(
        q_opt=Q,
        objective=objective,
        controller=K,
        q_membership_residual=q_residual,
        controller_membership_residual=k_residual,
        normal_equation_residual=normal_residual,
        coefficients=coef,
        horizon=problem.horizon,
        rank=int(rank),
        qi_report=qi,
    )


def horizon_sweep(
    P: FirPlant,
    S: Union[FirSubspace, Callable[[int], FirSubspace]],
    horizons: Iterable[int],
    tol: float = DEFAULT_QI_TOL,
) -> List[dict]:
    """Objective against horizon.

    ``S`` is either a fixed subspace (only the objective horizon grows) or a
    callable building the subspace for each horizon.
    """
    rows = []
    for h in horizons:
        sub = S(h) if callable(S) else S
        result = h2_model_match(P, sub, h, tol)
        rows.append(
            {"horizon": int(h), "objective": result.objective, "rank": result.rank}
        )
        logger.debug("horizon %d: objective %.6g", h, result.objective)
    return rows


def q_objective_norm(P: FirPlant, Q: FirTransferMatrix, horizon: int) -> float:
    """||P11 - P12 Q P21||_H2 on the horizon for an arbitrary Q."""
    X = P.P11.truncate(horizon) - fir_mul(fir_mul(P.P12, Q, horizon), P.P21, horizon)
    return fir_h2_norm(X)
