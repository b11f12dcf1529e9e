"""Embedded example plants and the reproduction runs built on them.

Examples "a" and "b" share G and the tied-diagonal subspace
S = {diag(t, t, s, s)} and differ in P12/P21: the closed-loop set is the
unit disc in "a" and a nonconvex region in "b". "affine" pairs a diagonal
subspace that is not QI with a lower-triangular reformulation that is, and
shows both give the same closed loops. "lqg" runs synthesis on a seeded
random FIR plant with full-rank feedthrough blocks.
"""

import logging
from typing import Optional

import numpy as np

from constants import (
    DEFAULT_SEED,
    EXAMPLE_AFFINE_COND_TOL,
    EXAMPLE_AFFINE_DRAWS,
    EXAMPLE_AFFINE_TRIPLES,
    EXAMPLE_CLOSED_FORM_TOL,
    EXAMPLE_GRID_POINTS,
    EXAMPLE_GRID_RANGE,
    EXAMPLE_IDS,
    EXAMPLE_POLAR_ANGLES,
    EXAMPLE_POLAR_MAX_RADIUS,
    EXAMPLE_POLAR_RADII,
    VERDICT_NONCONVEX,
    VERDICT_PASS,
)
from lib.errors import QiViolationError
from lib.fir_core import FirSubspace, FirTransferMatrix, fir_h2_norm, fir_mul
from lib.patterns import Pattern, pattern_qi_check
from lib.probe import (
    PointCloud,
    controllers_from_params,
    convexity_probe,
    probe_image,
    set_equality_probe,
    star_shape_probe,
)
from lib.reports import ExampleReport
from lib.static_core import (
    StaticPlant,
    SubspaceBasis,
    batch_closed_loop,
    batch_in_domain,
    closed_loop,
    subspace_qi_check,
)
from lib.synthesis import (
    FirPlant,
    fir_closed_loop,
    h2_model_match,
    horizon_sweep,
    rank_checks,
)

logger = logging.getLogger(__name__)

LQG_HORIZON = 8

_SHARED_G = np.array(
    [
        [0.0, 1.0, 0.0, 0.0],
        [-1.0, 0.0, 1.0, 0.0],
        [0.0, 0.0, 0.0, 1.0],
        [1.0, 0.0, -1.0, 0.0],
    ]
)


def tied_diagonal_basis() -> SubspaceBasis:
    """S = {diag(t, t, s, s)} with coordinates (t, s)."""
    return SubspaceBasis([np.diag([1.0, 1.0, 0.0, 0.0]), np.diag([0.0, 0.0, 1.0, 1.0])])


def disc_plant() -> StaticPlant:
    return StaticPlant(
        P11=np.zeros((2, 1)),
        P12=np.array([[0.0, 2.0, 0.0, 0.0], [0.0, 0.0, 0.0, -2.0]]),
        P21=np.array([[0.0], [1.0], [0.0], [-1.0]]),
        G=_SHARED_G,
    )


def nonconvex_plant() -> StaticPlant:
    return StaticPlant(
        P11=np.zeros((2, 1)),
        P12=np.array([[1.0, 0.0, 0.0, 0.0], [0.0, 0.0, -1.0, 0.0]]),
        P21=np.array([[0.0], [2.0], [0.0], [-1.0]]),
        G=_SHARED_G,
    )


def closed_form_disc(params: np.ndarray) -> np.ndarray:
    """[2t, 2s] / (1 + t^2 + s^2) for rows (t, s)."""
    t, s = params[:, 0], params[:, 1]
    d = 1.0 + t**2 + s**2
    return np.stack([2.0 * t / d, 2.0 * s / d], axis=1)


def closed_form_nonconvex(params: np.ndarray) -> np.ndarray:
    """[(s^2 + 2) t^2, s^2 (1 - t^2)] / (1 + t^2 + s^2) for rows (t, s)."""
    t, s = params[:, 0], params[:, 1]
    d = 1.0 + t**2 + s**2
    return np.stack([(s**2 + 2.0) * t**2 / d, s**2 * (1.0 - t**2) / d], axis=1)


def example_params(
    grid_points: int = EXAMPLE_GRID_POINTS,
    polar_radii: int = EXAMPLE_POLAR_RADII,
    polar_angles: int = EXAMPLE_POLAR_ANGLES,
) -> np.ndarray:
    """(t, s) grid on the example range plus a polar refinement around t^2 + s^2 = 1."""
    lo, hi = EXAMPLE_GRID_RANGE
    axis = np.linspace(lo, hi, grid_points)
    tt, ss = np.meshgrid(axis, axis, indexing="ij")
    grid = np.stack([tt.ravel(), ss.ravel()], axis=1)
    rho = np.linspace(0.0, EXAMPLE_POLAR_MAX_RADIUS, polar_radii)
    theta = np.linspace(0.0, 2.0 * np.pi, polar_angles, endpoint=False)
    rr, th = np.meshgrid(rho, theta, indexing="ij")
    polar = np.stack([(rr * np.cos(th)).ravel(), (rr * np.sin(th)).ravel()], axis=1)
    return np.concatenate([grid, polar])


def _closed_loop_cloud(P: StaticPlant, params: np.ndarray, example: str) -> PointCloud:
    samples = controllers_from_params(
        tied_diagonal_basis(), params, G=P.G, meta={"example": example}
    )
    return probe_image(P, samples)


def _add_common_checks(report: ExampleReport, P: StaticPlant) -> None:
    qi = subspace_qi_check(tied_diagonal_basis(), P.G)
    report.add("s_not_qi", not qi.qi, f"witness residual {qi.witness_residual:.3e}")
    ranks = rank_checks(P)
    report.add(
        "invertibility_gates",
        not ranks.p12_left_invertible and not ranks.p21_right_invertible,
        f"P12 left-invertible={ranks.p12_left_invertible}, "
        f"P21 right-invertible={ranks.p21_right_invertible}",
    )
    report.artifacts["qi_report"] = qi
    report.artifacts["rank_checks"] = ranks


def reproduce_disc(
    seed: int = DEFAULT_SEED, grid_points: int = EXAMPLE_GRID_POINTS
) -> ExampleReport:
    report = ExampleReport("a", seed=seed)
    P = disc_plant()
    cloud = _closed_loop_cloud(P, example_params(grid_points), "a")
    err = float(np.abs(cloud.points - closed_form_disc(cloud.params)).max())
    report.add("closed_form", err <= EXAMPLE_CLOSED_FORM_TOL, f"max abs error {err:.3e}")
    norms = np.linalg.norm(cloud.points, axis=1)
    report.add("norm_bound", norms.max() <= 1.0 + 1e-9, f"max norm {norms.max():.12f}")
    report.add(
        "boundary_reached", norms.max() >= 1.0 - 1e-6, f"max norm {norms.max():.12f}"
    )
    probe = convexity_probe(cloud, seed=seed)
    report.add("convexity_probe", probe.verdict == VERDICT_PASS, probe.verdict)
    star = star_shape_probe(cloud, seed=seed)
    report.add("star_shape_probe", star.verdict == VERDICT_PASS, star.verdict)
    _add_common_checks(report, P)
    report.artifacts["convexity"] = probe
    report.artifacts["star_shape"] = star
    report.clouds["a"] = cloud
    return report


def reproduce_nonconvex(
    seed: int = DEFAULT_SEED, grid_points: int = EXAMPLE_GRID_POINTS
) -> ExampleReport:
    report = ExampleReport("b", seed=seed)
    P = nonconvex_plant()
    cloud = _closed_loop_cloud(P, example_params(grid_points), "b")
    err = float(np.abs(cloud.points - closed_form_nonconvex(cloud.params)).max())
    report.add("closed_form", err <= EXAMPLE_CLOSED_FORM_TOL, f"max abs error {err:.3e}")
    probe_point = closed_loop(P, np.diag([0.0, 0.0, 1.0, 1.0])).ravel()
    report.add(
        "contains_known_point",
        np.allclose(probe_point, [0.0, 0.5]),
        "(t, s) = (0, 1) maps to (0, 0.5)",
    )
    probe = convexity_probe(cloud, seed=seed)
    found = probe.verdict == VERDICT_NONCONVEX
    detail = probe.verdict
    if found:
        gap = probe.witness["gap"]
        diameter = probe.tolerances["diameter"]
        found = gap >= 0.01 * diameter
        detail = f"gap {gap:.4f} vs diameter {diameter:.4f}"
    report.add("nonconvex_witness", found, detail)
    _add_common_checks(report, P)
    report.artifacts["convexity"] = probe
    report.clouds["b"] = cloud
    return report


def affine_plants(rng: np.random.Generator):
    """(P, S) with diagonal S and the reduced pair (P~, S~) from one random draw."""
    a, b1, b2, c1, c2, g1, g2, g3 = rng.standard_normal(8)
    P = StaticPlant(
        P11=[[a]],
        P12=[[b1, b2, b2]],
        P21=[[c1], [c1], [c2]],
        G=[[g1, 0.0, 0.0], [g1, 0.0, 0.0], [g2, g3, g3]],
    )
    S = SubspaceBasis([np.diag(v) for v in np.eye(3)])
    P_red = StaticPlant(
        P11=[[a]],
        P12=[[b1, b2]],
        P21=[[c1], [c2]],
        G=[[g1, 0.0], [g2, g3]],
    )
    units = []
    for i, j in ((0, 0), (1, 0), (1, 1)):
        e = np.zeros((2, 2))
        e[i, j] = 1.0
        units.append(e)
    S_red = SubspaceBasis(units)
    return P, S, P_red, S_red


def reproduce_affine(
    seed: int = DEFAULT_SEED,
    draws: int = EXAMPLE_AFFINE_DRAWS,
    triples: int = EXAMPLE_AFFINE_TRIPLES,
) -> ExampleReport:
    """C = C~ with matched k_i, S not QI under G and S~ QI under G~, per draw."""
    report = ExampleReport("affine", seed=seed)
    rng = np.random.default_rng(seed)
    not_qi = qi_red = 0
    worst = 0.0
    compared = 0
    for _ in range(draws):
        P, S, P_red, S_red = affine_plants(rng)
        not_qi += not subspace_qi_check(S, P.G).qi
        qi_red += subspace_qi_check(S_red, P_red.G).qi
        k = rng.standard_normal((triples, 3))
        K = np.tensordot(k, np.array(S.elements), axes=1)
        K_red = np.tensordot(k, np.array(S_red.elements), axes=1)
        keep = batch_in_domain(P.G, K, EXAMPLE_AFFINE_COND_TOL) & batch_in_domain(
            P_red.G, K_red, EXAMPLE_AFFINE_COND_TOL
        )
        cloud = PointCloud(batch_closed_loop(P, K[keep]).reshape(-1, 1), k[keep])
        cloud_red = PointCloud(
            batch_closed_loop(P_red, K_red[keep]).reshape(-1, 1), k[keep]
        )
        eq = set_equality_probe(cloud, cloud_red, EXAMPLE_CLOSED_FORM_TOL, matched=True)
        worst = max(worst, eq.max_entrywise or 0.0)
        compared += eq.count
    report.add("s_not_qi", not_qi == draws, f"{not_qi}/{draws} draws")
    report.add("reduced_s_qi", qi_red == draws, f"{qi_red}/{draws} draws")
    report.add(
        "closed_loops_equal",
        worst <= EXAMPLE_CLOSED_FORM_TOL,
        f"max entrywise |C - C~| {worst:.3e} over {compared} controllers",
    )
    report.artifacts["max_entrywise"] = worst
    return report


def random_lqg_plant(seed: int = DEFAULT_SEED, horizon: int = LQG_HORIZON) -> FirPlant:
    """Seeded FIR plant: n_z = n_w = 3, n_u = n_y = 2, lower-triangular strictly causal G."""
    rng = np.random.default_rng(seed)
    decay = 0.6 ** np.arange(horizon + 1)[:, None, None]
    P11 = rng.standard_normal((horizon + 1, 3, 3)) * decay
    P12 = rng.standard_normal((horizon + 1, 3, 2)) * decay
    P21 = rng.standard_normal((horizon + 1, 2, 3)) * decay
    G = rng.standard_normal((horizon + 1, 2, 2)) * decay
    G[0] = 0.0
    G[:, 0, 1] = 0.0
    # full-rank feedthrough blocks
    P12[0] = np.linalg.qr(rng.standard_normal((3, 2)))[0] * 2.0
    P21[0] = np.linalg.qr(rng.standard_normal((3, 2)))[0].T * 2.0
    return FirPlant(*(FirTransferMatrix(x) for x in (P11, P12, P21, G)))


def reproduce_lqg(
    seed: int = DEFAULT_SEED, horizon: Optional[int] = None
) -> ExampleReport:
    horizon = LQG_HORIZON if horizon is None else horizon
    report = ExampleReport("lqg", seed=seed)
    P = random_lqg_plant(seed, horizon)
    ranks = rank_checks(P)
    report.add(
        "invertibility_gates",
        ranks.p12_left_invertible
        and ranks.p21_right_invertible
        and ranks.d12_full_column_rank
        and ranks.d21_full_row_rank,
        f"min ratios P12 {ranks.p12_min_singular:.3e}, P21 {ranks.p21_min_singular:.3e}",
    )

    lower = Pattern([[1, 0], [1, 1]])
    g_pattern = Pattern.support(np.abs(P.G.taps).sum(axis=0))
    report.add("pattern_qi_lower", pattern_qi_check(lower, g_pattern).qi)
    S = FirSubspace.from_pattern(lower, horizon)
    result = h2_model_match(P, S, horizon)
    cl = fir_closed_loop(P, result.controller, horizon)
    affine = P.P11.truncate(horizon) - fir_mul(
        fir_mul(P.P12, result.q_opt, horizon), P.P21, horizon
    )
    consistency = fir_h2_norm(cl - affine)
    report.add(
        "synthesis_lower",
        result.q_membership_residual <= 1e-8
        and result.controller_membership_residual <= 1e-8
        and result.normal_equation_residual <= 1e-8
        and consistency <= 1e-8,
        f"objective {result.objective:.6g}, closed-loop mismatch {consistency:.3e}",
    )

    diagonal = Pattern.identity(2)
    refused = False
    try:
        h2_model_match(P, FirSubspace.from_pattern(diagonal, horizon), horizon)
    except QiViolationError as exc:
        refused = exc.report is not None and not exc.report.qi
    report.add("synthesis_refused_diagonal", refused)

    sweep = horizon_sweep(
        P,
        lambda h: FirSubspace.from_pattern(lower, h),
        sorted({max(horizon // 4, 0), max(horizon // 2, 0), horizon}),
    )
    report.artifacts.update(
        {"rank_checks": ranks, "synthesis": result, "horizon_sweep": sweep}
    )
    return report


def reproduce_example(
    example_id: str, seed: int = DEFAULT_SEED, horizon: Optional[int] = None
) -> ExampleReport:
    """Run one embedded example; never raises for a failing check."""
    if example_id not in EXAMPLE_IDS:
        raise ValueError(
            f"unknown example {example_id!r}; expected one of {', '.join(EXAMPLE_IDS)}"
        )
    logger.info("reproducing example %s (seed %d)", example_id, seed)
    if example_id == "a":
        report = reproduce_disc(seed)
    elif example_id == "b":
        report = reproduce_nonconvex(seed)
    elif example_id == "affine":
        report = reproduce_affine(seed)
    else:
        report = reproduce_lqg(seed, horizon)
    logger.info(
        "example %s: %d/%d checks passed",
        example_id,
        sum(c.passed for c in report.checks),
        len(report.checks),
    )
    return report
