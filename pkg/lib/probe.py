"""Sampling of controller subspaces and probes on the sampled image sets.

Every probe works on a PointCloud of flattened matrices. A negative verdict
carries a witness made of exact cloud members, so it can be re-checked from
the serialized report. Positive verdicts are sampling evidence only and are
reported together with the coverage radius (largest nearest-neighbour
spacing) of the cloud.
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Optional, Sequence

import numpy as np
from scipy.spatial import ConvexHull, QhullError, cKDTree
from scipy.spatial.distance import pdist

from constants import (
    DEFAULT_COND_TOL,
    DEFAULT_HOMOGENEITY_SCALES,
    DEFAULT_HULL_MARGIN_REL,
    DEFAULT_MAX_CANDIDATES,
    DEFAULT_MEMBERSHIP_COND_TOL,
    DEFAULT_MEMBERSHIP_PAIRS,
    DEFAULT_MEMBERSHIP_REJECT_TOL,
    DEFAULT_REJECT_REL_TOL,
    DEFAULT_SAMPLE_RANGE,
    DEFAULT_SEED,
    DEFAULT_STAR_ALPHAS,
    DEFAULT_STAR_MAX_POINTS,
    MAX_GRID_POINTS,
    VERDICT_INCONCLUSIVE,
    VERDICT_NONCONVEX,
    VERDICT_NOT_HOMOGENEOUS,
    VERDICT_NOT_STAR,
    VERDICT_PASS,
)
from lib.errors import DimensionError, ProbeError
from lib.reports import EqualityReport, ProbeReport
from lib.static_core import (
    StaticPlant,
    SubspaceBasis,
    batch_closed_loop,
    batch_hmap,
    batch_in_domain,
)

logger = logging.getLogger(__name__)

_PAIR_CHUNK = 65536


@dataclass
class PointCloud:
    """Sampled points (one row each) with the parameters that produced them."""

    points: np.ndarray
    params: np.ndarray
    meta: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        self.points = np.atleast_2d(np.asarray(self.points, dtype=float))
        params = np.asarray(self.params, dtype=float)
        if params.size == 0:
            params = np.zeros((self.points.shape[0], 0))
        elif params.ndim == 1:
            params = params.reshape(-1, 1)
        self.params = params
        if self.points.ndim != 2:
            raise DimensionError(f"points must be 2-D, got shape {self.points.shape}")
        if self.params.shape[0] != self.points.shape[0]:
            raise DimensionError(
                f"{self.points.shape[0]} points but {self.params.shape[0]} parameter rows"
            )

    def __len__(self):
        return self.points.shape[0]

    @property
    def dimension(self) -> int:
        return self.points.shape[1]


@dataclass
class SampleSet:
    """Controllers sampled from S together with their coordinates."""

    controllers: np.ndarray
    params: np.ndarray
    excluded: int = 0
    excluded_params: np.ndarray = None
    meta: Dict[str, Any] = field(default_factory=dict)

    def __len__(self):
        return self.controllers.shape[0]

    def __iter__(self):
        return iter(self.controllers)


def _normalize_ranges(ranges, dim: int):
    if ranges is None:
        ranges = [DEFAULT_SAMPLE_RANGE] * dim
    else:
        if not isinstance(ranges, (list, tuple)):
            raise ProbeError("sampling ranges must be a list of (lo, hi) pairs")
        ranges = list(ranges)
        if len(ranges) == 2 and np.isscalar(ranges[0]):
            ranges = [tuple(ranges)] * dim
    if dim and not ranges:
        raise ProbeError("sampling ranges are empty")
    if len(ranges) != dim:
        raise ProbeError(f"need {dim} ranges, got {len(ranges)}")
    out = []
    for item in ranges:
        try:
            lo, hi = (float(v) for v in item)
        except (TypeError, ValueError):
            raise ProbeError(f"sampling range {item!r} is not a (lo, hi) pair")
        if not np.isfinite(lo) or not np.isfinite(hi) or hi < lo:
            raise ProbeError(f"invalid sampling range [{lo}, {hi}]")
        out.append((lo, hi))
    return out


def controllers_from_params(
    basis: SubspaceBasis,
    params,
    G=None,
    cond_tol: float = DEFAULT_COND_TOL,
    meta: Optional[Dict[str, Any]] = None,
) -> SampleSet:
    """K = sum_m params[m] * basis.elements[m] for each row; drop K outside M if G is given."""
    m = len(basis.elements)
    params = np.asarray(params, dtype=float)
    if params.ndim < 2:
        params = params.reshape(-1, m) if m else np.zeros((1, 0))
    if basis.elements:
        Ks = np.tensordot(params, np.array(basis.elements), axes=1)
    else:
        Ks = np.zeros((params.shape[0],) + basis.shape)
    excluded = 0
    excluded_params = np.zeros((0, params.shape[1]))
    if G is not None:
        G = np.asarray(G, dtype=float)
        if G.ndim != 2 or G.shape != basis.shape[::-1]:
            raise DimensionError(
                f"G must be {basis.shape[1]} x {basis.shape[0]} for controllers of "
                f"shape {basis.shape}, got {G.shape}"
            )
    if G is not None and len(Ks):
        keep = batch_in_domain(G, Ks, cond_tol)
        excluded = int(np.count_nonzero(~keep))
        excluded_params = params[~keep]
        Ks, params = Ks[keep], params[keep]
        if excluded:
            logger.debug("excluded %d sampled controllers outside M", excluded)
    return SampleSet(Ks, params, excluded, excluded_params, dict(meta or {}))


def sample_subspace(
    basis: SubspaceBasis,
    scheme: str = "random",
    ranges=None,
    count: int = 100,
    seed: int = DEFAULT_SEED,
    G=None,
    cond_tol: float = DEFAULT_COND_TOL,
) -> SampleSet:
    """Deterministic samples of S in the coordinates of ``basis.elements``.

    ``grid`` places ``count`` points per coordinate (count**dim samples);
    ``random`` draws ``count`` uniform samples. ``ranges`` is one (lo, hi)
    pair for every coordinate or a list of pairs.
    """
    dim = len(basis.elements)
    meta = {"scheme": scheme, "count": int(count), "seed": int(seed)}
    if dim == 0:
        return controllers_from_params(basis, np.zeros((1, 0)), G, cond_tol, meta)
    ranges = _normalize_ranges(ranges, dim)
    meta["ranges"] = [list(r) for r in ranges]
    if count < 1:
        raise ProbeError("sample count must be positive")
    if scheme == "grid":
        if float(count) ** dim > MAX_GRID_POINTS:
            raise ProbeError(f"grid of {count}^{dim} points is too large")
        axes = [np.linspace(lo, hi, count) for lo, hi in ranges]
        mesh = np.meshgrid(*axes, indexing="ij")
        params = np.stack([m.ravel() for m in mesh], axis=1)
    elif scheme == "random":
        rng = np.random.default_rng(seed)
        lo = np.array([r[0] for r in ranges])
        hi = np.array([r[1] for r in ranges])
        params = rng.uniform(lo, hi, size=(count, dim))
    else:
        raise ProbeError(f"unknown sampling scheme {scheme!r}")
    logger.debug("sampled %d parameter vectors (%s, seed %d)", len(params), scheme, seed)
    return controllers_from_params(basis, params, G, cond_tol, meta)


def probe_image(P: StaticPlant, samples: SampleSet) -> PointCloud:
    """Cloud of flattened closed loops P11 - P12 h_G(K) P21."""
    if samples.controllers.shape[1:] != P.controller_shape:
        raise DimensionError(
            f"controllers are {samples.controllers.shape[1:]}, plant needs "
            f"{P.controller_shape}"
        )
    if len(samples) == 0:
        return PointCloud(np.zeros((0, P.P11.size)), samples.params, dict(samples.meta))
    X = batch_closed_loop(P, samples.controllers)
    return PointCloud(X.reshape(len(samples), -1), samples.params, dict(samples.meta))


def hmap_image(G, samples: SampleSet) -> PointCloud:
    """Cloud of flattened h_G(K)."""
    G = np.asarray(G, dtype=float)
    n = samples.controllers.shape[1] * samples.controllers.shape[2]
    if len(samples) == 0:
        return PointCloud(np.zeros((0, n)), samples.params, dict(samples.meta))
    H = batch_hmap(G, samples.controllers)
    return PointCloud(H.reshape(len(samples), -1), samples.params, dict(samples.meta))


def hmap_membership(
    basis: SubspaceBasis, G, cond_tol: float = DEFAULT_MEMBERSHIP_COND_TOL
) -> Callable[[np.ndarray], np.ndarray]:
    """Exact membership oracle for h_G(S ∩ M).

    Q lies in h_G(S ∩ M) iff Q is in M and h_G(Q) is in S. The oracle
    returns the normalized projection residual of h_G(Q) onto S for each
    row, and NaN for rows outside M.
    """
    G = np.asarray(G, dtype=float)
    q = basis.flat
    shape = basis.shape

    def membership(points: np.ndarray) -> np.ndarray:
        Qs = np.asarray(points, dtype=float).reshape((-1,) + shape)
        out = np.full(Qs.shape[0], np.nan)
        keep = batch_in_domain(G, Qs, cond_tol)
        if not keep.any():
            return out
        K = batch_hmap(G, Qs[keep]).reshape(int(keep.sum()), -1)
        proj = (K @ q.T) @ q if q.shape[0] else np.zeros_like(K)
        out[keep] = np.linalg.norm(K - proj, axis=1) / (1.0 + np.linalg.norm(K, axis=1))
        return out

    return membership


def closed_loop_membership(
    P: StaticPlant, basis: SubspaceBasis, cond_tol: float = DEFAULT_MEMBERSHIP_COND_TOL
) -> Callable[[np.ndarray], np.ndarray]:
    """Membership oracle for closed loops P11 - P12 Q P21 with Q in h_G(S ∩ M).

    Rows are pulled back through P12^+ and P21^+ and tested with
    ``hmap_membership``. Exact only when P12 is left-invertible and P21 is
    right-invertible.
    """
    left = np.linalg.pinv(P.P12)
    right = np.linalg.pinv(P.P21)
    inner = hmap_membership(basis, P.G, cond_tol)

    def membership(points: np.ndarray) -> np.ndarray:
        X = np.asarray(points, dtype=float).reshape((-1,) + P.P11.shape)
        Q = np.einsum("ab,nbc,cd->nad", left, P.P11[None, :, :] - X, right)
        return inner(Q.reshape(len(Q), -1))

    return membership


def _unique_points(points: np.ndarray):
    """Unique rows and the index of the first occurrence of each."""
    _, first = np.unique(points, axis=0, return_index=True)
    first = np.sort(first)
    return points[first], first


def _affine_frame(points: np.ndarray):
    center = points.mean(axis=0)
    centered = points - center
    if len(points) < 2:
        return center, np.zeros((0, points.shape[1]))
    _, s, vt = np.linalg.svd(centered, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return center, np.zeros((0, points.shape[1]))
    rank = int(np.count_nonzero(s > 1e-10 * s[0]))
    return center, vt[:rank]


class _Hull:
    """Convex hull of a cloud in the coordinates of its affine span (dim 1..3)."""

    def __init__(self, coords: np.ndarray):
        self.dim = coords.shape[1]
        self.equations = None
        self.bounds = None
        if self.dim == 1:
            lo, hi = int(np.argmin(coords[:, 0])), int(np.argmax(coords[:, 0]))
            self.vertices = np.array(sorted({lo, hi}))
            self.bounds = (coords[lo, 0], coords[hi, 0])
        else:
            hull = ConvexHull(coords)
            self.vertices = np.sort(hull.vertices)
            self.equations = hull.equations

    def inside(self, coords: np.ndarray, margin: float) -> np.ndarray:
        if self.dim == 1:
            lo, hi = self.bounds
            return (coords[:, 0] >= lo + margin) & (coords[:, 0] <= hi - margin)
        normals, offsets = self.equations[:, :-1], self.equations[:, -1]
        return np.all(coords @ normals.T + offsets <= -margin, axis=1)


def _cloud_geometry(points: np.ndarray):
    """Affine frame, hull (or None) and diameter of a unique-point cloud."""
    center, frame = _affine_frame(points)
    coords = (points - center) @ frame.T
    hull = None
    if 1 <= frame.shape[0] <= 3:
        try:
            hull = _Hull(coords)
        except (QhullError, ValueError):
            logger.debug("hull construction failed; probing without hull filter", exc_info=True)
    if hull is not None:
        extreme = points[hull.vertices]
    else:
        extreme = points
    if len(extreme) > 4000:
        # deterministic subsample; the diameter is then a lower bound
        step = int(np.ceil(len(extreme) / 4000))
        extreme = extreme[::step]
    diameter = float(pdist(extreme).max()) if len(extreme) > 1 else 0.0
    return center, frame, coords, hull, diameter


def _coverage_radius(tree: cKDTree, points: np.ndarray) -> float:
    if len(points) < 2:
        return 0.0
    d, _ = tree.query(points, k=2)
    return float(d[:, 1].max())


def _candidates(points, coords, hull, max_candidates, rng):
    """Hull vertices, one representative per voxel, then random members."""
    n = len(points)
    if n <= max_candidates:
        return np.arange(n)
    chosen = []
    if hull is not None:
        verts = hull.vertices
        if len(verts) > max_candidates // 2:
            verts = verts[np.linspace(0, len(verts) - 1, max_candidates // 2).astype(int)]
        chosen.extend(int(v) for v in verts)
    budget = max(max_candidates - len(chosen), 0)
    if budget and coords.shape[1]:
        grid_coords = coords[:, : min(coords.shape[1], 3)]
        per_axis = max(int(np.floor((budget / 2) ** (1.0 / grid_coords.shape[1]))), 1)
        lo = grid_coords.min(axis=0)
        span = np.maximum(grid_coords.max(axis=0) - lo, np.finfo(float).tiny)
        cells = np.minimum((grid_coords - lo) / span * per_axis, per_axis - 1).astype(int)
        _, reps = np.unique(cells, axis=0, return_index=True)
        chosen.extend(int(r) for r in np.sort(reps))
    chosen = list(dict.fromkeys(chosen))[:max_candidates]
    remaining = max_candidates - len(chosen)
    if remaining > 0:
        pool = np.setdiff1d(np.arange(n), np.array(chosen, dtype=int))
        pick = rng.choice(pool, size=min(remaining, len(pool)), replace=False)
        chosen.extend(int(p) for p in pick)
    return np.array(sorted(chosen), dtype=int)


def _pair_indices(count: int):
    return np.triu_indices(count, 1)


def convexity_probe(
    cloud: PointCloud,
    reject_tol: Optional[float] = None,
    rel_tol: float = DEFAULT_REJECT_REL_TOL,
    margin_rel: float = DEFAULT_HULL_MARGIN_REL,
    max_candidates: int = DEFAULT_MAX_CANDIDATES,
    membership: Optional[Callable[[np.ndarray], np.ndarray]] = None,
    membership_pairs: int = DEFAULT_MEMBERSHIP_PAIRS,
    seed: int = DEFAULT_SEED,
) -> ProbeReport:
    """Search for a pair of cloud members whose midpoint is far from the set.

    Without ``membership`` the gap of a midpoint is its distance to the
    nearest cloud point, and only midpoints inside the cloud's convex hull
    (by ``margin_rel`` times the diameter) count. With ``membership`` the
    gap is the oracle's residual for the midpoint; NaN results (outside the
    oracle's domain) are skipped.
    """
    if len(cloud) == 0:
        raise ProbeError("cannot probe an empty cloud")
    points, first = _unique_points(cloud.points)
    rng = np.random.default_rng(seed)
    tree = cKDTree(points)
    coverage = _coverage_radius(tree, points)
    if membership is not None:
        return _membership_convexity(
            cloud, points, first, coverage, membership, reject_tol, membership_pairs, rng
        )

    if len(points) == 1:
        return ProbeReport(
            kind="convexity",
            verdict=VERDICT_PASS,
            coverage_radius=0.0,
            tolerances={"reject_tol": reject_tol or 0.0, "hull_margin": 0.0},
            checked=0,
            notes=["single point"],
        )

    center, frame, coords, hull, diameter = _cloud_geometry(points)
    if reject_tol is None:
        reject_tol = rel_tol * diameter
    margin = margin_rel * diameter
    notes = [f"affine span dimension {frame.shape[0]}"]
    if hull is None:
        notes.append("no hull filter applied (span dimension above 3)")

    cand = _candidates(points, coords, hull, max_candidates, rng)
    ii, jj = _pair_indices(len(cand))
    best_gap, best = -1.0, None
    checked = 0
    for start in range(0, len(ii), _PAIR_CHUNK):
        a = cand[ii[start : start + _PAIR_CHUNK]]
        b = cand[jj[start : start + _PAIR_CHUNK]]
        mids = 0.5 * (points[a] + points[b])
        if hull is not None:
            inside = hull.inside((mids - center) @ frame.T, margin)
            a, b, mids = a[inside], b[inside], mids[inside]
        if len(mids) == 0:
            continue
        gaps, nearest = tree.query(mids)
        checked += len(mids)
        k = int(np.argmax(gaps))
        if gaps[k] > best_gap:
            best_gap, best = float(gaps[k]), (int(a[k]), int(b[k]), int(nearest[k]), mids[k])

    witness = None
    if best is not None and best_gap > reject_tol:
        a, b, nearest, mid = best
        witness = {
            "indices": [int(first[a]), int(first[b])],
            "a": points[a],
            "b": points[b],
            "midpoint": mid,
            "gap": best_gap,
            "nearest_index": int(first[nearest]),
        }
        verdict = VERDICT_NONCONVEX
    elif coverage > reject_tol:
        verdict = VERDICT_INCONCLUSIVE
        notes.append("coverage radius exceeds the reject tolerance; sample more densely")
    else:
        verdict = VERDICT_PASS
    logger.info(
        "convexity probe: %s (max gap %.4g, reject tol %.4g, coverage %.4g, %d midpoints)",
        verdict,
        max(best_gap, 0.0),
        reject_tol,
        coverage,
        checked,
    )
    return ProbeReport(
        kind="convexity",
        verdict=verdict,
        coverage_radius=coverage,
        tolerances={"reject_tol": reject_tol, "hull_margin": margin, "diameter": diameter},
        witness=witness,
        checked=checked,
        notes=notes,
    )


def _membership_convexity(cloud, points, first, coverage, membership, reject_tol, pairs, rng):
    if reject_tol is None:
        reject_tol = DEFAULT_MEMBERSHIP_REJECT_TOL
    n = len(points)
    notes = ["gap is the membership residual of the midpoint"]
    if n < 2:
        return ProbeReport(
            kind="convexity",
            verdict=VERDICT_PASS,
            coverage_radius=coverage,
            tolerances={"reject_tol": reject_tol},
            checked=0,
            notes=notes,
        )
    ii, jj = _pair_indices(n)
    if len(ii) > pairs:
        pick = np.sort(rng.choice(len(ii), size=pairs, replace=False))
        ii, jj = ii[pick], jj[pick]
    mids = 0.5 * (points[ii] + points[jj])
    gaps = np.asarray(membership(mids), dtype=float)
    valid = ~np.isnan(gaps)
    skipped = int(np.count_nonzero(~valid))
    if skipped:
        notes.append(f"{skipped} midpoints outside the oracle domain skipped")
    witness = None
    verdict = VERDICT_PASS
    if valid.any():
        masked = np.where(valid, gaps, -np.inf)
        k = int(np.argmax(masked))
        if gaps[k] > reject_tol:
            verdict = VERDICT_NONCONVEX
            witness = {
                "indices": [int(first[ii[k]]), int(first[jj[k]])],
                "a": points[ii[k]],
                "b": points[jj[k]],
                "midpoint": mids[k],
                "gap": float(gaps[k]),
            }
    logger.info("membership convexity probe: %s over %d pairs", verdict, int(valid.sum()))
    return ProbeReport(
        kind="convexity",
        verdict=verdict,
        coverage_radius=coverage,
        tolerances={"reject_tol": reject_tol},
        witness=witness,
        checked=int(valid.sum()),
        notes=notes,
    )


def _scaling_probe(cloud, scales, tol, max_points, seed, kind, fail_verdict, bounded):
    if len(cloud) == 0:
        raise ProbeError("cannot probe an empty cloud")
    points, first = _unique_points(cloud.points)
    tree = cKDTree(points)
    coverage = _coverage_radius(tree, points)
    if tol is None:
        _, _, _, _, diameter = _cloud_geometry(points)
        tol = DEFAULT_REJECT_REL_TOL * diameter
    rng = np.random.default_rng(seed)
    idx = np.arange(len(points))
    if len(idx) > max_points:
        idx = np.sort(rng.choice(idx, size=max_points, replace=False))
    radius = float(np.linalg.norm(points, axis=1).max())
    best_gap, best = -1.0, None
    checked = 0
    skipped = 0
    for alpha in scales:
        scaled = float(alpha) * points[idx]
        use = np.ones(len(idx), dtype=bool)
        if bounded:
            # scaled points past the sampled extent say nothing about the set
            use = np.linalg.norm(scaled, axis=1) <= radius
            skipped += int(np.count_nonzero(~use))
        if not use.any():
            continue
        gaps, _ = tree.query(scaled[use])
        checked += int(use.sum())
        k = int(np.argmax(gaps))
        if gaps[k] > best_gap:
            best_gap = float(gaps[k])
            best = (float(alpha), int(idx[use][k]), scaled[use][k])

    notes = []
    if skipped:
        notes.append(f"{skipped} scaled points beyond the sampled extent skipped")
    witness = None
    if best is not None and best_gap > tol:
        alpha, v, sv = best
        witness = {"index": int(first[v]), "point": points[v], "alpha": alpha,
                   "scaled": sv, "gap": best_gap}
        verdict = fail_verdict
    elif coverage > tol:
        verdict = VERDICT_INCONCLUSIVE
        notes.append("coverage radius exceeds the tolerance; sample more densely")
    else:
        verdict = VERDICT_PASS
    logger.info("%s probe: %s (max gap %.4g, tol %.4g)", kind, verdict, max(best_gap, 0.0), tol)
    return ProbeReport(
        kind=kind,
        verdict=verdict,
        coverage_radius=coverage,
        tolerances={"tol": tol},
        witness=witness,
        checked=checked,
        notes=notes,
    )


def star_shape_probe(
    cloud: PointCloud,
    alphas: Sequence[float] = DEFAULT_STAR_ALPHAS,
    tol: Optional[float] = None,
    max_points: int = DEFAULT_STAR_MAX_POINTS,
    seed: int = DEFAULT_SEED,
) -> ProbeReport:
    """Check that alpha * v stays in the cloud for alpha in [0, 1]."""
    for a in alphas:
        if not 0.0 <= float(a) <= 1.0:
            raise ProbeError(f"star-shape factors must lie in [0, 1], got {a}")
    return _scaling_probe(
        cloud, alphas, tol, max_points, seed, "star_shape", VERDICT_NOT_STAR, False
    )


def homogeneity_probe(
    cloud: PointCloud,
    scales: Sequence[float] = DEFAULT_HOMOGENEITY_SCALES,
    tol: Optional[float] = None,
    max_points: int = DEFAULT_STAR_MAX_POINTS,
    seed: int = DEFAULT_SEED,
) -> ProbeReport:
    """Check that alpha * v stays in the cloud for arbitrary real alpha.

    Scaled points beyond the sampled extent are skipped.
    """
    return _scaling_probe(
        cloud, scales, tol, max_points, seed, "homogeneity", VERDICT_NOT_HOMOGENEOUS, True
    )


def set_equality_probe(
    cloud_a: PointCloud,
    cloud_b: PointCloud,
    tol: float = 1e-9,
    matched: bool = False,
) -> EqualityReport:
    """Compare two clouds.

    Matched mode compares row i of A with row i of B (same parameters);
    otherwise the symmetric nearest-neighbour (discrete Hausdorff) distance
    is used.
    """
    if cloud_a.dimension != cloud_b.dimension:
        raise DimensionError(
            f"point dimensions differ: {cloud_a.dimension} vs {cloud_b.dimension}"
        )
    if matched:
        if len(cloud_a) != len(cloud_b):
            raise DimensionError(
                f"matched comparison needs equal sizes, got {len(cloud_a)} and {len(cloud_b)}"
            )
        diff = cloud_a.points - cloud_b.points
        distance = float(np.linalg.norm(diff, axis=1).max()) if len(diff) else 0.0
        entrywise = float(np.abs(diff).max()) if diff.size else 0.0
        return EqualityReport(
            equal=entrywise <= tol,
            distance=distance,
            mode="matched",
            tol=tol,
            max_entrywise=entrywise,
            count=len(diff),
        )
    if len(cloud_a) == 0 or len(cloud_b) == 0:
        raise ProbeError("cannot compare empty clouds")
    d_ab, _ = cKDTree(cloud_b.points).query(cloud_a.points)
    d_ba, _ = cKDTree(cloud_a.points).query(cloud_b.points)
    distance = float(max(d_ab.max(), d_ba.max()))
    logger.debug("Hausdorff distance %.3e between clouds", distance)
    return EqualityReport(
        equal=distance <= tol,
        distance=distance,
        mode="hausdorff",
        tol=tol,
        count=len(cloud_a) + len(cloud_b),
    )
