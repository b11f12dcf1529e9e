import json

import numpy as np
import pytest
from scipy.spatial import cKDTree

from lib.errors import DimensionError, ProbeError
from lib.patterns import Pattern, pattern_to_basis
from lib.probe import (
    PointCloud,
    closed_loop_membership,
    controllers_from_params,
    convexity_probe,
    hmap_image,
    hmap_membership,
    homogeneity_probe,
    probe_image,
    sample_subspace,
    set_equality_probe,
    star_shape_probe,
)
from lib.reports import ProbeReport
from lib.static_core import StaticPlant, closed_loop, subspace_qi_check


def grid_cloud(xs, ys):
    xx, yy = np.meshgrid(xs, ys, indexing="ij")
    pts = np.stack([xx.ravel(), yy.ravel()], axis=1)
    return PointCloud(pts, pts)


def l_shape_cloud():
    step = np.linspace(0.0, 1.0, 101)
    bar = np.linspace(0.0, 0.1, 11)
    a = grid_cloud(step, bar).points
    b = grid_cloud(bar, step).points
    pts = np.unique(np.concatenate([a, b]), axis=0)
    return PointCloud(pts, np.zeros((len(pts), 0)))


def ring_cloud(inner=0.5, outer=1.0):
    rho = np.linspace(inner, outer, 51)
    theta = np.linspace(0.0, 2.0 * np.pi, 720, endpoint=False)
    rr, th = np.meshgrid(rho, theta, indexing="ij")
    pts = np.stack([(rr * np.cos(th)).ravel(), (rr * np.sin(th)).ravel()], axis=1)
    return PointCloud(pts, np.stack([rr.ravel(), th.ravel()], axis=1))


def random_pattern_instance(rng):
    """Pattern subspace S (n_u x n_y) and a numeric G with random sparsity."""
    n_u, n_y = rng.integers(1, 5, size=2)
    basis = pattern_to_basis(Pattern(rng.random((n_u, n_y)) < 0.5))
    support = rng.random((n_y, n_u)) < 0.5
    values = rng.uniform(0.5, 1.5, size=(n_y, n_u)) * rng.choice([-1.0, 1.0], size=(n_y, n_u))
    return basis, np.where(support, values, 0.0)


def invertible_plant(rng, G):
    """Plant with left-invertible P12 and right-invertible P21 around ``G``."""
    n_y, n_u = G.shape
    return StaticPlant(
        rng.standard_normal((3, 3)),
        rng.standard_normal((3, n_u)),
        rng.standard_normal((n_y, 3)),
        G,
    )



class TestConvexity:
    def test_filled_square_passes(self):
        axis = np.linspace(0.0, 1.0, 101)
        report = convexity_probe(grid_cloud(axis, axis))
        assert report.verdict == "pass"
        assert report.witness is None
        assert report.coverage_radius == pytest.approx(0.01)
        assert report.tolerances["reject_tol"] == pytest.approx(0.01 * np.sqrt(2.0))

    def test_l_shape_has_sound_witness(self):
        cloud = l_shape_cloud()
        report = convexity_probe(cloud)
        assert report.verdict == "nonconvex_witness"
        w = report.witness
        a, b = cloud.points[w["indices"][0]], cloud.points[w["indices"][1]]
        assert np.array_equal(a, w["a"]) and np.array_equal(b, w["b"])
        assert np.array_equal(0.5 * (a + b), w["midpoint"])
        # re-check the gap against the whole cloud
        gap, _ = cKDTree(cloud.points).query(w["midpoint"])
        assert gap == pytest.approx(w["gap"])
        assert w["gap"] > report.tolerances["reject_tol"]

    def test_sparse_cloud_is_inconclusive(self):
        axis = np.linspace(0.0, 1.0, 11)
        # midpoint gaps stay below 0.071, the spacing is 0.1
        report = convexity_probe(grid_cloud(axis, axis), reject_tol=0.08)
        assert report.verdict == "inconclusive"

    def test_deterministic(self):
        cloud = l_shape_cloud()
        first = convexity_probe(cloud, seed=3).to_dict()
        second = convexity_probe(cloud, seed=3).to_dict()
        assert first == second

    def test_segment_in_higher_dimension(self):
        t = np.linspace(-1.0, 1.0, 401)
        pts = np.outer(t, [1.0, 2.0, -1.0, 0.5])
        report = convexity_probe(PointCloud(pts, t))
        assert report.verdict == "pass"

    def test_empty_and_single_point(self):
        with pytest.raises(ProbeError):
            convexity_probe(PointCloud(np.zeros((0, 2)), np.zeros((0, 0))))
        single = convexity_probe(PointCloud([[1.0, 2.0]], [[0.0]]))
        assert single.verdict == "pass"

    def test_report_survives_json(self):
        report = convexity_probe(l_shape_cloud())
        text = json.dumps(report.to_dict())
        again = ProbeReport.from_dict(json.loads(text))
        assert again.verdict == "nonconvex_witness"
        assert again.witness["indices"] == report.to_dict()["witness"]["indices"]
        assert again.to_dict() == report.to_dict()



class TestMembershipMode:
    def setup_method(self):
        self.basis = pattern_to_basis(Pattern.identity(2))

    def test_qi_image_passes(self):
        G = np.diag([0.7, -0.4])
        samples = sample_subspace(self.basis, "random", [-1.0, 1.0], 300, seed=1, G=G)
        cloud = hmap_image(G, samples)
        report = convexity_probe(cloud, membership=hmap_membership(self.basis, G))
        assert report.verdict == "pass"
        assert report.checked > 0

    def test_non_qi_image_has_witness(self):
        G = np.array([[0.0, 1.0], [1.0, 0.0]])
        samples = sample_subspace(self.basis, "random", [-0.5, 0.5], 300, seed=1, G=G)
        cloud = hmap_image(G, samples)
        membership = hmap_membership(self.basis, G)
        report = convexity_probe(cloud, membership=membership)
        assert report.verdict == "nonconvex_witness"
        gap = membership(report.witness["midpoint"][None, :])[0]
        assert gap == pytest.approx(report.witness["gap"])

    def test_membership_outside_m_is_nan(self):
        G = np.eye(2)
        membership = hmap_membership(self.basis, G)
        out = membership(np.eye(2).ravel()[None, :])
        assert np.isnan(out[0])

    def test_random_patterns_qi_never_flagged(self):
        rng = np.random.default_rng(31)
        qi_count = non_qi = detected = 0
        for trial in range(50):
            basis, G = random_pattern_instance(rng)
            samples = sample_subspace(
                basis, "random", [-1.0, 1.0], 2000, seed=trial, G=G, cond_tol=1e-3
            )
            cloud = hmap_image(G, samples)
            report = convexity_probe(
                cloud, membership=hmap_membership(basis, G), seed=trial
            )
            if subspace_qi_check(basis, G).qi:
                qi_count += 1
                assert report.verdict == "pass"
                assert report.witness is None
            else:
                non_qi += 1
                detected += report.verdict == "nonconvex_witness"
        assert qi_count > 0 and non_qi > 0
        assert detected >= 0.9 * non_qi

    def test_closed_loop_membership_qi(self):
        rng = np.random.default_rng(32)
        lower = Pattern([[1, 0], [1, 1]])
        basis = pattern_to_basis(lower)
        G = np.array([[0.6, 0.0], [-0.8, 0.4]])
        P = invertible_plant(rng, G)
        samples = sample_subspace(basis, "random", [-1.0, 1.0], 1000, seed=4, G=G)
        cloud = probe_image(P, samples)
        report = convexity_probe(cloud, membership=closed_loop_membership(P, basis))
        assert report.verdict == "pass"
        assert report.checked > 0

    def test_closed_loop_membership_non_qi(self):
        rng = np.random.default_rng(33)
        basis = pattern_to_basis(Pattern.identity(2))
        G = np.array([[0.0, 1.0], [1.0, 0.0]])
        P = invertible_plant(rng, G)
        samples = sample_subspace(basis, "random", [-0.5, 0.5], 1000, seed=4, G=G)
        cloud = probe_image(P, samples)
        membership = closed_loop_membership(P, basis)
        report = convexity_probe(cloud, membership=membership)
        assert report.verdict == "nonconvex_witness"
        assert membership(report.witness["midpoint"][None, :])[0] == pytest.approx(
            report.witness["gap"]
        )
        # cloud members themselves are in the set
        assert np.nanmax(membership(cloud.points[:50])) <= 1e-8



class TestScalingProbes:
    def test_disc_is_star_shaped(self):
        axis = np.linspace(-1.0, 1.0, 201)
        square = grid_cloud(axis, axis)
        inside = np.linalg.norm(square.points, axis=1) <= 1.0
        disc = PointCloud(square.points[inside], square.params[inside])
        assert star_shape_probe(disc).verdict == "pass"

    def test_ring_is_not_star_shaped(self):
        report = star_shape_probe(ring_cloud())
        assert report.verdict == "not_star_shaped"
        assert report.witness["alpha"] == 0.0
        assert report.witness["gap"] == pytest.approx(0.5)

    def test_star_factors_must_be_in_unit_interval(self):
        with pytest.raises(ProbeError):
            star_shape_probe(ring_cloud(), alphas=[1.5])

    def test_symmetric_segment_is_homogeneous(self):
        t = np.linspace(-1.0, 1.0, 2001)
        cloud = PointCloud(np.stack([t, 0.5 * t], axis=1), t)
        assert homogeneity_probe(cloud).verdict == "pass"

    def test_half_segment_is_not_homogeneous(self):
        t = np.linspace(0.0, 1.0, 1001)
        cloud = PointCloud(np.stack([t, 0.5 * t], axis=1), t)
        report = homogeneity_probe(cloud)
        assert report.verdict == "not_homogeneous"
        assert report.witness["alpha"] < 0.0


class TestSetEquality:
    def test_identical_clouds(self):
        cloud = ring_cloud()
        report = set_equality_probe(cloud, cloud)
        assert report.equal and report.distance == 0.0

    def test_shifted_cloud(self):
        a = PointCloud([[0.0, 0.0], [0.0, 1.0]], [[0.0], [1.0]])
        b = PointCloud([[1.0, 0.0], [1.0, 1.0]], [[0.0], [1.0]])
        report = set_equality_probe(a, b)
        assert not report.equal
        assert report.distance == pytest.approx(1.0)
        matched = set_equality_probe(a, b, matched=True)
        assert matched.max_entrywise == pytest.approx(1.0)
        assert matched.mode == "matched"

    def test_dimension_mismatch(self):
        a = PointCloud([[0.0, 0.0]], [[0.0]])
        b = PointCloud([[0.0, 0.0, 0.0]], [[0.0]])
        with pytest.raises(DimensionError):
            set_equality_probe(a, b)


class TestSampling:
    def test_grid_has_count_per_axis(self):
        basis = pattern_to_basis(Pattern([[1, 1], [0, 0]]))
        samples = sample_subspace(basis, "grid", [[-1, 1], [0, 2]], 5)
        assert len(samples) == 25
        assert samples.params[:, 1].min() == 0.0
        assert samples.params[:, 1].max() == 2.0

    def test_random_is_seeded(self):
        basis = pattern_to_basis(Pattern.identity(3))
        a = sample_subspace(basis, "random", None, 50, seed=9)
        b = sample_subspace(basis, "random", None, 50, seed=9)
        c = sample_subspace(basis, "random", None, 50, seed=10)
        assert np.array_equal(a.controllers, b.controllers)
        assert not np.array_equal(a.controllers, c.controllers)

    def test_bad_ranges(self):
        basis = pattern_to_basis(Pattern.identity(2))
        with pytest.raises(ProbeError):
            sample_subspace(basis, "random", [], 10)
        with pytest.raises(ProbeError):
            sample_subspace(basis, "random", [[1.0, 0.0], [0.0, 1.0]], 10)
        with pytest.raises(ProbeError):
            sample_subspace(basis, "sobol", None, 10)

    def test_empty_basis_gives_zero_controller(self):
        basis = pattern_to_basis(Pattern.empty(2, 2))
        samples = sample_subspace(basis, "random", None, 10)
        assert len(samples) == 1
        assert not samples.controllers.any()

    def test_controllers_outside_m_are_excluded(self):
        basis = pattern_to_basis(Pattern.identity(1))
        samples = controllers_from_params(basis, [[0.5], [1.0], [2.0]], G=np.eye(1))
        assert samples.excluded == 1
        assert np.array_equal(samples.excluded_params, [[1.0]])

    def test_g_must_match_controller_shape(self):
        basis = pattern_to_basis(Pattern.full(2, 3))
        with pytest.raises(DimensionError):
            sample_subspace(basis, "random", None, 10, G=np.eye(2))
        samples = sample_subspace(basis, "random", None, 10, G=0.1 * np.ones((3, 2)))
        assert samples.controllers.shape == (10, 2, 3)


    def test_probe_image_matches_closed_loop(self):
        rng = np.random.default_rng(14)
        P = StaticPlant(
            rng.standard_normal((2, 2)),
            rng.standard_normal((2, 2)),
            rng.standard_normal((2, 2)),
            0.3 * rng.standard_normal((2, 2)),
        )
        basis = pattern_to_basis(Pattern.identity(2))
        samples = sample_subspace(basis, "random", None, 20, seed=2, G=P.G)
        cloud = probe_image(P, samples)
        for k in range(len(cloud)):
            expected = closed_loop(P, samples.controllers[k]).ravel()
            assert np.allclose(cloud.points[k], expected, atol=1e-12)
        assert np.array_equal(cloud.params, samples.params)
