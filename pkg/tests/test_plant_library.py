import numpy as np
import pytest

from lib.plant_library import (
    affine_plants,
    closed_form_disc,
    closed_form_nonconvex,
    disc_plant,
    example_params,
    nonconvex_plant,
    random_lqg_plant,
    reproduce_example,
    tied_diagonal_basis,
)
from lib.probe import controllers_from_params, probe_image
from lib.static_core import closed_loop, subspace_qi_check


def test_closed_forms_match_direct_evaluation():
    params = np.array([[0.3, -1.2], [2.0, 0.5], [-4.0, 4.0], [0.0, 0.0]])
    for plant, form in ((disc_plant(), closed_form_disc), (nonconvex_plant(), closed_form_nonconvex)):
        for (t, s), expected in zip(params, form(params)):
            X = closed_loop(plant, np.diag([t, t, s, s])).ravel()
            assert np.allclose(X, expected, atol=1e-12)


def test_example_grid_size():
    params = example_params(grid_points=11, polar_radii=3, polar_angles=4)
    assert params.shape == (11 * 11 + 3 * 4, 2)


def test_disc_example():
    report = reproduce_example("a")
    assert report.passed, [c for c in report.checks if not c.passed]
    names = {c.name for c in report.checks}
    assert {"closed_form", "norm_bound", "boundary_reached", "convexity_probe"} <= names
    cloud = report.clouds["a"]
    assert np.linalg.norm(cloud.points, axis=1).max() <= 1.0 + 1e-9


def test_nonconvex_example():
    report = reproduce_example("b")
    assert report.passed, [c for c in report.checks if not c.passed]
    probe = report.artifacts["convexity"]
    assert probe.verdict == "nonconvex_witness"
    assert probe.witness["gap"] >= 0.01 * probe.tolerances["diameter"]


def test_affine_example():
    report = reproduce_example("affine", seed=42)
    assert report.passed, [c for c in report.checks if not c.passed]
    assert report.artifacts["max_entrywise"] <= 1e-9


def test_affine_draws_qi_verdicts():
    rng = np.random.default_rng(0)
    for _ in range(20):
        P, S, P_red, S_red = affine_plants(rng)
        assert not subspace_qi_check(S, P.G).qi
        assert subspace_qi_check(S_red, P_red.G).qi


def test_lqg_example():
    report = reproduce_example("lqg", seed=42, horizon=6)
    assert report.passed, [c for c in report.checks if not c.passed]
    sweep = report.artifacts["horizon_sweep"]
    assert [row["horizon"] for row in sweep] == [1, 3, 6]


def test_lqg_plant_structure():
    P = random_lqg_plant(1, 5)
    assert P.G.is_strictly_causal()
    assert not P.G.taps[:, 0, 1].any()
    assert P.horizon == 5


def test_same_seed_same_report():
    first = reproduce_example("affine", seed=5).to_dict()
    second = reproduce_example("affine", seed=5).to_dict()
    assert first == second


def test_unknown_example():
    with pytest.raises(ValueError):
        reproduce_example("c")


def test_example_cloud_excludes_nothing():
    # I - GK is invertible on the whole tied-diagonal subspace for this G
    params = example_params(grid_points=21, polar_radii=5, polar_angles=8)
    samples = controllers_from_params(tied_diagonal_basis(), params, G=disc_plant().G)
    assert samples.excluded == 0
    assert len(probe_image(disc_plant(), samples)) == len(params)
