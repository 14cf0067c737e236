import numpy as np
import pytest

from wqfinsler.acceptance import curved_2d
from wqfinsler.distance import (
    check_quasi_axioms,
    distance,
    symmetrize,
    triangle_perimeter,
    verify_weight_identity,
    weight_from_distances,
)
from wqfinsler.errors import DomainError
from wqfinsler.metric import WEIGHTED_FAMILIES, minkowski_config


def test_norm_examples(square_mink):
    assert distance(square_mink, (0, 0), (1, 0)).value == pytest.approx(1.69)
    assert distance(square_mink, (1, 0), (0, 0)).value == pytest.approx(0.49)
    assert distance(square_mink, (0.2, 0.2), (0.2, 0.2)).value == 0.0


@pytest.mark.parametrize("method", ["relax", "shoot"])
def test_solvers_reproduce_norm(square_mink, method):
    q = distance(square_mink, (0, 0), (1, 0), method)
    assert q.converged
    assert q.value == pytest.approx(1.69, rel=1e-6)
    assert q.certificate is not None and len(q.certificate) > 2


def test_norm_needs_minkowski():
    with pytest.raises(DomainError):
        distance(curved_2d("square"), (0, 0), (0.5, 0.5), "norm")


def test_points_outside_box(square_mink):
    with pytest.raises(DomainError):
        distance(square_mink, (0, 0), (1.5, 0))
    with pytest.raises(ValueError):
        distance(square_mink, (0, 0), (0.5, 0), "dijkstra")


def test_relax_upper_bound_and_refinement(square_mink, rng):
    for _ in range(5):
        p, q = rng.uniform(-1, 1, size=(2, 2))
        ref = distance(square_mink, p, q).value
        vals = [distance(square_mink, p, q, "relax", nodes=n).value for n in (16, 32, 64)]
        gaps = [(v - ref) / ref for v in vals]
        assert all(-1e-12 <= g <= 1e-3 for g in gaps)
        assert gaps[0] + 1e-12 >= gaps[1] and gaps[1] + 1e-12 >= gaps[2]


def test_relax_and_shoot_agree_on_curved_base():
    cfg = curved_2d("quad_s2_s_2")
    r = distance(cfg, (-0.5, -0.3), (0.6, 0.4), "relax")
    s = distance(cfg, (-0.5, -0.3), (0.6, 0.4), "shoot")
    assert s.converged
    assert r.value == pytest.approx(s.value, rel=1e-3)
    # the relaxed curve improves on the straight segment
    straight = cfg.kernel.polyline(np.linspace([-0.5, -0.3], [0.6, 0.4], 64))[0]
    assert r.value <= straight


def test_relax_flags_iteration_limit():
    cfg = curved_2d("square")
    q = distance(cfg, (-0.8, -0.6), (0.7, 0.6), "relax", max_iters=1)
    assert not q.converged
    assert np.isfinite(q.value)


def test_weight_examples(square_mink):
    wf = weight_from_distances(square_mink, (0, 0), [(1, 0), (0, 0)])
    np.testing.assert_allclose(wf.values, [1.2, 0.0], atol=1e-12)
    np.testing.assert_allclose(wf.predicted, [1.2, 0.0], atol=1e-12)
    cfg = minkowski_config("quad_s2_s_2", c=(0.3, 0.0))
    assert weight_from_distances(cfg, (0, 0), [(1, 0)]).values[0] == pytest.approx(0.6)


def test_weight_none_for_nondecomposable():
    cfg = minkowski_config("exp_s_1", c=(0.3, 0.0))
    assert weight_from_distances(cfg, (0, 0), [(1, 0)]).predicted is None


@pytest.mark.parametrize("name", WEIGHTED_FAMILIES)
def test_base_point_shift_covariance(name, rng):
    cfg = minkowski_config(name, c=(0.25, -0.15))
    a, b = rng.uniform(-1, 1, size=(2, 2))
    pts = rng.uniform(-1, 1, size=(8, 2))
    wa = weight_from_distances(cfg, a, pts).values
    wb = weight_from_distances(cfg, b, pts).values
    w_ab = weight_from_distances(cfg, a, [b]).values[0]
    np.testing.assert_allclose(wa - wb, w_ab, atol=1e-12)


def test_weight_on_curved_base_matches_potential():
    cfg = curved_2d("square_shift2")
    wf = weight_from_distances(cfg, (0.1, -0.2), [(0.6, 0.5), (-0.7, 0.3)], method="relax")
    np.testing.assert_allclose(wf.values, wf.predicted, atol=1e-4)


def test_symmetrize():
    assert symmetrize(1.69, 0.49) == pytest.approx(1.09)
    assert symmetrize(0.7, 0.7) == 0.7
    with pytest.raises(ValueError):
        symmetrize(-1.0, 1.0)


def test_weight_identity_pair(square_mink):
    rep = verify_weight_identity(square_mink, (0, 0), [(0, 0), (1, 0)], tol=1e-9)
    assert rep["ok"] and rep["identity_residual"] <= 1e-12


def test_weight_identity_random(square_mink, rng):
    pts = rng.uniform(-1, 1, size=(20, 2))
    assert verify_weight_identity(square_mink, pts[0], pts, tol=1e-9)["ok"]


def test_symmetrization_is_metric(square_mink, rng):
    from wqfinsler import spaces
    from wqfinsler.distance import distance_matrix

    D = distance_matrix(square_mink, rng.uniform(-1, 1, size=(12, 2)))
    rho = 0.5 * (D + D.T)
    assert spaces.check_axioms(spaces.QuasiMetricMatrix(None, rho)).valid


def test_quasi_axioms_and_duplicates(square_mink, rng):
    pts = rng.uniform(-1, 1, size=(10, 2))
    pts = np.vstack([pts, pts[:1]])
    rep = check_quasi_axioms(square_mink, pts)
    assert rep["valid"]
    assert rep["max_asymmetry"] > 0.1


def test_cos_as_zero_is_symmetric(rng):
    cfg = minkowski_config("cos_as", c=(0.25, -0.15), a=0.0)
    rep = check_quasi_axioms(cfg, rng.uniform(-1, 1, size=(8, 2)))
    assert rep["valid"] and rep["max_asymmetry"] <= 1e-12


def test_quasi_axioms_need_three_points(square_mink):
    with pytest.raises(ValueError):
        check_quasi_axioms(square_mink, [(0, 0), (1, 0)])


def test_triangle_examples(square_mink):
    f, b = triangle_perimeter(square_mink, (0, 0), (1, 0), (0, 1))
    assert f == pytest.approx(3.5677, abs=1e-3) and f == pytest.approx(b, abs=1e-12)
    f, b = triangle_perimeter(square_mink, (0, 0), (1, 0), (0.5, 0))
    assert f == pytest.approx(b, abs=1e-12)
    with pytest.raises(DomainError):
        triangle_perimeter(square_mink, (0, 0), (0, 0), (1, 0))


def test_nondecomposable_perimeters_differ():
    cfg = minkowski_config("exp_s_1", c=(0.3, 0.2))
    f, b = triangle_perimeter(cfg, (0, 0), (1, 0), (0, 1))
    assert abs(f - b) > 1e-3
