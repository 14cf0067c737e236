import os

import numpy as np
import pytest

from wqfinsler import kernels
from wqfinsler.acceptance import conformal_config
from wqfinsler.geodesic import x_step
from wqfinsler.kernels import BACKENDS, build_metric
from wqfinsler.metric import CATALOG_NAMES, MetricConfig, OneForm, RiemannBase, make_phi

NAMES = [n for n in CATALOG_NAMES]


def test_backend_selected():
    assert kernels.BACKEND in BACKENDS
    assert "python" in BACKENDS


@pytest.mark.skipif(
    os.environ.get("WQFINSLER_PURE_PYTHON", "") not in ("", "0"), reason="fallback forced"
)
def test_compiled_backend_built():
    # the package ships the extension; this only fails when the build was skipped
    assert "cython" in BACKENDS


@pytest.fixture(params=NAMES)
def pair(request):
    cfg = conformal_config(request.param)
    return cfg, {b: build_metric(cfg, b) for b in BACKENDS}


POINTS = [
    (np.array([0.3, -0.2, 0.1]), np.array([0.5, 1.0, -0.4])),
    (np.array([-1.0, 0.7, 0.2]), np.array([-0.2, 0.1, 2.0])),
]


def test_parity_pointwise(pair):
    cfg, ms = pair
    ref = ms["python"]
    for name, m in ms.items():
        for x, y in POINTS:
            assert m.F(x, y) == pytest.approx(ref.F(x, y), rel=1e-14)
            np.testing.assert_allclose(m.F_grad_y(x, y)[1], ref.F_grad_y(x, y)[1], rtol=1e-13, atol=1e-14)
            np.testing.assert_allclose(m.F_grad_x(x, y)[1], ref.F_grad_x(x, y)[1], rtol=1e-13, atol=1e-14)
            np.testing.assert_allclose(m.tensor(x, y), ref.tensor(x, y), rtol=1e-13, atol=1e-14)
            np.testing.assert_allclose(m.spray(x, y, x_step(cfg)), ref.spray(x, y, x_step(cfg)), rtol=1e-8, atol=1e-10)


def test_parity_rk4_and_polyline(pair):
    cfg, ms = pair
    x, y = POINTS[0]
    out = {b: m.rk4(x, y, 0.5, 100, x_step(cfg), cfg.lo, cfg.hi) for b, m in ms.items()}
    nodes = np.linspace([-1.0, -0.5, 0.2], [1.0, 0.8, -0.3], 17)
    poly = {b: m.polyline(nodes) for b, m in ms.items()}
    for b in ms:
        np.testing.assert_allclose(out[b][0], out["python"][0], atol=1e-10)
        assert out[b][2] == out["python"][2]
        assert poly[b][0] == pytest.approx(poly["python"][0], rel=1e-13)
        np.testing.assert_allclose(poly[b][1], poly["python"][1], atol=1e-12)


@pytest.mark.parametrize("backend", list(BACKENDS))
def test_gradients_match_fd(backend):
    cfg = conformal_config("square_shift2")
    m = build_metric(cfg, backend)
    x, y = POINTS[0]
    h = 1e-6
    fy = m.F_grad_y(x, y)[1]
    fx = m.F_grad_x(x, y)[1]
    for i in range(3):
        e = np.zeros(3)
        e[i] = h
        assert fy[i] == pytest.approx((m.F(x, y + e) - m.F(x, y - e)) / (2 * h), abs=1e-8)
        assert fx[i] == pytest.approx((m.F(x + e, y) - m.F(x - e, y)) / (2 * h), abs=1e-8)


@pytest.mark.parametrize("backend", list(BACKENDS))
def test_polyline_gradient_matches_fd(backend):
    cfg = conformal_config("quad_s2_s_2")
    m = build_metric(cfg, backend)
    rng = np.random.default_rng(0)
    nodes = np.linspace([-1.0, -0.5, 0.2], [1.0, 0.8, -0.3], 9) + 0.05 * rng.normal(size=(9, 3))
    length, grad = m.polyline(nodes)
    h = 1e-6
    for k in (0, 4, 8):
        for i in range(3):
            p = nodes.copy()
            p[k, i] += h
            q = nodes.copy()
            q[k, i] -= h
            assert grad[k, i] == pytest.approx((m.polyline(p)[0] - m.polyline(q)[0]) / (2 * h), abs=1e-7)
    assert length > 0


@pytest.mark.parametrize("backend", list(BACKENDS))
def test_polyline_skips_repeated_nodes(backend):
    cfg = conformal_config("square")
    m = build_metric(cfg, backend)
    nodes = np.array([[0.0, 0.0, 0.0], [0.5, 0.0, 0.0], [0.5, 0.0, 0.0], [1.0, 0.0, 0.0]])
    single = np.array([[0.0, 0.0, 0.0], [0.5, 0.0, 0.0], [1.0, 0.0, 0.0]])
    assert m.polyline(nodes)[0] == pytest.approx(m.polyline(single)[0])


@pytest.mark.parametrize("backend", list(BACKENDS))
def test_rk4_truncates_at_box(backend):
    cfg = conformal_config("square")
    m = build_metric(cfg, backend)
    pts, vel, truncated = m.rk4(np.zeros(3), np.array([5.0, 0.0, 0.0]), 1.0, 200, x_step(cfg), cfg.lo, cfg.hi)
    assert truncated
    assert np.all(pts <= cfg.hi) and np.all(pts >= cfg.lo)
    assert len(pts) == len(vel) < 201


@pytest.mark.parametrize("backend", list(BACKENDS))
def test_conformal_spray_closed_form(backend):
    # sigma = x1, beta = 0, randers: G = (-1/2, 0) at x = 0, y = (0, 1)
    cfg = MetricConfig(RiemannBase("conformal", 2, (0.0, 1.0, 0.0)), OneForm((0.0,)), make_phi("randers"), (-1, -1), (1, 1))
    m = build_metric(cfg, backend)
    G = m.spray(np.zeros(2), np.array([0.0, 1.0]), x_step(cfg))
    np.testing.assert_allclose(G, [-0.5, 0.0], atol=1e-9)
