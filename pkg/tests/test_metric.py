import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wqfinsler.errors import AdmissibilityError, ConfigError, DomainError
from wqfinsler.geodesic import fundamental_tensor
from wqfinsler.metric import (
    CATALOG_NAMES,
    MetricConfig,
    OneForm,
    RiemannBase,
    decompose_F0,
    eval_F,
    eval_F_reverse,
    make_phi,
    minkowski_config,
    quadratic_parts,
    ratio_s,
)


def test_square_norm_values(square_mink):
    assert eval_F(square_mink, (0, 0), (1, 0)) == pytest.approx(1.69, abs=1e-14)
    assert eval_F_reverse(square_mink, (0, 0), (1, 0)) == pytest.approx(0.49, abs=1e-14)


def test_randers_value():
    cfg = minkowski_config("randers", c=(0.3, 0.0))
    assert eval_F(cfg, (0.2, 0.1), (0, 2)) == pytest.approx(2.0)
    assert eval_F(cfg, (0.2, 0.1), (1, 0)) == pytest.approx(1.3)


def test_conformal_scaling():
    cfg = MetricConfig(RiemannBase("conformal", 2, (0.5,)), OneForm((0.0, 0.0, 0.0)), make_phi("square"), (-1, -1), (1, 1))
    assert eval_F(cfg, (0.1, 0.2), (3, 4)) == pytest.approx(5 * math.exp(0.5))


def test_quadratic_layout():
    c0, lin, H = quadratic_parts((1.0, 2.0, 3.0, 0.5, 0.25, 0.75), 2)
    assert c0 == 1.0
    assert lin.tolist() == [2.0, 3.0]
    # q11 x^2 + q12 xy + q22 y^2 has Hessian [[2q11, q12], [q12, 2q22]]
    assert H.tolist() == [[1.0, 0.25], [0.25, 1.5]]


def test_quadratic_padding_and_overflow():
    c0, lin, H = quadratic_parts((1.0, 2.0), 2)
    assert lin.tolist() == [2.0, 0.0] and not H.any()
    with pytest.raises(ConfigError):
        quadratic_parts(range(7), 2)


def test_catalog_phi_values():
    s = np.array([-0.5, 0.0, 0.3])
    expect = {
        "randers": 1 + s,
        "square": (1 + s) ** 2,
        "quad_s2_s_1": s**2 + s + 1,
        "quad_s2_2s_2": s**2 + 2 * s + 2,
        "quad_s2_s_2": s**2 + s + 2,
        "square_shift2": (s + 2) ** 2,
    }
    for name, ref in expect.items():
        np.testing.assert_allclose(make_phi(name).phi(s), ref)
    np.testing.assert_allclose(make_phi("exp_s_1").phi(s), np.exp(s) + s + 1)
    np.testing.assert_allclose(make_phi("cos_as", a=0.2).phi(s), np.cos(s) + 0.2 * s)


def test_make_phi_rejects_unknowns():
    with pytest.raises(ConfigError) as exc:
        make_phi("nope")
    assert exc.value.field == "phi.name"
    with pytest.raises(ConfigError):
        make_phi("square", eps=0.1)


def test_poly_even_family_params():
    phi = make_phi("poly_even_family", a0=1.0, a2=0.3, a4=0.1, eps=0.2)
    s = np.array([0.5])
    np.testing.assert_allclose(phi.phi(s), 1 + 0.2 * 0.5 + 0.3 * 0.25 + 0.1 * 0.0625)
    assert phi.epsilon == pytest.approx(0.2)


@pytest.mark.parametrize(
    "name,eps",
    [("randers", 1.0), ("square", 2.0), ("cos_as", 0.5), ("quad_s2_s_2", 1.0), ("quad_s2_2s_2", 2.0), ("square_shift2", 4.0)],
)
def test_decomposition(name, eps):
    phi = make_phi(name)
    d = decompose_F0(phi)
    assert d is not None and d.epsilon == pytest.approx(eps)
    s = np.linspace(-0.5, 0.5, 11)
    np.testing.assert_allclose(d.phi0(s), d.phi0(-s), atol=1e-12)


def test_exp_not_decomposable():
    assert make_phi("exp_s_1").epsilon is None


def test_config_roundtrip(tmp_path, curved):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(curved.to_dict()))
    back = MetricConfig.load(path)
    assert back.to_dict() == curved.to_dict()
    assert set(curved.to_dict()) == {"base", "one_form", "phi", "domain_box"}


@pytest.mark.parametrize(
    "mutate,field",
    [
        (lambda d: d.pop("phi"), "phi"),
        (lambda d: d["base"].pop("kind"), "base.kind"),
        (lambda d: d["one_form"].pop("potential_coeffs"), "one_form.potential_coeffs"),
        (lambda d: d["domain_box"].update(min=[0.0]), "domain_box"),
        (lambda d: d["phi"].update(name="zzz"), "phi.name"),
    ],
)
def test_config_error_fields(curved, mutate, field):
    doc = curved.to_dict()
    mutate(doc)
    with pytest.raises(ConfigError) as exc:
        MetricConfig.from_dict(doc)
    assert exc.value.field == field


def test_config_rejects_long_form():
    with pytest.raises(ConfigError) as exc:
        minkowski_config("square", c=(1.2, 0.0))
    assert exc.value.field == "one_form.potential_coeffs"


def test_eval_domain_errors(square_mink):
    with pytest.raises(DomainError):
        eval_F(square_mink, (2.0, 0.0), (1, 0))
    with pytest.raises(DomainError):
        eval_F(square_mink, (0.0, 0.0), (0, 0))


def test_admissibility_error_from_kernel():
    cfg = minkowski_config("randers", c=(0.5, 0.0))
    k = cfg.kernel
    assert k.F(np.zeros(2), np.array([1.0, 0.0])) == pytest.approx(1.5)
    # the config forbids |b| >= b0, but a kernel built by hand must still refuse
    from wqfinsler.kernels import BACKENDS

    for mod in BACKENDS.values():
        m = mod.Metric(2, 0.0, [0, 0], [0, 0, 0, 0], [1.5, 0], [0, 0, 0, 0], 0, [1.0, 1.0], 1.0)
        with pytest.raises(AdmissibilityError):
            m.F(np.zeros(2), np.array([1.0, 0.0]))


@settings(max_examples=60, deadline=None)
@given(
    name=st.sampled_from(CATALOG_NAMES),
    x=st.tuples(st.floats(-1, 1), st.floats(-1, 1)),
    y=st.tuples(st.floats(-3, 3), st.floats(-3, 3)),
    lam=st.floats(0.01, 50),
)
def test_homogeneity_and_positivity(name, x, y, lam):
    cfg = minkowski_config(name, c=(0.2, -0.1))
    y = np.array(y)
    if np.linalg.norm(y) < 1e-3:
        return
    f = eval_F(cfg, x, y)
    assert f > 0
    assert eval_F(cfg, x, lam * y) == pytest.approx(lam * f, rel=1e-12)


@settings(max_examples=40, deadline=None)
@given(
    x=st.tuples(st.floats(-1, 1), st.floats(-1, 1), st.floats(-1, 1)),
    y=st.tuples(st.floats(-2, 2), st.floats(-2, 2), st.floats(-2, 2)),
    name=st.sampled_from(["square", "quad_s2_s_2", "square_shift2", "exp_s_1", "cos_as"]),
)
def test_tensor_closed_form_matches_fd(x, y, name):
    from wqfinsler.acceptance import conformal_config

    cfg = conformal_config(name)
    y = np.array(y)
    if np.linalg.norm(y) < 1e-2 or abs(ratio_s(cfg, x, y)) >= 0.85 * cfg.phi.b0:
        return
    g = cfg.kernel.tensor(np.array(x), y)
    g_fd = fundamental_tensor(cfg, x, y)
    np.testing.assert_allclose(g, g_fd, rtol=1e-6, atol=1e-6 * np.abs(g).max())
    # Euler relations: F_y . y = F and g y = F F_y
    f, fy = cfg.kernel.F_grad_y(np.array(x), y)
    assert fy @ y == pytest.approx(f, rel=1e-12)
    np.testing.assert_allclose(g @ y, f * fy, rtol=1e-10, atol=1e-10 * f)
    assert np.linalg.eigvalsh(g)[0] > 0


def test_sample_box_and_minkowski_flag(square_mink, curved):
    assert square_mink.sample_box().shape == (441, 2)
    assert square_mink.is_minkowski
    assert not curved.is_minkowski
    assert square_mink.form_length((0.5, 0.5)) == pytest.approx(0.3)
