"""Analytic (alpha, beta)-metric catalog.

A metric is the triple (alpha, beta, phi) with ``F = alpha * phi(beta / alpha)``.
The Riemannian part is either Euclidean or conformally flat,
``a_ij = exp(2 sigma(x)) delta_ij``, and the one-form is always the
differential of a scalar potential ``p`` so that it is exact by construction.
Both ``sigma`` and ``p`` are polynomials of degree at most two whose
coefficients are laid out as::

    [c0, l_1, ..., l_n, q_11, q_12, ..., q_1n, q_22, ..., q_nn]

i.e. constant, linear part, then the upper triangle of the quadratic part in
row-major order (``q_ij`` multiplies ``x_i x_j``).  Trailing entries may be
omitted and default to zero.
"""

from __future__ import annotations

import functools
import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Callable, Optional

import numpy as np
from numpy.polynomial import polynomial as P

from .errors import AdmissibilityError, ConfigError, DomainError

CATALOG_NAMES = (
    "randers",
    "square",
    "poly_even_family",
    "quad_s2_s_1",
    "quad_s2_2s_1",
    "cos_as",
    "exp_s_1",
    "quad_s2_2s_2",
    "quad_s2_s_2",
    "square_shift2",
)

# Families for which d_F is a weighted quasi-metric with orientation-free perimeters.
WEIGHTED_FAMILIES = ("square", "cos_as", "square_shift2", "quad_s2_s_2", "quad_s2_2s_2")
# Families with reversible geodesics constructed explicitly as F0 + eps*beta.
REVERSIBLE_FAMILIES = ("quad_s2_2s_2", "quad_s2_s_2", "square_shift2")
# Families only claimed to be (alpha, beta)-metrics.
SHEN_FAMILIES = ("exp_s_1", "quad_s2_2s_2", "quad_s2_s_2", "square_shift2")

KIND_POLY = 0
KIND_COS_AS = 1
KIND_EXP = 2

_FIXED_POLY = {
    "randers": [1.0, 1.0],
    "square": [1.0, 2.0, 1.0],
    "quad_s2_s_1": [1.0, 1.0, 1.0],
    "quad_s2_2s_1": [1.0, 2.0, 1.0],
    "quad_s2_2s_2": [2.0, 2.0, 1.0],
    "quad_s2_s_2": [2.0, 1.0, 1.0],
    "square_shift2": [4.0, 4.0, 1.0],
}

DEFAULT_PARAMS = {
    "poly_even_family": {"a0": 1.0, "a2": 0.5, "eps": 0.5},
    "cos_as": {"a": 0.5},
}


def quadratic_parts(coeffs, n):
    """Split a packed coefficient list into ``(c0, linear, hessian)``."""
    coeffs = [float(c) for c in coeffs]
    size = 1 + n + n * (n + 1) // 2
    if len(coeffs) > size:
        raise ConfigError(f"expected at most {size} coefficients for n={n}, got {len(coeffs)}")
    coeffs = coeffs + [0.0] * (size - len(coeffs))
    c0 = coeffs[0]
    lin = np.array(coeffs[1 : 1 + n])
    hess = np.zeros((n, n))
    k = 1 + n
    for i in range(n):
        for j in range(i, n):
            if i == j:
                hess[i, i] = 2.0 * coeffs[k]
            else:
                hess[i, j] = hess[j, i] = coeffs[k]
            k += 1
    return c0, lin, hess


@dataclass(frozen=True, eq=False)
class RiemannBase:
    kind: str
    dimension: int
    sigma_coeffs: tuple = ()

    def __post_init__(self):
        if self.kind not in ("euclidean", "conformal"):
            raise ConfigError(f"unknown kind {self.kind!r}", "base.kind")
        if int(self.dimension) != self.dimension or self.dimension < 2:
            raise ConfigError("dimension must be an integer >= 2", "base.dimension")
        if self.kind == "euclidean" and any(c != 0 for c in self.sigma_coeffs):
            raise ConfigError("euclidean base takes no sigma coefficients", "base.sigma_coeffs")
        try:
            quadratic_parts(self.sigma_coeffs, self.dimension)
        except ConfigError as exc:
            raise ConfigError(str(exc), "base.sigma_coeffs") from None

    @cached_property
    def parts(self):
        return quadratic_parts(self.sigma_coeffs, self.dimension)

    def sigma(self, x):
        c0, lin, hess = self.parts
        x = np.asarray(x, dtype=float)
        return c0 + lin @ x + 0.5 * x @ hess @ x

    def grad_sigma(self, x):
        _, lin, hess = self.parts
        return lin + hess @ np.asarray(x, dtype=float)

    def tensor(self, x):
        """``a_ij(x)``; always symmetric positive-definite."""
        return math.exp(2.0 * self.sigma(x)) * np.eye(self.dimension)

    @property
    def is_flat_coordinates(self):
        _, lin, hess = self.parts
        return not lin.any() and not hess.any()


@dataclass(frozen=True, eq=False)
class OneForm:
    """Exact one-form ``beta = dp`` given by its potential coefficients."""

    potential_coeffs: tuple = ()

    def parts(self, n):
        return quadratic_parts(self.potential_coeffs, n)

    def potential(self, x):
        x = np.asarray(x, dtype=float)
        c0, lin, hess = self.parts(x.size)
        return c0 + lin @ x + 0.5 * x @ hess @ x

    def components(self, x):
        """``b_i(x) = dp/dx^i``."""
        x = np.asarray(x, dtype=float)
        _, lin, hess = self.parts(x.size)
        return lin + hess @ x

    def is_constant(self, n):
        return not self.parts(n)[2].any()


@dataclass(frozen=True, eq=False)
class Decomposition:
    """``phi(s) = phi0(s) + epsilon * s`` with ``phi0`` even."""

    phi0: Callable
    epsilon: float


@dataclass(frozen=True, eq=False)
class PhiSpec:
    name: str
    params: dict = field(default_factory=dict)
    phi: Callable = None
    dphi: Callable = None
    d2phi: Callable = None
    kernel_kind: Optional[int] = None
    kernel_coeffs: tuple = ()

    @cached_property
    def decomposition(self) -> Optional[Decomposition]:
        return decompose_F0(self)

    @property
    def epsilon(self):
        d = self.decomposition
        return None if d is None else d.epsilon

    @cached_property
    def b0(self) -> float:
        if self.name in CATALOG_NAMES:
            return _catalog_b0(self.name, tuple(sorted(self.params.items())))
        from .shen import find_b0

        return find_b0(self)

    def scaled(self, c):
        """Same shape multiplied by a positive constant (not kernel-backed)."""
        return PhiSpec(
            name=f"{self.name}*{c:g}",
            params=dict(self.params),
            phi=lambda s: c * self.phi(s),
            dphi=lambda s: c * self.dphi(s),
            d2phi=lambda s: c * self.d2phi(s),
        )

    def to_dict(self):
        return {"name": self.name, "params": dict(self.params)}


def _poly_phi(name, coeffs, params):
    c = np.asarray(coeffs, dtype=float)
    dc = P.polyder(c)
    d2c = P.polyder(c, 2)
    return PhiSpec(
        name=name,
        params=params,
        phi=lambda s: P.polyval(s, c),
        dphi=lambda s: P.polyval(s, dc),
        d2phi=lambda s: P.polyval(s, d2c),
        kernel_kind=KIND_POLY,
        kernel_coeffs=tuple(c),
    )


def make_phi(name, **params) -> PhiSpec:
    """Build a catalog phi; unknown names or parameters raise ConfigError."""
    if name not in CATALOG_NAMES:
        raise ConfigError(f"unknown phi {name!r}; catalog: {', '.join(CATALOG_NAMES)}", "phi.name")
    merged = dict(DEFAULT_PARAMS.get(name, {}))
    for key, value in params.items():
        if name == "poly_even_family" and (key in ("a0", "eps") or _is_even_key(key)):
            merged[key] = float(value)
        elif name == "cos_as" and key == "a":
            merged[key] = float(value)
        else:
            raise ConfigError(f"phi {name!r} takes no parameter {key!r}", "phi.params")
    if name in _FIXED_POLY:
        return _poly_phi(name, _FIXED_POLY[name], merged)
    if name == "poly_even_family":
        degree = max([0] + [int(k[1:]) for k in merged if _is_even_key(k)])
        coeffs = [0.0] * max(degree + 1, 2)
        coeffs[1] = merged.get("eps", 0.0)
        for k, v in merged.items():
            if _is_even_key(k):
                coeffs[int(k[1:])] = v
            elif k == "a0":
                coeffs[0] = v
        return _poly_phi(name, coeffs, merged)
    if name == "cos_as":
        a = merged["a"]
        return PhiSpec(
            name=name,
            params=merged,
            phi=lambda s: np.cos(s) + a * s,
            dphi=lambda s: -np.sin(s) + a,
            d2phi=lambda s: -np.cos(s),
            kernel_kind=KIND_COS_AS,
            kernel_coeffs=(a,),
        )
    # exp_s_1
    return PhiSpec(
        name=name,
        params=merged,
        phi=lambda s: np.exp(s) + s + 1.0,
        dphi=lambda s: np.exp(s) + 1.0,
        d2phi=lambda s: np.exp(s),
        kernel_kind=KIND_EXP,
        kernel_coeffs=(),
    )


def _is_even_key(key):
    return key.startswith("a") and key[1:].isdigit() and int(key[1:]) % 2 == 0 and int(key[1:]) > 0


@functools.lru_cache(maxsize=None)
def _catalog_b0(name, params_items):
    from .shen import find_b0

    return find_b0(make_phi(name, **dict(params_items)))


def decompose_F0(phi: PhiSpec, radius=None, grid=201, tol=1e-12) -> Optional[Decomposition]:
    """Split off a Randers term: ``phi = phi0 + eps*s`` with ``phi0`` even.

    The candidate ``eps`` is ``phi'(0)``; the split is accepted when the odd
    part of phi equals ``eps*s`` on a grid of the working interval.  Returns
    None when the odd part is not linear.
    """
    if radius is None:
        radius = 0.99 if phi.name not in CATALOG_NAMES else 0.99 * phi.b0
    s = np.linspace(-radius, radius, grid)
    eps = float(phi.dphi(np.array(0.0)))
    odd = 0.5 * (phi.phi(s) - phi.phi(-s))
    scale = max(1.0, float(np.max(np.abs(phi.phi(s)))))
    if np.max(np.abs(odd - eps * s)) > tol * scale:
        return None
    base = phi.phi
    return Decomposition(phi0=lambda t: base(t) - eps * t, epsilon=eps)


@dataclass(frozen=True, eq=False)
class MetricConfig:
    base: RiemannBase
    one_form: OneForm
    phi: PhiSpec
    box_min: tuple
    box_max: tuple

    def __post_init__(self):
        n = self.base.dimension
        lo = np.asarray(self.box_min, dtype=float)
        hi = np.asarray(self.box_max, dtype=float)
        if lo.shape != (n,) or hi.shape != (n,):
            raise ConfigError(f"box corners must have {n} entries", "domain_box")
        if not np.all(hi > lo):
            raise ConfigError("box max must exceed min in every axis", "domain_box")
        if self.phi.kernel_kind is None:
            raise ConfigError("metric configs take catalog phi entries only", "phi.name")
        try:
            self.one_form.parts(n)
        except ConfigError as exc:
            raise ConfigError(str(exc), "one_form.potential_coeffs") from None
        worst = self.max_form_length()
        if not worst < self.phi.b0:
            raise ConfigError(
                f"one-form length {worst:.6g} reaches b0={self.phi.b0:.6g} inside the box",
                "one_form.potential_coeffs",
            )

    @property
    def dimension(self):
        return self.base.dimension

    @property
    def lo(self):
        return np.asarray(self.box_min, dtype=float)

    @property
    def hi(self):
        return np.asarray(self.box_max, dtype=float)

    @property
    def diameter(self):
        return float(np.linalg.norm(self.hi - self.lo))

    def sample_box(self, per_axis=None):
        n = self.dimension
        if per_axis is None:
            per_axis = 21 if n <= 3 else 5
        axes = [np.linspace(self.lo[i], self.hi[i], per_axis) for i in range(n)]
        return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, n)

    def form_length(self, x):
        """Riemannian length ``sqrt(a^ij b_i b_j)`` of beta at x."""
        return float(np.linalg.norm(self.one_form.components(x)) * math.exp(-self.base.sigma(x)))

    def max_form_length(self):
        pts = self.sample_box()
        c0, lin, hess = self.base.parts
        sig = c0 + pts @ lin + 0.5 * np.einsum("ki,ij,kj->k", pts, hess, pts)
        _, plin, phess = self.one_form.parts(self.dimension)
        b = plin + pts @ phess
        return float(np.max(np.linalg.norm(b, axis=1) * np.exp(-sig)))

    @property
    def is_minkowski(self):
        """True when no coefficient depends on x."""
        return self.base.is_flat_coordinates and self.one_form.is_constant(self.dimension)

    def contains(self, x, slack=1e-12):
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= self.lo - slack) and np.all(x <= self.hi + slack))

    @cached_property
    def kernel(self):
        from .kernels import build_metric

        return build_metric(self)

    def to_dict(self):
        return {
            "base": {
                "kind": self.base.kind,
                "dimension": self.base.dimension,
                "sigma_coeffs": list(self.base.sigma_coeffs),
            },
            "one_form": {"potential_coeffs": list(self.one_form.potential_coeffs)},
            "phi": self.phi.to_dict(),
            "domain_box": {"min": list(self.box_min), "max": list(self.box_max)},
        }

    @classmethod
    def from_dict(cls, doc):
        def need(mapping, key, path):
            if not isinstance(mapping, dict) or key not in mapping:
                raise ConfigError("missing field", f"{path}.{key}" if path else key)
            return mapping[key]

        base_doc = need(doc, "base", "")
        form_doc = need(doc, "one_form", "")
        phi_doc = need(doc, "phi", "")
        box_doc = need(doc, "domain_box", "")
        try:
            base = RiemannBase(
                kind=need(base_doc, "kind", "base"),
                dimension=int(need(base_doc, "dimension", "base")),
                sigma_coeffs=tuple(float(c) for c in base_doc.get("sigma_coeffs", []) or []),
            )
            form = OneForm(tuple(float(c) for c in need(form_doc, "potential_coeffs", "one_form")))
            phi = make_phi(need(phi_doc, "name", "phi"), **(phi_doc.get("params") or {}))
            lo = tuple(float(v) for v in need(box_doc, "min", "domain_box"))
            hi = tuple(float(v) for v in need(box_doc, "max", "domain_box"))
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"bad value: {exc}") from None
        return cls(base, form, phi, lo, hi)

    @classmethod
    def load(cls, path):
        try:
            doc = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON: {exc}") from None
        return cls.from_dict(doc)


def minkowski_config(phi="square", c=(0.3, 0.0), box=1.0, **params) -> MetricConfig:
    """Euclidean base with constant one-form ``beta = c . dx``."""
    c = tuple(float(v) for v in c)
    n = len(c)
    return MetricConfig(
        RiemannBase("euclidean", n),
        OneForm((0.0,) + c),
        make_phi(phi, **params),
        (-box,) * n,
        (box,) * n,
    )


def eval_F(cfg: MetricConfig, x, y) -> float:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if not cfg.contains(x):
        raise DomainError(f"x={x.tolist()} outside domain box")
    if not np.any(y):
        raise DomainError("F is undefined at the zero vector")
    return cfg.kernel.F(x, y)


def eval_F_reverse(cfg: MetricConfig, x, y) -> float:
    return eval_F(cfg, x, -np.asarray(y, dtype=float))


def ratio_s(cfg: MetricConfig, x, y) -> float:
    """``s = beta/alpha`` at (x, y)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    alpha = math.exp(cfg.base.sigma(x)) * float(np.linalg.norm(y))
    return float(cfg.one_form.components(x) @ y) / alpha


__all__ = [
    "AdmissibilityError",
    "CATALOG_NAMES",
    "Decomposition",
    "MetricConfig",
    "OneForm",
    "PhiSpec",
    "RiemannBase",
    "decompose_F0",
    "eval_F",
    "eval_F_reverse",
    "make_phi",
    "minkowski_config",
]
