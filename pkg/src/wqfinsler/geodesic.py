"""Fundamental tensor, geodesic spray, RK4 geodesics and residual diagnostics.

Geodesics solve ``x'' + 2 G(x, x') = 0`` with the spray in Euler-Lagrange
form ``G^i = 1/4 g^il ([F^2]_{x^k y^l} y^k - [F^2]_{x^l})``.  The y-derivatives
of F are closed-form; x-derivatives use five-point central differences with
step ``1e-5 * diam(domain_box)``.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .errors import AdmissibilityError, DomainError, NotPositiveDefiniteError
from .metric import MetricConfig, ratio_s
from ._pykernels import _OFFSETS, _five_point
from .shen import OPERATIONAL_FRACTION

Y_STEP = 1e-4
X_STEP = 1e-5
DEFAULT_STEPS = 1000

# targets and endpoints on the box face are kept up to round-off
BOX_SLACK = 1e-9


@dataclass
class SprayEval:
    x: np.ndarray
    y: np.ndarray
    G: np.ndarray
    g: np.ndarray
    cond_g: float


@dataclass
class Curve:
    times: np.ndarray
    points: np.ndarray
    velocities: np.ndarray
    truncated: bool = False

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.points = np.asarray(self.points, dtype=float)
        self.velocities = np.asarray(self.velocities, dtype=float)
        if len(self.times) < 3:
            raise DomainError("a curve needs at least three nodes")
        if np.any(np.diff(self.times) <= 0):
            raise DomainError("curve times must be strictly increasing")

    def __len__(self):
        return len(self.times)

    def speeds(self, cfg: MetricConfig) -> np.ndarray:
        k = cfg.kernel
        return np.array([k.F(x, v) for x, v in zip(self.points, self.velocities)])

    def to_csv(self, cfg: MetricConfig) -> str:
        n = self.points.shape[1]
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t"] + [f"x{i + 1}" for i in range(n)] + [f"y{i + 1}" for i in range(n)] + ["F"])
        for t, x, v, f in zip(self.times, self.points, self.velocities, self.speeds(cfg)):
            w.writerow([repr(float(t))] + [repr(float(c)) for c in x] + [repr(float(c)) for c in v] + [repr(float(f))])
        return buf.getvalue()


def x_step(cfg: MetricConfig) -> float:
    return X_STEP * cfg.diameter


def _check_tangent(cfg, x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if not np.any(y):
        raise DomainError("tangent vector must be nonzero")
    s = ratio_s(cfg, x, y)
    limit = OPERATIONAL_FRACTION * cfg.phi.b0
    if not abs(s) < limit:
        raise AdmissibilityError(f"|s|={abs(s):.6g} outside operational radius {limit:.6g}")
    return x, y


def fundamental_tensor(cfg: MetricConfig, x, y) -> np.ndarray:
    """Central-difference Hessian of ``F^2/2`` in y.

    Differences are taken of the closed-form gradient ``F F_y`` with step
    ``1e-4 |y|``, then symmetrized; raises if the result is not positive-definite.
    """
    x, y = _check_tangent(cfg, x, y)
    k = cfg.kernel
    n = len(y)
    h = Y_STEP * float(np.linalg.norm(y))
    g = np.empty((n, n))
    for j in range(n):
        e = np.zeros(n)
        e[j] = h
        fp, gp = k.F_grad_y(x, y + e)
        fm, gm = k.F_grad_y(x, y - e)
        g[:, j] = (fp * gp - fm * gm) / (2.0 * h)
    g = 0.5 * (g + g.T)
    lam = float(np.linalg.eigvalsh(g)[0])
    if not lam > 0:
        raise NotPositiveDefiniteError("fundamental tensor is not positive-definite", lam)
    return g


def spray(cfg: MetricConfig, x, y) -> np.ndarray:
    x, y = _check_tangent(cfg, x, y)
    return cfg.kernel.spray(x, y, x_step(cfg))


def spray_eval(cfg: MetricConfig, x, y) -> SprayEval:
    G = spray(cfg, x, y)
    g = fundamental_tensor(cfg, x, y)
    return SprayEval(np.asarray(x, float), np.asarray(y, float), G, g, float(np.linalg.cond(g)))


def integrate_geodesic(cfg: MetricConfig, x0, y0, t_max=1.0, steps=DEFAULT_STEPS) -> Curve:
    """Fixed-step RK4 for ``x'' = -2 G(x, x')``.

    Integration stops at the last node inside the domain box (up to a
    round-off slack); the returned curve then has ``truncated=True``.
    """
    x0, y0 = _check_tangent(cfg, x0, y0)
    if not cfg.contains(x0):
        raise DomainError(f"start point {x0.tolist()} outside domain box")
    if steps < 2 or not t_max > 0:
        raise ValueError("need steps >= 2 and t_max > 0")
    slack = BOX_SLACK * cfg.diameter
    pts, vel, truncated = cfg.kernel.rk4(x0, y0, float(t_max), int(steps), x_step(cfg), cfg.lo - slack, cfg.hi + slack)
    times = np.linspace(0.0, float(t_max), int(steps) + 1)[: len(pts)]
    if len(times) < 3:
        raise DomainError("geodesic leaves the domain box immediately")
    return Curve(times, pts, vel, truncated)


def hamel_residual(cfg: MetricConfig, x, y) -> float:
    """``max_k |F_{x^m y^k} y^m - F_{x^k}|``; zero iff projectively flat at (x, y)."""
    x, y = _check_tangent(cfg, x, y)
    k = cfg.kernel
    h = x_step(cfg)
    ny = float(np.linalg.norm(y))
    u = y / ny
    mixed = _five_point([k.F_grad_y(x + (o * h) * u, y)[1] for o in _OFFSETS], h) * ny
    fx = np.empty(len(x))
    for i in range(len(x)):
        vals = []
        for o in _OFFSETS:
            xs = x.copy()
            xs[i] += o * h
            vals.append(k.F(xs, y))
        fx[i] = _five_point(vals, h)
    return float(np.max(np.abs(mixed - fx)))


def geodesic_residuals(cfg: MetricConfig, points, velocities, dt) -> np.ndarray:
    """Unit-speed geodesic-equation residual at the interior nodes of a sampled curve.

    For nodes ``c(t_k)`` with uniform spacing ``dt``, velocities ``c'`` and
    F-speed ``w = F(c, c')``, reparametrizing to unit F-speed turns
    ``c'' + 2G(c, c')`` into ``(c'' - c' w'/w + 2G(c, c')) / w^2`` because G is
    2-homogeneous.  ``c''`` and ``w'`` are central differences of the sampled
    velocities and speeds, so a true geodesic gives O(dt^2).
    """
    P = np.asarray(points, dtype=float)
    V = np.asarray(velocities, dtype=float)
    if len(P) < 3 or P.shape != V.shape:
        raise DomainError("need at least three nodes with matching velocities")
    if np.any(np.linalg.norm(V, axis=1) == 0.0):
        raise DomainError("degenerate curve: zero velocity")
    k = cfg.kernel
    hx = x_step(cfg)
    w = np.array([k.F(x, v) for x, v in zip(P, V)])
    acc = (V[2:] - V[:-2]) / (2.0 * dt)
    dw = (w[2:] - w[:-2]) / (2.0 * dt)
    out = np.empty(len(acc))
    for i in range(len(acc)):
        x, v, wi = P[i + 1], V[i + 1], w[i + 1]
        r = acc[i] - v * (dw[i] / wi) + 2.0 * k.spray(x, v, hx)
        out[i] = float(np.linalg.norm(r)) / wi**2
    return out


def reversibility_residual(cfg: MetricConfig, curve: Curve) -> float:
    """Max residual of the reversed curve ``c(t) = gamma(T - t)`` as a geodesic."""
    dt = np.diff(curve.times)
    if not np.allclose(dt, dt[0], rtol=1e-9, atol=0.0):
        raise DomainError("residual stencil needs uniformly spaced nodes")
    return float(np.max(geodesic_residuals(cfg, curve.points[::-1], -curve.velocities[::-1], dt[0])))


def circle_arc(center, radius, angle, nodes=1001, t_max=1.0) -> Curve:
    """Uniformly parametrized circular arc in the first two coordinates."""
    center = np.asarray(center, dtype=float)
    t = np.linspace(0.0, t_max, nodes)
    om = angle / t_max
    pts = np.tile(center, (nodes, 1))
    vel = np.zeros_like(pts)
    pts[:, 0] += radius * np.cos(om * t)
    pts[:, 1] += radius * np.sin(om * t)
    vel[:, 0] = -radius * om * np.sin(om * t)
    vel[:, 1] = radius * om * np.cos(om * t)
    return Curve(t, pts, vel)


def energy_drift(cfg: MetricConfig, curve: Curve) -> dict:
    f = curve.speeds(cfg)
    mean = float(np.mean(f))
    return {
        "mean_speed": mean,
        "max_rel_drift": float(np.max(np.abs(f - f[0]))) / mean,
        "rel_std": float(np.std(f)) / mean,
    }


def speed(cfg: MetricConfig, x, y) -> float:
    return float(cfg.kernel.F(np.asarray(x, float), np.asarray(y, float)))


__all__ = [
    "Curve",
    "SprayEval",
    "circle_arc",
    "energy_drift",
    "fundamental_tensor",
    "geodesic_residuals",
    "hamel_residual",
    "integrate_geodesic",
    "reversibility_residual",
    "spray",
    "spray_eval",
]
