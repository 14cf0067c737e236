"""Induced quasi-distance, weights built from it, and the weighted-space checks.

Three ways to compute ``d_F(p, q)``:

* ``norm``: closed form ``F(q - p)``, Minkowski configs only; the exact oracle.
* ``relax``: minimize the midpoint-rule length of an N-node polyline with
  box-bounded L-BFGS-B, starting from the straight segment.
* ``shoot``: Newton iteration on the initial velocity of an RK4 geodesic so
  that it lands on q at t = 1; the distance is the integrated F-speed.

Curves are restricted to the domain box, so the infimum is the in-box one.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import minimize

from . import spaces
from .errors import AdmissibilityError, DomainError
from .geodesic import BOX_SLACK, Curve, x_step
from .metric import MetricConfig

METHODS = ("norm", "relax", "shoot")
RELAX_NODES = 64
RELAX_MAX_ITERS = 500
SHOOT_STEPS = 400
SHOOT_MAX_ITERS = 30
POINT_TOL = 1e-12


@dataclass
class DistanceQuery:
    source: np.ndarray
    target: np.ndarray
    method: str
    value: float
    converged: bool = True
    iterations: int = 0
    residual: float = 0.0
    certificate: Optional[Curve] = None

    def to_dict(self):
        return {
            "from": self.source.tolist(),
            "to": self.target.tolist(),
            "method": self.method,
            "value": self.value,
            "converged": self.converged,
            "iterations": self.iterations,
            "residual": self.residual,
        }


def _point(cfg, p, name):
    p = np.asarray(p, dtype=float)
    if p.shape != (cfg.dimension,):
        raise DomainError(f"{name} must have {cfg.dimension} coordinates")
    if not cfg.contains(p):
        raise DomainError(f"{name}={p.tolist()} outside domain box")
    return p


def _same(cfg, p, q):
    return float(np.linalg.norm(p - q)) <= POINT_TOL * cfg.diameter


def _polyline_curve(nodes):
    t = np.linspace(0.0, 1.0, len(nodes))
    return Curve(t, nodes, np.gradient(nodes, t, axis=0))


def _relax(cfg, p, q, nodes, max_iters):
    if nodes < 3:
        raise ValueError("relax needs at least 3 nodes")
    k = cfg.kernel
    n = cfg.dimension
    t = np.linspace(0.0, 1.0, nodes)[:, None]
    start = (1.0 - t) * p + t * q

    def full(z):
        pts = np.empty((nodes, n))
        pts[0], pts[-1] = p, q
        pts[1:-1] = z.reshape(nodes - 2, n)
        return pts

    def fun(z):
        length, grad = k.polyline(full(z))
        return length, grad[1:-1].ravel()

    bounds = list(zip(np.tile(cfg.lo, nodes - 2), np.tile(cfg.hi, nodes - 2)))
    res = minimize(
        fun,
        start[1:-1].ravel(),
        jac=True,
        method="L-BFGS-B",
        bounds=bounds,
        options={"maxiter": max_iters, "ftol": 1e-15, "gtol": 1e-10},
    )
    pts = full(res.x)
    length = k.polyline(pts)[0]
    return length, bool(res.success), int(res.nit), float(np.max(np.abs(res.jac))) if res.jac.size else 0.0, pts


def _shoot_end(cfg, p, v, steps):
    slack = BOX_SLACK * cfg.diameter
    pts, vel, truncated = cfg.kernel.rk4(p, v, 1.0, steps, x_step(cfg), cfg.lo - slack, cfg.hi + slack)
    if truncated:
        return None
    return pts, vel


def _shoot(cfg, p, q, steps, max_iters):
    scale = cfg.diameter
    v = q - p
    tol = 1e-11 * scale
    best = None
    it = 0
    for it in range(1, max_iters + 1):
        try:
            run = _shoot_end(cfg, p, v, steps)
        except AdmissibilityError:
            run = None
        if run is None:
            break
        pts, vel = run
        r = pts[-1] - q
        err = float(np.linalg.norm(r))
        best = (err, pts, vel)
        if err <= tol:
            break
        h = 1e-7 * max(1.0, float(np.linalg.norm(v)))
        J = np.empty((cfg.dimension, cfg.dimension))
        ok = True
        for j in range(cfg.dimension):
            e = np.zeros(cfg.dimension)
            e[j] = h
            try:
                rp = _shoot_end(cfg, p, v + e, steps)
                rm = _shoot_end(cfg, p, v - e, steps)
            except AdmissibilityError:
                rp = rm = None
            if rp is None or rm is None:
                ok = False
                break
            J[:, j] = (rp[0][-1] - rm[0][-1]) / (2.0 * h)
        if not ok:
            break
        step = np.linalg.solve(J, -r)
        # damp until the residual decreases and the curve stays in the box
        lam = 1.0
        while lam > 1e-4:
            try:
                trial = _shoot_end(cfg, p, v + lam * step, steps)
            except AdmissibilityError:
                trial = None
            if trial is not None and np.linalg.norm(trial[0][-1] - q) < err:
                break
            lam *= 0.5
        v = v + lam * step
    if best is None:
        return np.nan, False, it, np.inf, None
    err, pts, vel = best
    t = np.linspace(0.0, 1.0, len(pts))
    curve = Curve(t, pts, vel)
    value = float(np.trapezoid(curve.speeds(cfg), t))
    return value, err <= tol, it, err, curve


def distance(cfg: MetricConfig, source, target, method="norm", nodes=RELAX_NODES, max_iters=None, steps=SHOOT_STEPS) -> DistanceQuery:
    if method not in METHODS:
        raise ValueError(f"method must be one of {METHODS}")
    p = _point(cfg, source, "from")
    q = _point(cfg, target, "to")
    if _same(cfg, p, q):
        return DistanceQuery(p, q, method, 0.0)
    if method == "norm":
        if not cfg.is_minkowski:
            raise DomainError("norm method needs a Minkowski config (x-independent coefficients)")
        return DistanceQuery(p, q, method, float(cfg.kernel.F(p, q - p)))
    if method == "relax":
        value, ok, nit, res, pts = _relax(cfg, p, q, nodes, max_iters or RELAX_MAX_ITERS)
        return DistanceQuery(p, q, method, value, ok, nit, res, _polyline_curve(pts))
    value, ok, nit, res, curve = _shoot(cfg, p, q, steps, max_iters or SHOOT_MAX_ITERS)
    return DistanceQuery(p, q, method, value, ok, nit, res, curve)


def distance_matrix(cfg: MetricConfig, points, method="norm", **kw) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    m = len(pts)
    D = np.zeros((m, m))
    for i in range(m):
        for j in range(m):
            if i != j:
                D[i, j] = distance(cfg, pts[i], pts[j], method, **kw).value
    return D


def _identical(cfg, pts):
    gap = np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=-1)
    return gap <= POINT_TOL * cfg.diameter


def check_quasi_axioms(cfg: MetricConfig, sample_points, tol=1e-6, method="norm", **kw) -> dict:
    pts = np.asarray(sample_points, dtype=float)
    if len(pts) < 3:
        raise ValueError("need at least 3 sample points")
    D = distance_matrix(cfg, pts, method, **kw)
    rep = spaces.check_axioms(spaces.QuasiMetricMatrix(None, D), tol=tol, identical=_identical(cfg, pts))
    out = rep.to_dict()
    out["max_asymmetry"] = float(np.max(np.abs(D - D.T)))
    out["points"] = len(pts)
    return out


@dataclass
class WeightFunction:
    base_point: np.ndarray
    points: np.ndarray
    values: np.ndarray
    predicted: Optional[np.ndarray] = None
    converged: bool = True
    forward: np.ndarray = field(default=None, repr=False)
    backward: np.ndarray = field(default=None, repr=False)

    def to_dict(self):
        out = {
            "base": self.base_point.tolist(),
            "points": self.points.tolist(),
            "omega": self.values.tolist(),
            "converged": self.converged,
        }
        if self.predicted is not None:
            out["predicted"] = self.predicted.tolist()
            out["max_prediction_error"] = float(np.max(np.abs(self.values - self.predicted))) if len(self.values) else 0.0
        return out


def weight_from_distances(cfg: MetricConfig, a, points, method="norm", **kw) -> WeightFunction:
    """``w_a(x) = d(a, x) - d(x, a)``.

    When phi splits as ``phi0 + eps*s`` the prediction ``2 eps (p(x) - p(a))``
    (p the potential of beta) is attached for comparison.
    """
    a = _point(cfg, a, "base")
    pts = np.asarray(points, dtype=float).reshape(-1, cfg.dimension)
    fwd = np.empty(len(pts))
    bwd = np.empty(len(pts))
    ok = True
    for i, x in enumerate(pts):
        qf = distance(cfg, a, x, method, **kw)
        qb = distance(cfg, x, a, method, **kw)
        fwd[i], bwd[i] = qf.value, qb.value
        ok = ok and qf.converged and qb.converged
    eps = cfg.phi.epsilon
    predicted = None
    if eps is not None:
        pa = cfg.one_form.potential(a)
        predicted = np.array([2.0 * eps * (cfg.one_form.potential(x) - pa) for x in pts])
    return WeightFunction(a, pts, fwd - bwd, predicted, ok, fwd, bwd)


def symmetrize(d_xy, d_yx) -> float:
    if d_xy < 0 or d_yx < 0:
        raise ValueError("distances must be non-negative")
    return 0.5 * (d_xy + d_yx)


def verify_weight_identity(cfg: MetricConfig, a, points, tol=1e-9, method="norm", **kw) -> dict:
    """Check ``d = rho + (w(y) - w(x))/2`` and ``|w(x) - w(y)|/2 <= rho`` on all pairs."""
    pts = np.asarray(points, dtype=float)
    if len(pts) < 2:
        raise ValueError("need at least 2 points")
    D = distance_matrix(cfg, pts, method, **kw)
    wf = weight_from_distances(cfg, a, pts, method, **kw)
    w = wf.values
    rho = 0.5 * (D + D.T)
    identity = D - rho - 0.5 * (w[None, :] - w[:, None])
    bound = 0.5 * np.abs(w[:, None] - w[None, :]) - rho
    r_id = float(np.max(np.abs(identity)))
    r_bd = float(np.max(bound))
    return {
        "identity_residual": r_id,
        "lipschitz_excess": r_bd,
        "tol": tol,
        "ok": bool(r_id <= tol and r_bd <= tol),
        "omega": w.tolist(),
    }


verify_lemma_4_1 = verify_weight_identity


def triangle_perimeter(cfg: MetricConfig, x, y, z, method="norm", **kw):
    """Forward ``d(x,y)+d(y,z)+d(z,x)`` and backward ``d(x,z)+d(z,y)+d(y,x)`` perimeters."""
    P = [np.asarray(v, dtype=float) for v in (x, y, z)]
    for i in range(3):
        for j in range(i + 1, 3):
            if _same(cfg, P[i], P[j]):
                raise DomainError("triangle vertices must be distinct")

    def d(u, v):
        return distance(cfg, u, v, method, **kw).value

    fwd = d(P[0], P[1]) + d(P[1], P[2]) + d(P[2], P[0])
    bwd = d(P[0], P[2]) + d(P[2], P[1]) + d(P[1], P[0])
    return fwd, bwd


__all__ = [
    "DistanceQuery",
    "METHODS",
    "WeightFunction",
    "check_quasi_axioms",
    "distance",
    "distance_matrix",
    "symmetrize",
    "triangle_perimeter",
    "verify_lemma_4_1",
    "verify_weight_identity",
    "weight_from_distances",
]
