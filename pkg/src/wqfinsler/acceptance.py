"""The acceptance battery: twelve criteria, each returning named checks.

Used by ``wqfinsler suite`` and by ``tests/test_acceptance.py``.  All sampling
comes from named seed streams, so a run is reproducible from its seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq, linprog

from . import spaces
from .distance import check_quasi_axioms, distance, triangle_perimeter, verify_weight_identity, weight_from_distances
from .geodesic import (
    circle_arc,
    energy_drift,
    hamel_residual,
    integrate_geodesic,
    reversibility_residual,
    spray,
)
from .metric import (
    CATALOG_NAMES,
    REVERSIBLE_FAMILIES,
    WEIGHTED_FAMILIES,
    MetricConfig,
    OneForm,
    RiemannBase,
    make_phi,
    minkowski_config,
)
from .seeding import DEFAULT_SEED, stream
from .shen import check_admissible

QUICK = (2, 3, 4, 5, 6)


@dataclass
class Check:
    name: str
    value: float
    limit: float
    kind: str = "le"

    @property
    def passed(self):
        if not math.isfinite(self.value):
            return False
        return self.value <= self.limit if self.kind == "le" else self.value >= self.limit

    def to_dict(self):
        return {"name": self.name, "value": self.value, "tol": self.limit, "kind": self.kind, "passed": self.passed}


@dataclass
class CriterionResult:
    number: int
    title: str
    checks: list = field(default_factory=list)
    info: dict = field(default_factory=dict)

    @property
    def passed(self):
        return bool(self.checks) and all(c.passed for c in self.checks)

    def le(self, name, value, limit):
        self.checks.append(Check(name, float(value), float(limit), "le"))

    def ge(self, name, value, limit):
        self.checks.append(Check(name, float(value), float(limit), "ge"))

    def line(self):
        """Tag, pass count and the three checks closest to (or past) their limits."""

        def used(c):
            # fraction of the allowance consumed; zero-limit counters rank by whether they are hit
            if c.kind == "le":
                return c.value / c.limit if c.limit > 0 else (np.inf if c.value > 0 else -1.0)
            return c.limit / c.value if c.value > 0 else np.inf

        tag = "PASS" if self.passed else "FAIL"
        ok = sum(c.passed for c in self.checks)
        tight = sorted(self.checks, key=used, reverse=True)[:3]
        detail = "; ".join(f"{c.name}={c.value:.3e} ({'<=' if c.kind == 'le' else '>='} {c.limit:g})" for c in tight)
        return f"[{tag}] criterion {self.number:2d}: {self.title} :: {ok}/{len(self.checks)} checks; {detail}"

    def to_dict(self):
        return {
            "criterion": self.number,
            "title": self.title,
            "passed": self.passed,
            "checks": [c.to_dict() for c in self.checks],
            "info": self.info,
        }


# configurations shared by the geodesic criteria


def conformal_config(phi="square", n=3, k=0.6, box=1.5, beta=True) -> MetricConfig:
    """Curved conformal base ``sigma = 0.2x - 0.1y + 0.1z + k|x|^2/2`` with a quadratic potential."""
    sig = (0.0, 0.2, -0.1, 0.1)[: 1 + n] + tuple(_diag_hessian(n, k))
    pot = (0.0, 0.15, 0.1, -0.05)[: 1 + n] + (0.04, -0.03, 0.02, 0.03, 0.01, -0.02)[: n * (n + 1) // 2]
    if not beta:
        pot = (0.0,) * (1 + n)
    return MetricConfig(RiemannBase("conformal", n, sig), OneForm(pot), make_phi(phi), (-box,) * n, (box,) * n)


def _diag_hessian(n, k):
    out = []
    for i in range(n):
        for j in range(i, n):
            out.append(k if i == j else 0.0)
    return out


DRIFT_START = ((0.6, 0.0, 0.1), (0.0, 5.0, 1.25))
DRIFT_CURVATURE = 1.0
REVERSE_START = ((0.6, 0.0, 0.1), (0.0, 3.0, 0.8))


def minkowski_family(name, c=(0.25, -0.15)):
    return minkowski_config(name, c=c)


# criterion implementations


def criterion_1(seed=DEFAULT_SEED, quick=False) -> CriterionResult:
    res = CriterionResult(1, "Shen catalog admissibility and b0")
    for name in CATALOG_NAMES:
        phi = make_phi(name)
        rep = check_admissible(phi, 0.9 * phi.b0)
        res.info[name] = {"b0": phi.b0, "admissible_at_0.9b0": rep.admissible}
        res.ge(f"{name} admissible at 0.9*b0", 1.0 if rep.admissible else 0.0, 1.0)
    exp_root = brentq(lambda s: math.exp(s) * (1.0 - s) + 1.0, 1.0, 2.0, xtol=1e-14)
    expected = {"quad_s2_2s_2": math.sqrt(2.0), "square_shift2": 2.0, "exp_s_1": exp_root}
    for name, ref in expected.items():
        res.le(f"|b0({name}) - {ref:.7f}|", abs(make_phi(name).b0 - ref), 1e-5)
    return res


def criterion_2(seed=DEFAULT_SEED, quick=False) -> CriterionResult:
    res = CriterionResult(2, "closed-form phi', phi'' vs finite differences")
    h = 1e-5
    e1 = e2 = 0.0
    for name in CATALOG_NAMES:
        phi = make_phi(name)
        s = np.linspace(-0.9 * phi.b0, 0.9 * phi.b0, 201)
        fd1 = (phi.phi(s + h) - phi.phi(s - h)) / (2 * h)
        fd2 = (phi.dphi(s + h) - phi.dphi(s - h)) / (2 * h)
        a1 = float(np.max(np.abs(fd1 - phi.dphi(s))))
        a2 = float(np.max(np.abs(fd2 - phi.d2phi(s))))
        res.info[name] = {"dphi": a1, "d2phi": a2}
        e1, e2 = max(e1, a1), max(e2, a2)
    res.le("max |phi' - FD|", e1, 1e-7)
    res.le("max |phi'' - FD|", e2, 1e-7)
    return res


def criterion_3(seed=DEFAULT_SEED, quick=False) -> CriterionResult:
    res = CriterionResult(3, "Minkowski distance: relax and shoot vs closed-form norm")
    for name in WEIGHTED_FAMILIES:
        cfg = minkowski_family(name)
        rng = stream(seed, f"pairs:{name}")
        pairs = rng.uniform(-1.0, 1.0, size=(50, 2, 2))
        er = es = 0.0
        below = 0.0
        flags = 0
        for p, q in pairs:
            ref = distance(cfg, p, q, "norm").value
            r = distance(cfg, p, q, "relax")
            s = distance(cfg, p, q, "shoot")
            flags += (not r.converged) + (not s.converged)
            er = max(er, abs(r.value - ref) / ref)
            es = max(es, abs(s.value - ref) / ref)
            below = max(below, (ref - r.value) / ref)
        res.le(f"{name} relax rel err", er, 1e-3)
        res.le(f"{name} shoot rel err", es, 1e-6)
        res.le(f"{name} relax below norm", below, 1e-12)
        res.le(f"{name} unconverged queries", flags, 0)
    return res


def criterion_4(seed=DEFAULT_SEED, quick=False) -> CriterionResult:
    res = CriterionResult(4, "quasi-metric axioms on sampled points")
    for name in WEIGHTED_FAMILIES:
        cfg = minkowski_family(name)
        pts = stream(seed, f"axioms:{name}").uniform(-1.0, 1.0, size=(20, 2))
        rep = check_quasi_axioms(cfg, pts, tol=1e-6)
        res.le(f"{name} axiom violations", len(rep["violations"]), 0)
        res.info[name] = {"max_asymmetry": rep["max_asymmetry"]}
    cfg = minkowski_config("cos_as", c=(0.25, -0.15), a=0.0)
    pts = stream(seed, "axioms:cos_as0").uniform(-1.0, 1.0, size=(20, 2))
    rep = check_quasi_axioms(cfg, pts, tol=1e-6)
    res.le("cos_as(a=0) axiom violations", len(rep["violations"]), 0)
    res.le("cos_as(a=0) max |d(x,y) - d(y,x)|", rep["max_asymmetry"], 1e-6)
    return res


def criterion_5(seed=DEFAULT_SEED, quick=False) -> CriterionResult:
    res = CriterionResult(5, "weight identities")
    for name in WEIGHTED_FAMILIES:
        cfg = minkowski_family(name)
        pts = stream(seed, f"weights:{name}").uniform(-1.0, 1.0, size=(20, 2))
        rep = verify_weight_identity(cfg, pts[0], pts, tol=1e-3, method="relax")
        res.le(f"{name} d - rho - (w(y)-w(x))/2", rep["identity_residual"], 1e-3)
        res.le(f"{name} |w(x)-w(y)|/2 - rho", rep["lipschitz_excess"], 1e-9)
        wf = weight_from_distances(cfg, pts[0], pts)
        res.le(f"{name} w vs 2 eps (p(x) - p(a))", float(np.max(np.abs(wf.values - wf.predicted))), 1e-9)
    cfg = minkowski_config("square", c=(0.3, 0.0))
    w = weight_from_distances(cfg, (0.0, 0.0), [(1.0, 0.0)], method="relax").values[0]
    res.info["omega_square"] = w
    res.le("|w_(0,0)((1,0)) - 1.2|", abs(w - 1.2), 1e-3)
    return res


_CURVED_2D = dict(sigma=(0.0, 0.2, -0.1, 0.3, 0.05, 0.2), potential=(0.0, 0.15, 0.1, 0.04, -0.03, 0.02))


def curved_2d(name) -> MetricConfig:
    return MetricConfig(
        RiemannBase("conformal", 2, _CURVED_2D["sigma"]),
        OneForm(_CURVED_2D["potential"]),
        make_phi(name),
        (-1.0, -1.0),
        (1.0, 1.0),
    )


def criterion_6(seed=DEFAULT_SEED, quick=False) -> CriterionResult:
    res = CriterionResult(6, "perimeter invariance")
    for name in WEIGHTED_FAMILIES:
        cfg = minkowski_family(name)
        tris = stream(seed, f"triangles:{name}").uniform(-1.0, 1.0, size=(100, 3, 2))
        worst = max(abs(f - b) for f, b in (triangle_perimeter(cfg, *t) for t in tris))
        res.le(f"{name} |fwd - bwd| (norm)", worst, 3e-3)
        if not quick:
            cfg = curved_2d(name)
            tris = stream(seed, f"curved-triangles:{name}").uniform(-0.9, 0.9, size=(10, 3, 2))
            worst = max(abs(f - b) for f, b in (triangle_perimeter(cfg, *t, method="relax") for t in tris))
            res.le(f"{name} |fwd - bwd| (relax, curved base)", worst, 3e-3)
    cfg = minkowski_config("square", c=(0.3, 0.0))
    f, b = triangle_perimeter(cfg, (0.0, 0.0), (1.0, 0.0), (0.0, 1.0))
    res.info["reference_perimeter"] = [f, b]
    res.le("|forward - 3.5677|", abs(f - 3.5677), 1e-3)
    res.le("|backward - 3.5677|", abs(b - 3.5677), 1e-3)
    return res


def christoffel_geodesic(cfg: MetricConfig, x0, y0, times):
    """Independent oracle for a conformal Riemannian base: ``x'' = -Gamma(x)(x', x')``.

    For ``a = e^{2 sigma} I``, ``Gamma^k_ij y^i y^j = 2 (grad sigma . y) y^k - |y|^2 dsigma^k``.
    """
    n = cfg.dimension

    def rhs(_, z):
        x, y = z[:n], z[n:]
        g = cfg.base.grad_sigma(x)
        return np.concatenate([y, -(2.0 * (g @ y) * y - (y @ y) * g)])

    sol = solve_ivp(rhs, (times[0], times[-1]), np.concatenate([x0, y0]), method="DOP853", t_eval=times, rtol=1e-13, atol=1e-13)
    return sol.y[:n].T


def criterion_7(seed=DEFAULT_SEED, quick=False) -> CriterionResult:
    res = CriterionResult(7, "geodesic integrator: energy drift, O(h^4), Christoffel oracle")
    cfg = conformal_config("square", k=DRIFT_CURVATURE)
    x0, y0 = (np.array(v) for v in DRIFT_START)
    drifts = {}
    for steps in (250, 500, 1000):
        c = integrate_geodesic(cfg, x0, y0, 1.0, steps)
        res.le(f"truncated at {steps} steps", float(c.truncated), 0)
        drifts[steps] = energy_drift(cfg, c)["max_rel_drift"]
    res.info["drift"] = drifts
    res.le("relative drift at 1000 steps", drifts[1000], 1e-6)
    res.ge("observed order 250->500", math.log2(drifts[250] / drifts[500]), 3.5)
    res.ge("observed order 500->1000", math.log2(drifts[500] / drifts[1000]), 3.5)

    riem = conformal_config("square", k=0.6, beta=False)
    x0, y0 = np.array([0.2, -0.3, 0.1]), np.array([0.9, 0.4, -0.5])
    c = integrate_geodesic(riem, x0, y0, 1.0, 1000)
    ref = christoffel_geodesic(riem, x0, y0, c.times)
    res.le("max |x_rk4 - x_christoffel|", float(np.max(np.abs(c.points - ref))), 1e-6)
    xs = stream(seed, "spray-points").uniform(-1.0, 1.0, size=(20, 3))
    ys = stream(seed, "spray-vectors").normal(size=(20, 3))
    err = 0.0
    for x, y in zip(xs, ys):
        g = riem.base.grad_sigma(x)
        exact = 0.5 * (2.0 * (g @ y) * y - (y @ y) * g)
        err = max(err, float(np.max(np.abs(spray(riem, x, y) - exact))) / float(y @ y))
    res.le("max |G - Gamma y y / 2| / |y|^2", err, 1e-6)
    return res


def criterion_8(seed=DEFAULT_SEED, quick=False) -> CriterionResult:
    res = CriterionResult(8, "reversed geodesics")
    x0, y0 = (np.array(v) for v in REVERSE_START)
    for name in REVERSIBLE_FAMILIES:
        cfg = conformal_config(name)
        r1 = reversibility_residual(cfg, integrate_geodesic(cfg, x0, y0, 1.0, 1000))
        r2 = reversibility_residual(cfg, integrate_geodesic(cfg, x0, y0, 1.0, 2000))
        res.info[name] = {"1000": r1, "2000": r2}
        res.le(f"{name} residual at 2000 steps", r2, 1e-4)
        res.ge(f"{name} reduction 1000->2000", r1 / r2, 3.5)
    cfg = conformal_config("exp_s_1")
    res.info["exp_s_1 (not decomposable)"] = reversibility_residual(cfg, integrate_geodesic(cfg, x0, y0, 1.0, 2000))
    # a circle is not a geodesic of a flat Minkowski metric (geodesics are lines)
    cfg = minkowski_family("square_shift2")
    arc = circle_arc((0.0, 0.0), 0.5, math.pi, nodes=2001)
    res.ge("circular-arc control residual", reversibility_residual(cfg, arc), 0.1)
    return res


def criterion_9(seed=DEFAULT_SEED, quick=False) -> CriterionResult:
    res = CriterionResult(9, "projective flatness (Hamel)")
    flat = minkowski_config("square", c=(0.3, -0.2, 0.1))
    curved = MetricConfig(
        RiemannBase("conformal", 3, (0.0, 0.2, -0.1, 0.1) + tuple(_diag_hessian(3, 0.3))),
        OneForm((0.0, 0.3, -0.2, 0.1)),
        make_phi("square"),
        (-1.0,) * 3,
        (1.0,) * 3,
    )
    xs = stream(seed, "hamel-points").uniform(-0.9, 0.9, size=(20, 3))
    ys = stream(seed, "hamel-vectors").normal(size=(20, 3))
    res.le("flat alpha + exact beta residual", max(hamel_residual(flat, x, y) for x, y in zip(xs, ys)), 1e-6)
    res.ge("curved-base control residual", min(hamel_residual(curved, x, y) for x, y in zip(xs, ys)), 1e-3)
    return res


def lp_weight_oracle(m: spaces.QuasiMetricMatrix):
    """Least-L1 violation of ``w_i - w_j = d_ji - d_ij`` over all ordered pairs, by linear programming.

    Returns (violation, w).  The instance is weightable iff the violation is zero.
    """
    n = m.n
    rows = []
    rhs = []
    for i in range(n):
        for j in range(n):
            if i != j:
                r = np.zeros(n)
                r[i], r[j] = 1.0, -1.0
                rows.append(r)
                rhs.append(m.d[j, i] - m.d[i, j])
    A = np.array(rows)
    b = np.array(rhs)
    k = len(b)
    # variables: w (free), t >= 0 with -t <= A w - b <= t
    cost = np.concatenate([np.zeros(n), np.ones(k)])
    A_ub = np.block([[A, -np.eye(k)], [-A, -np.eye(k)]])
    b_ub = np.concatenate([b, -b])
    bounds = [(None, None)] * n + [(0, None)] * k
    sol = linprog(cost, A_ub=A_ub, b_ub=b_ub, bounds=bounds, method="highs")
    return float(sol.fun), sol.x[:n]


def _finite_instances(seed, count):
    rng = stream(seed, "finite-instances")
    for idx in range(count):
        n = int(rng.integers(4, 7))
        if idx % 2 == 0:
            yield spaces.random_weightable(rng, n).space
        else:
            yield spaces.random_quasi_metric(rng, n)


def criterion_10(seed=DEFAULT_SEED, quick=False) -> CriterionResult:
    res = CriterionResult(10, "finite weightability vs LP oracle")
    disagree = perim_disagree = 0
    shift = 0.0
    count = 0
    weightable = 0
    for m in _finite_instances(seed, 1000):
        count += 1
        w = spaces.weigh(m)
        viol, w_lp = lp_weight_oracle(m)
        lp_ok = viol <= 1e-9
        disagree += w.weightable != lp_ok
        perim_ok = float(np.max(np.abs(spaces.perimeter_defects(m)))) <= spaces.TOL
        perim_disagree += w.weightable != perim_ok
        if w.weightable and lp_ok:
            weightable += 1
            delta = w.space.omega - w_lp
            shift = max(shift, float(np.max(np.abs(delta - delta.mean()))))
    res.info.update(instances=count, weightable=weightable)
    res.le("weigh vs LP disagreements", disagree, 0)
    res.le("weigh vs perimeter-equality disagreements", perim_disagree, 0)
    res.le("max non-constant part of w - w_LP", shift, 1e-9)
    return res


def criterion_11(seed=DEFAULT_SEED, quick=False) -> CriterionResult:
    res = CriterionResult(11, "embedding into the generalized bundle")
    rng = stream(seed, "embedding")
    eq = ew = 0.0
    bad = 0
    for _ in range(200):
        ws = spaces.random_weightable(rng, int(rng.integers(3, 9)))
        for lam in (1, 2, 5):
            emb = spaces.embed(ws, lam)
            eq, ew = max(eq, emb.max_q_error), max(ew, emb.max_w_error)
            image = spaces.WeightedSpace(
                spaces.QuasiMetricMatrix(None, emb.bundle.Q_matrix(emb.psi)), emb.bundle.W_vector(emb.psi)
            )
            ok = emb.injective and spaces.morphism_check(ws, image, range(ws.space.n), "isomorphism", tol=1e-12)["ok"]
            bad += not ok
    res.le("max |Q(psi x, psi y) - q(x, y)|", eq, 1e-12)
    res.le("max |W(psi x) - w(x)|", ew, 1e-12)
    res.le("embeddings failing isomorphism onto image", bad, 0)
    return res


def criterion_12(seed=DEFAULT_SEED, quick=False) -> CriterionResult:
    res = CriterionResult(12, "graph reconstruction")
    rng = stream(seed, "graphs")
    eq = 0.0
    lip_fail = neg = 0
    for _ in range(200):
        ws = spaces.random_weightable(rng, int(rng.integers(3, 9)))
        w = spaces.weigh(ws.space)
        try:
            rec = spaces.reconstruct_as_graph(w.space)
        except spaces.LipschitzError:
            lip_fail += 1
            continue
        ev = spaces.graph_space(rec.graph)
        eq = max(eq, float(np.max(np.abs(ev.Q - ws.d))))
        neg += not ev.nonnegative
        # an unrelated 1-Lipschitz f on the same base
        base = rec.graph.base
        anchor = int(rng.integers(0, len(base)))
        f = rng.uniform(0.0, 1.0) * base[anchor] + rng.normal()
        neg += not spaces.graph_space(spaces.GraphSpace(base, f, 1)).nonnegative
    res.le("max |Q_graph - q|", eq, 1e-12)
    res.le("Lipschitz check failures", lip_fail, 0)
    res.le("lambda=1 graphs with negative Q", neg, 0)
    return res


CRITERIA = {
    1: criterion_1,
    2: criterion_2,
    3: criterion_3,
    4: criterion_4,
    5: criterion_5,
    6: criterion_6,
    7: criterion_7,
    8: criterion_8,
    9: criterion_9,
    10: criterion_10,
    11: criterion_11,
    12: criterion_12,
}


def run_suite(seed=DEFAULT_SEED, quick=False, only=None):
    ids = only or (QUICK if quick else tuple(CRITERIA))
    return [CRITERIA[i](seed, quick) for i in ids]
