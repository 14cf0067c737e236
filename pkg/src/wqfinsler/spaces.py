"""Finite weighted quasi-metric spaces, generalized bundles and Lipschitz graphs.

Everything here works on exact finite data, so equality checks use a
round-off scale tolerance (``TOL = 1e-9``) rather than solver tolerances.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import ConfigError, FinslerError

TOL = 1e-9
MAX_WITNESSES = 20


@dataclass
class QuasiMetricMatrix:
    labels: list
    d: np.ndarray

    def __post_init__(self):
        self.d = np.asarray(self.d, dtype=float)
        if self.d.ndim != 2 or self.d.shape[0] != self.d.shape[1]:
            raise ConfigError("distance matrix must be square", "d")
        if self.labels is None:
            self.labels = list(range(len(self.d)))
        if len(self.labels) != len(self.d):
            raise ConfigError("need one label per row", "labels")
        if not np.all(np.isfinite(self.d)):
            raise ConfigError("distance matrix has non-finite entries", "d")

    @property
    def n(self):
        return len(self.d)

    def symmetrization(self) -> np.ndarray:
        return 0.5 * (self.d + self.d.T)


@dataclass
class WeightedSpace:
    space: QuasiMetricMatrix
    omega: np.ndarray
    tol: float = TOL

    def __post_init__(self):
        self.omega = np.asarray(self.omega, dtype=float)
        if self.omega.shape != (self.space.n,):
            raise ConfigError("need one weight per point", "omega")
        err = self.weight_defect()
        if err > self.tol:
            raise ConfigError(f"weight axiom violated by {err:.3e}", "omega")

    @property
    def d(self):
        return self.space.d

    def weight_defect(self) -> float:
        """``max |d(x,y) + w(x) - d(y,x) - w(y)|``."""
        d, w = self.space.d, self.omega
        return float(np.max(np.abs(d + w[:, None] - d.T - w[None, :])))

    def shifted_nonnegative(self) -> "WeightedSpace":
        return WeightedSpace(self.space, self.omega - self.omega.min(), self.tol)


@dataclass
class AxiomReport:
    valid: bool
    violations: list = field(default_factory=list)
    counts: dict = field(default_factory=dict)
    max_triangle_excess: float = 0.0

    def to_dict(self):
        return {
            "valid": self.valid,
            "violations": self.violations,
            "counts": self.counts,
            "max_triangle_excess": self.max_triangle_excess,
        }


def _witnesses(mask, kind, values):
    idx = np.argwhere(mask)
    return [
        {"axiom": kind, "indices": [int(i) for i in row], "value": float(values[tuple(row)])}
        for row in idx[:MAX_WITNESSES]
    ]


def check_axioms(m: QuasiMetricMatrix, tol=TOL, generalized=False, identical=None) -> AxiomReport:
    """Diagonal zero, positivity, triangle inequality and separation.

    ``generalized`` drops positivity (bundle and graph quasi-metrics may be
    negative).  ``identical`` marks pairs that are the same underlying point.
    """
    d = m.d
    n = m.n
    same = np.eye(n, dtype=bool) if identical is None else np.asarray(identical, dtype=bool)
    viol = []
    counts = {}

    diag_bad = np.abs(np.diag(d)) > tol
    counts["diagonal"] = int(diag_bad.sum())
    viol += [{"axiom": "diagonal", "indices": [int(i)], "value": float(d[i, i])} for i in np.flatnonzero(diag_bad)[:MAX_WITNESSES]]

    if not generalized:
        pos_bad = (~same) & (d <= 0.0)
        counts["positivity"] = int(pos_bad.sum())
        viol += _witnesses(pos_bad, "positivity", d)
        same_bad = same & (np.abs(d) > tol)
        counts["identical_nonzero"] = int(same_bad.sum())
        viol += _witnesses(same_bad, "identical_nonzero", d)

    # excess[i, j, k] = d[i, k] - d[i, j] - d[j, k]
    excess = d[:, None, :] - d[:, :, None] - d[None, :, :]
    tri_bad = excess > tol
    counts["triangle"] = int(tri_bad.sum())
    viol += _witnesses(tri_bad, "triangle", excess)
    max_excess = float(excess.max()) if n else 0.0

    sep_bad = (~same) & (np.abs(d) <= tol) & (np.abs(d.T) <= tol)
    counts["separation"] = int(np.triu(sep_bad, 1).sum())
    viol += _witnesses(np.triu(sep_bad, 1), "separation", d)

    return AxiomReport(not viol, viol, counts, max_excess)


def antisymmetric_part(m: QuasiMetricMatrix) -> np.ndarray:
    return m.d - m.d.T


def perimeter_defects(m: QuasiMetricMatrix) -> np.ndarray:
    """``forward - backward`` oriented perimeter for every ordered triple (i, j, k)."""
    d = m.d
    fwd =d[:, :, None] + d[None, :, :] + d.T[:, None, :]
    bwd = d.T[:, :, None] + d.T[None, :, :] + d[:, None, :]
    return fwd - bwd


@dataclass
class WeighResult:
    weightable: bool
    space: Optional[WeightedSpace]
    max_defect: float
    witness: Optional[tuple] = None

    def to_dict(self):
        out = {"weightable": self.weightable, "max_cocycle_defect": self.max_defect}
        if self.space is not None:
            out["omega"] = self.space.omega.tolist()
        if self.witness is not None:
            out["witness"] = list(self.witness)
        return out


def weigh(m: QuasiMetricMatrix, tol=TOL) -> WeighResult:
    """Decide weightability through the cocycle condition on ``A = d - d^T``.

    ``A[i, j] + A[j, k] = A[i, k]`` for all triples iff a generalized weight
    exists; the weight is then ``w[j] = A[0, j]`` (so ``w[0] = 0``).
    """
    A = antisymmetric_part(m)
    defect = A[:, :, None] + A[None, :, :] - A[:, None, :]
    worst = float(np.max(np.abs(defect))) if m.n else 0.0
    if worst > tol:
        i, j, k = np.unravel_index(np.argmax(np.abs(defect)), defect.shape)
        return WeighResult(False, None, worst, (int(i), int(j), int(k)))
    omega = A[0].copy() if m.n else np.zeros(0)
    return WeighResult(True, WeightedSpace(m, omega, tol=max(tol, 4 * worst)), worst)


@dataclass(frozen=True)
class BundlePoint:
    base_index: int
    xi: float


def _check_lambda(lam):
    if isinstance(lam, bool) or int(lam) != lam or lam < 1:
        raise ValueError(f"lambda must be an integer >= 1, got {lam!r}")
    return int(lam)


def _check_metric(base, tol=TOL):
    base = np.asarray(base, dtype=float)
    if base.ndim != 2 or base.shape[0] != base.shape[1]:
        raise ValueError("base must be a square matrix")
    asym = float(np.max(np.abs(base - base.T))) if base.size else 0.0
    if asym > tol:
        raise ValueError(f"base is not symmetric (max asymmetry {asym:.3e})")
    return base


class GeneralizedBundle:
    """``N = S x R`` with ``Q((x,a),(y,b)) = d(x,y) + lam (b - a)`` and ``W(x,a) = 2 lam a``."""

    def __init__(self, base, lam=1):
        self.base = _check_metric(base)
        self.lam = _check_lambda(lam)

    def Q(self, u: BundlePoint, v: BundlePoint) -> float:
        return float(self.base[u.base_index, v.base_index] + self.lam * (v.xi - u.xi))

    def W(self, u: BundlePoint) -> float:
        return 2.0 * self.lam * u.xi

    def Q_matrix(self, pts) -> np.ndarray:
        idx = np.array([p.base_index for p in pts], dtype=int)
        xi = np.array([p.xi for p in pts], dtype=float)
        return self.base[np.ix_(idx, idx)] + self.lam * (xi[None, :] - xi[:, None])

    def W_vector(self, pts) -> np.ndarray:
        return np.array([self.W(p) for p in pts])


def bundle(base, lam=1) -> GeneralizedBundle:
    return GeneralizedBundle(base, lam)


@dataclass
class Embedding:
    bundle: GeneralizedBundle
    psi: list
    max_q_error: float
    max_w_error: float
    injective: bool

    def to_dict(self):
        return {
            "lambda": self.bundle.lam,
            "psi": [[p.base_index, p.xi] for p in self.psi],
            "base": self.bundle.base.tolist(),
            "max_q_error": self.max_q_error,
            "max_w_error": self.max_w_error,
            "injective": self.injective,
        }


def embed(ws: WeightedSpace, lam=1, tol=1e-12) -> Embedding:
    """Embed into the bundle over the symmetrization: ``psi(x) = (x, w(x) / (2 lam))``."""
    lam = _check_lambda(lam)
    rho = ws.space.symmetrization()
    bnd = GeneralizedBundle(rho, lam)
    psi = [BundlePoint(i, float(w) / (2.0 * lam)) for i, w in enumerate(ws.omega)]
    q_err = float(np.max(np.abs(bnd.Q_matrix(psi) - ws.d))) if psi else 0.0
    w_err = float(np.max(np.abs(bnd.W_vector(psi) - ws.omega))) if psi else 0.0
    injective = len({(p.base_index, p.xi) for p in psi}) == len(psi)
    scale = max(1.0, float(np.max(np.abs(ws.d)))) if psi else 1.0
    if q_err > tol * scale or w_err > tol * scale:
        raise FinslerError(f"embedding check failed: |dQ|={q_err:.3e}, |dW|={w_err:.3e}")
    return Embedding(bnd, psi, q_err, w_err, injective)


@dataclass
class GraphSpace:
    base: np.ndarray
    f: np.ndarray
    lam: int = 1

    def __post_init__(self):
        self.base = _check_metric(self.base)
        self.f = np.asarray(self.f, dtype=float)
        self.lam = _check_lambda(self.lam)
        if self.f.shape != (len(self.base),):
            raise ConfigError("need one f value per base point", "f")

    def lipschitz_witness(self, tol=TOL):
        """First pair with ``|f(x) - f(y)| > d(x, y)``, or None."""
        gap = np.abs(self.f[:, None] - self.f[None, :]) - self.base
        if gap.size and gap.max() > tol:
            i, j = np.unravel_index(np.argmax(gap), gap.shape)
            return int(i), int(j)
        return None


class LipschitzError(ValueError):
    def __init__(self, pair, gap):
        super().__init__(f"f is not 1-Lipschitz on pair {pair} (excess {gap:.3e})")
        self.pair = pair


@dataclass
class GraphEvaluation:
    Q: np.ndarray
    W: np.ndarray
    lipschitz: bool
    nonnegative: bool
    min_offdiagonal: float

    def to_dict(self):
        return {
            "Q": self.Q.tolist(),
            "W": self.W.tolist(),
            "lipschitz": self.lipschitz,
            "nonnegative": self.nonnegative,
            "min_offdiagonal": self.min_offdiagonal,
        }


def graph_space(gs: GraphSpace, require_lipschitz=True, tol=TOL) -> GraphEvaluation:
    """``Q = d(x,y) + lam (f(y) - f(x))`` and ``W = 2 lam f`` on the graph of f.

    With ``lam == 1`` and ``require_lipschitz`` the 1-Lipschitz precondition is
    enforced, which makes Q non-negative.
    """
    witness = gs.lipschitz_witness(tol)
    if witness is not None and gs.lam == 1 and require_lipschitz:
        i, j = witness
        raise LipschitzError(witness, float(abs(gs.f[i] - gs.f[j]) - gs.base[i, j]))
    Q = gs.base + gs.lam * (gs.f[None, :] - gs.f[:, None])
    W = 2.0 * gs.lam * gs.f
    n = len(gs.f)
    off = Q[~np.eye(n, dtype=bool)]
    min_off = float(off.min()) if off.size else 0.0
    return GraphEvaluation(Q, W, witness is None, bool(min_off >= -tol), min_off)


@dataclass
class GraphReconstruction:
    graph: GraphSpace
    max_q_error: float
    max_w_error: float

    def to_dict(self):
        return {
            "base": self.graph.base.tolist(),
            "f": self.graph.f.tolist(),
            "max_q_error": self.max_q_error,
            "max_w_error": self.max_w_error,
        }


def reconstruct_as_graph(ws: WeightedSpace, tol=TOL) -> GraphReconstruction:
    """Base metric ``rho`` and ``f = w/2``; q is then ``rho(x,y) + f(y) - f(x)``."""
    gs = GraphSpace(ws.space.symmetrization(), 0.5 * ws.omega, 1)
    witness = gs.lipschitz_witness(tol)
    if witness is not None:
        i, j = witness
        raise LipschitzError(witness, float(abs(gs.f[i] - gs.f[j]) - gs.base[i, j]))
    ev = graph_space(gs, tol=tol)
    q_err = float(np.max(np.abs(ev.Q - ws.d))) if ws.space.n else 0.0
    w_err = float(np.max(np.abs(ev.W - ws.omega))) if ws.space.n else 0.0
    return GraphReconstruction(gs, q_err, w_err)


MORPHISM_KINDS = ("morphism", "isometric", "isomorphism")


def morphism_check(src: WeightedSpace, dst: WeightedSpace, mapping, kind="morphism", tol=TOL) -> dict:
    """Check a map between weighted spaces.

    morphism: ``q(x,y) >= q'(psi x, psi y)`` and ``w(x) >= w'(psi x)``;
    isometric additionally ``q(x,y) <= q'(psi x, psi y)``;
    isomorphism: bijective with equal distances and weights.
    """
    if kind not in MORPHISM_KINDS:
        raise ValueError(f"kind must be one of {MORPHISM_KINDS}")
    psi = np.asarray(mapping, dtype=int)
    if psi.shape != (src.space.n,):
        raise ValueError("mapping must have one target index per source point")
    if psi.size and (psi.min() < 0 or psi.max() >= dst.space.n):
        raise ValueError("mapping index out of range")
    qd = src.d - dst.d[np.ix_(psi, psi)]
    wd = src.omega - dst.omega[psi]
    failures = []
    if kind == "isomorphism":
        bij = len(set(psi.tolist())) == len(psi) == dst.space.n
        if not bij:
            failures.append({"check": "bijection"})
        bad_q = np.abs(qd) > tol
        bad_w = np.abs(wd) > tol
    else:
        bad_q = qd < -tol
        if kind == "isometric":
            bad_q |= qd > tol
        bad_w = wd < -tol
    failures += [{"check": "distance", "pair": [int(i), int(j)], "gap": float(qd[i, j])} for i, j in np.argwhere(bad_q)[:MAX_WITNESSES]]
    failures += [{"check": "weight", "point": int(i), "gap": float(wd[i])} for i in np.flatnonzero(bad_w)[:MAX_WITNESSES]]
    return {"kind": kind, "ok": not failures, "failures": failures}


def random_weightable(rng: np.random.Generator, n: int, dim=2) -> WeightedSpace:
    """Euclidean point cloud plus a 1-Lipschitz potential, shifted by a random offset."""
    pts = rng.uniform(-1.0, 1.0, size=(n, dim))
    rho = np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=-1)
    u = rng.normal(size=dim)
    u /= np.linalg.norm(u)
    c = rng.uniform(0.1, 0.95)
    f = c * pts @ u + rng.uniform(-2.0, 2.0)
    q = rho + (f[None, :] - f[:, None])
    np.fill_diagonal(q, 0.0)
    return WeightedSpace(QuasiMetricMatrix(list(range(n)), q), 2.0 * f)


def random_quasi_metric(rng: np.random.Generator, n: int) -> QuasiMetricMatrix:
    """Shortest-path closure of a random positive asymmetric matrix."""
    d = rng.uniform(0.2, 2.0, size=(n, n))
    np.fill_diagonal(d, 0.0)
    for k in range(n):
        d = np.minimum(d, d[:, k : k + 1] + d[k : k + 1, :])
    return QuasiMetricMatrix(list(range(n)), d)


def load_space(path_or_doc):
    """Read ``{"labels", "d", "omega"?}``; returns (QuasiMetricMatrix, omega or None)."""
    if isinstance(path_or_doc, dict):
        doc = path_or_doc
    else:
        try:
            doc = json.loads(Path(path_or_doc).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON: {exc}") from None
    if not isinstance(doc, dict) or "d" not in doc:
        raise ConfigError("missing field", "d")
    try:
        d = np.asarray(doc["d"], dtype=float)
    except (TypeError, ValueError):
        raise ConfigError("distance matrix must be numeric", "d") from None
    m = QuasiMetricMatrix(doc.get("labels") or list(range(len(d))), d)
    omega = doc.get("omega")
    if omega is not None:
        try:
            omega = np.asarray(omega, dtype=float)
        except (TypeError, ValueError):
            raise ConfigError("omega must be numeric", "omega") from None
    return m, omega


def dump_space(m: QuasiMetricMatrix, omega=None) -> dict:
    doc = {"labels": list(m.labels), "d": m.d.tolist()}
    if omega is not None:
        doc["omega"] = np.asarray(omega, dtype=float).tolist()
    return doc
