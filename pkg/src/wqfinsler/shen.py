"""Admissibility of phi candidates and the maximal radius b0.

A phi gives a Finsler metric ``alpha*phi(beta/alpha)`` for every one-form of
length below b0 iff, on the open interval ``(-b0, b0)``::

    phi(s) > 0
    phi(s) - s phi'(s) > 0
    phi(s) - s phi'(s) + (b^2 - s^2) phi''(s) > 0     for |s| <= b < b0

The check samples a closed grid.  Grid points strictly inside the open region
must be positive, while points on its boundary (``b = b0`` or ``|s| = b0``)
only need to be non-negative, which is what continuity forces on the limit of
a strict inequality.  That keeps the verdict monotone in the candidate radius
so bisection converges to the supremum rather than to a grid-spacing offset.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from .errors import FinslerError
from .metric import CATALOG_NAMES, SHEN_FAMILIES, PhiSpec, make_phi

DEFAULT_GRID = 512
DEFAULT_TOL = 1e-6
OPERATIONAL_FRACTION = 0.9


@dataclass
class AdmissibilityReport:
    phi_name: str
    condition_A_min: float
    condition_B_min: float
    positivity_min: float
    boundary_min: float
    b0: float
    grid_size: int
    admissible: bool
    offending_s: Optional[float] = None

    def to_dict(self):
        return asdict(self)


def _s_grid(radius, grid_n):
    # odd point count so s = 0 is always sampled
    return np.linspace(-radius, radius, 2 * (grid_n // 2) + 1)


def check_admissible(phi: PhiSpec, b0_candidate: float, grid_n: int = DEFAULT_GRID) -> AdmissibilityReport:
    if not b0_candidate > 0:
        raise ValueError("b0_candidate must be positive")
    if grid_n < 64:
        raise ValueError("grid_n must be at least 64")

    s = _s_grid(b0_candidate, grid_n)
    with np.errstate(all="ignore"):
        f, df, d2f = phi.phi(s), phi.dphi(s), phi.d2phi(s)
    bad = ~(np.isfinite(f) & np.isfinite(df) & np.isfinite(d2f))
    if bad.any():
        return AdmissibilityReport(
            phi.name, math.nan, math.nan, math.nan, math.nan, b0_candidate, grid_n, False,
            offending_s=float(s[np.argmax(bad)]),
        )
    inner = np.abs(s) < b0_candidate
    cond_b = f - s * df
    pos_min = float(f[inner].min())
    b_min = float(cond_b[inner].min())
    boundary = [float(f[~inner].min()), float(cond_b[~inner].min())]

    # condition A on the (b, s) triangle |s| <= b <= b0_candidate
    bs = np.linspace(b0_candidate / grid_n, b0_candidate, grid_n)
    u = np.linspace(-1.0, 1.0, 2 * (grid_n // 2) + 1)
    sa = bs[:, None] * u[None, :]
    with np.errstate(all="ignore"):
        fa, dfa, d2fa = phi.phi(sa), phi.dphi(sa), phi.d2phi(sa)
    cond_a = fa - sa * dfa + (bs[:, None] ** 2 - sa**2) * d2fa
    if not np.all(np.isfinite(cond_a)):
        row, col = np.argwhere(~np.isfinite(cond_a))[0]
        return AdmissibilityReport(
            phi.name, math.nan, b_min, pos_min, math.nan, b0_candidate, grid_n, False,
            offending_s=float(sa[row, col]),
        )
    a_min = float(cond_a[:-1].min())
    boundary.append(float(cond_a[-1].min()))
    boundary_min = min(boundary)
    ok = a_min > 0 and b_min > 0 and pos_min > 0 and boundary_min >= 0
    return AdmissibilityReport(phi.name, a_min, b_min, pos_min, boundary_min, b0_candidate, grid_n, bool(ok))


def find_b0(phi: PhiSpec, tol: float = DEFAULT_TOL, grid_n: int = DEFAULT_GRID, upper: float = 1e3) -> float:
    """Supremum radius where ``check_admissible`` passes, to within ``tol``."""
    if not tol > 0:
        raise ValueError("tol must be positive")
    lo = tol
    if not check_admissible(phi, lo, grid_n).admissible:
        raise FinslerError(f"phi {phi.name!r} is inadmissible even near s = 0")
    hi = 1.0
    while check_admissible(phi, hi, grid_n).admissible:
        lo = hi
        hi *= 2.0
        if hi > upper:
            raise FinslerError(f"phi {phi.name!r} admissible beyond radius {upper}")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if check_admissible(phi, mid, grid_n).admissible:
            lo = mid
        else:
            hi = mid
    return lo


def operational_radius(phi: PhiSpec) -> float:
    return OPERATIONAL_FRACTION * phi.b0


def verify_catalog(grid_n: int = DEFAULT_GRID, phis=None) -> dict:
    """Admissibility of the four explicitly constructed phi's at 0.9*b0.

    ``phis`` overrides the list (used to inject test doubles); an entry whose
    radius cannot be found is reported as a failure.
    """
    if phis is None:
        phis = [make_phi(name) for name in SHEN_FAMILIES]
    entries = []
    for phi in phis:
        try:
            b0 = phi.b0 if phi.name in CATALOG_NAMES else find_b0(phi, grid_n=grid_n)
        except FinslerError as exc:
            entries.append({"phi_name": phi.name, "admissible": False, "error": str(exc)})
            continue
        entries.append(check_admissible(phi, OPERATIONAL_FRACTION * b0, grid_n).to_dict())
    passed = sum(e["admissible"] for e in entries)
    return {"entries": entries, "passed": passed, "total": len(entries), "ok": passed == len(entries)}


verify_theorem_3_3 = verify_catalog