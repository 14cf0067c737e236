"""Pure-Python kernels (numpy), used when the compiled extension is absent.

Same surface as ``_ckernels``: a ``Metric`` object built from packed
coefficients, evaluating F and its closed-form derivatives, the geodesic
spray, fixed-step RK4 geodesics and the discrete polyline length.
"""

import math

import numpy as np

from .errors import AdmissibilityError, DomainError

KIND_POLY = 0
KIND_COS_AS = 1
KIND_EXP = 2

# five-point central first-derivative stencil at offsets (2, 1, -1, -2)
_OFFSETS = (2.0, 1.0, -1.0, -2.0)


def _five_point(v, h):
    # difference form so identical samples cancel exactly
    return ((v[3] - v[0]) + 8.0 * (v[1] - v[2])) / (12.0 * h)

BACKEND = "python"


class Metric:
    def __init__(self, n, sig0, sig_l, sig_H, pot_l, pot_H, phi_kind, phi_coef, b0):
        self.n = int(n)
        self.sig0 = float(sig0)
        self.sig_l = np.array(sig_l, dtype=float)
        self.sig_H = np.array(sig_H, dtype=float).reshape(self.n, self.n)
        self.pot_l = np.array(pot_l, dtype=float)
        self.pot_H = np.array(pot_H, dtype=float).reshape(self.n, self.n)
        self.phi_kind = int(phi_kind)
        self.phi_coef = np.array(phi_coef, dtype=float)
        self.b0 = float(b0)
        c = self.phi_coef
        if self.phi_kind == KIND_POLY:
            self._dcoef = np.array([k * c[k] for k in range(1, len(c))]) if len(c) > 1 else np.zeros(1)
            self._d2coef = np.array([k * self._dcoef[k] for k in range(1, len(self._dcoef))]) if len(self._dcoef) > 1 else np.zeros(1)

    def phi3(self, s):
        if self.phi_kind == KIND_POLY:
            return _horner(self.phi_coef, s), _horner(self._dcoef, s), _horner(self._d2coef, s)
        if self.phi_kind == KIND_COS_AS:
            a = self.phi_coef[0]
            return math.cos(s) + a * s, -math.sin(s) + a, -math.cos(s)
        e = math.exp(s)
        return e + s + 1.0, e + 1.0, e

    def _pieces(self, x, y):
        sigma = self.sig0 + self.sig_l @ x + 0.5 * x @ self.sig_H @ x
        e = math.exp(sigma)
        ny = math.sqrt(float(y @ y))
        if ny == 0.0:
            raise DomainError("F is undefined at the zero vector")
        alpha = e * ny
        b = self.pot_l + self.pot_H @ x
        s = float(b @ y) / alpha
        if not abs(s) < self.b0:
            raise AdmissibilityError(f"|s|={abs(s):.6g} >= b0={self.b0:.6g}")
        return e, ny, alpha, b, s

    def F(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        _, _, alpha, _, s = self._pieces(x, y)
        return alpha * self.phi3(s)[0]

    def F_grad_y(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        e, ny, alpha, b, s = self._pieces(x, y)
        f, df, _ = self.phi3(s)
        ell = (e / ny) * y
        return alpha * f, df * b + (f - s * df) * ell

    def F_grad_x(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        e, ny, alpha, b, s = self._pieces(x, y)
        f, df, _ = self.phi3(s)
        gsig = self.sig_l + self.sig_H @ x
        return alpha * f, (f - s * df) * alpha * gsig + df * (self.pot_H @ y)

    def tensor(self, x, y):
        """Closed-form ``g_ij = [F^2/2]_{y^i y^j}``."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        e, ny, alpha, b, s = self._pieces(x, y)
        f, df, d2f = self.phi3(s)
        ell = (e / ny) * y
        fy = df * b + (f - s * df) * ell
        w = b - s * ell
        return (
            np.outer(fy, fy)
            + f * d2f * np.outer(w, w)
            + f * (f - s * df) * (e * e * np.eye(self.n) - np.outer(ell, ell))
        )

    def _energy_grad_y(self, x, y):
        f, fy = self.F_grad_y(x, y)
        return 2.0 * f * fy

    def spray(self, x, y, hx):
        """``G^i = 1/4 g^il ([F^2]_{x^k y^l} y^k - [F^2]_{x^l})`` with FD x-derivatives."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        ny = math.sqrt(float(y @ y))
        u = y / ny
        mixed = _five_point([self._energy_grad_y(x + (off * hx) * u, y) for off in _OFFSETS], hx) * ny
        dx = np.zeros(self.n)
        for k in range(self.n):
            vals = []
            for off in _OFFSETS:
                xs = x.copy()
                xs[k] += off * hx
                vals.append(self.F(xs, y) ** 2)
            dx[k] = _five_point(vals, hx)
        g = self.tensor(x, y)
        return 0.25 * np.linalg.solve(g, mixed - dx)

    def rk4(self, x0, y0, t_max, steps, hx, lo, hi):
        x = np.array(x0, dtype=float)
        v = np.array(y0, dtype=float)
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        h = float(t_max) / int(steps)
        pts = np.empty((steps + 1, self.n))
        vel = np.empty((steps + 1, self.n))
        pts[0], vel[0] = x, v
        done = steps
        for i in range(steps):
            k1x, k1v = v, -2.0 * self.spray(x, v, hx)
            x2, v2 = x + 0.5 * h * k1x, v + 0.5 * h * k1v
            k2x, k2v = v2, -2.0 * self.spray(x2, v2, hx)
            x3, v3 = x + 0.5 * h * k2x, v + 0.5 * h * k2v
            k3x, k3v = v3, -2.0 * self.spray(x3, v3, hx)
            x4, v4 = x + h * k3x, v + h * k3v
            k4x, k4v = v4, -2.0 * self.spray(x4, v4, hx)
            x = x + (h / 6.0) * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
            v = v + (h / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
            if np.any(x < lo) or np.any(x > hi):
                done = i
                break
            pts[i + 1], vel[i + 1] = x, v
        return pts[: done + 1], vel[: done + 1], done < steps

    def polyline(self, nodes):
        """Midpoint-rule length ``sum F(m_k, dx_k)`` and its gradient per node."""
        nodes = np.asarray(nodes, dtype=float)
        mids = 0.5 * (nodes[1:] + nodes[:-1])
        deltas = nodes[1:] - nodes[:-1]
        nd = np.sqrt(np.einsum("ij,ij->i", deltas, deltas))
        live = nd > 0.0
        m, d, nd = mids[live], deltas[live], nd[live]
        sig = self.sig0 + m @ self.sig_l + 0.5 * np.einsum("ki,ij,kj->k", m, self.sig_H, m)
        e = np.exp(sig)
        alpha = e * nd
        b = self.pot_l + m @ self.pot_H
        s = np.einsum("ij,ij->i", b, d) / alpha
        if np.any(np.abs(s) >= self.b0):
            raise AdmissibilityError(f"|s|={np.max(np.abs(s)):.6g} >= b0={self.b0:.6g}")
        f, df = _phi_vec(self.phi_kind, self.phi_coef, s)
        ell = (e / nd)[:, None] * d
        fy = df[:, None] * b + (f - s * df)[:, None] * ell
        gsig = self.sig_l + m @ self.sig_H
        fx = ((f - s * df) * alpha)[:, None] * gsig + df[:, None] * (d @ self.pot_H)
        grad_seg = np.zeros((len(nodes) - 1, 2, self.n))
        grad_seg[live, 0] = 0.5 * fx - fy
        grad_seg[live, 1] = 0.5 * fx + fy
        grad = np.zeros_like(nodes)
        grad[:-1] += grad_seg[:, 0]
        grad[1:] += grad_seg[:, 1]
        return float(np.sum(alpha * f)), grad


def _horner(c, s):
    acc = 0.0
    for coef in c[::-1]:
        acc = acc * s + coef
    return float(acc)


def _phi_vec(kind, coef, s):
    if kind == KIND_POLY:
        f = np.polynomial.polynomial.polyval(s, coef)
        df = np.polynomial.polynomial.polyval(s, np.polynomial.polynomial.polyder(coef)) if len(coef) > 1 else np.zeros_like(s)
        return f, df
    if kind == KIND_COS_AS:
        return np.cos(s) + coef[0] * s, -np.sin(s) + coef[0]
    e = np.exp(s)
    return e + s + 1.0, e + 1.0
