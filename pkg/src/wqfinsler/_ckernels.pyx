# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels; drop-in replacement for ``_pykernels``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, exp, cos, sin, fabs

from .errors import AdmissibilityError, DomainError

cnp.import_array()

cdef enum:
    MAXN = 16
    MAXC = 32

BACKEND = "cython"



cdef class Metric:
    cdef public int n
    cdef public int phi_kind
    cdef public double b0
    cdef double sig0
    cdef double sig_l[MAXN]
    cdef double sig_H[MAXN * MAXN]
    cdef double pot_l[MAXN]
    cdef double pot_H[MAXN * MAXN]
    cdef double coef[MAXC]
    cdef double dcoef[MAXC]
    cdef double d2coef[MAXC]
    cdef int ncoef

    def __init__(self, n, sig0, sig_l, sig_H, pot_l, pot_H, phi_kind, phi_coef, b0):
        cdef int i
        self.n = int(n)
        if self.n < 1 or self.n > MAXN:
            raise ValueError(f"dimension must be in 1..{MAXN}")
        sl = np.ascontiguousarray(sig_l, dtype=np.float64).ravel()
        sH = np.ascontiguousarray(sig_H, dtype=np.float64).ravel()
        pl = np.ascontiguousarray(pot_l, dtype=np.float64).ravel()
        pH = np.ascontiguousarray(pot_H, dtype=np.float64).ravel()
        pc = np.ascontiguousarray(phi_coef, dtype=np.float64).ravel()
        if pc.size > MAXC:
            raise ValueError(f"at most {MAXC} phi coefficients")
        self.sig0 = float(sig0)
        for i in range(self.n):
            self.sig_l[i] = sl[i]
            self.pot_l[i] = pl[i]
        for i in range(self.n * self.n):
            self.sig_H[i] = sH[i]
            self.pot_H[i] = pH[i]
        self.ncoef = pc.size
        for i in range(MAXC):
            self.coef[i] = 0.0
            self.dcoef[i] = 0.0
            self.d2coef[i] = 0.0
        for i in range(self.ncoef):
            self.coef[i] = pc[i]
        for i in range(1, self.ncoef):
            self.dcoef[i - 1] = i * self.coef[i]
        for i in range(1, self.ncoef - 1):
            self.d2coef[i - 1] = i * self.dcoef[i]
        self.phi_kind = int(phi_kind)
        self.b0 = float(b0)

    cdef inline void _phi3(self, double s, double* f, double* df, double* d2f) nogil:
        cdef int k
        cdef double a, e
        if self.phi_kind == 0:
            f[0] = 0.0
            df[0] = 0.0
            d2f[0] = 0.0
            for k in range(self.ncoef - 1, -1, -1):
                f[0] = f[0] * s + self.coef[k]
                df[0] = df[0] * s + self.dcoef[k]
                d2f[0] = d2f[0] * s + self.d2coef[k]
        elif self.phi_kind == 1:
            a = self.coef[0]
            f[0] = cos(s) + a * s
            df[0] = -sin(s) + a
            d2f[0] = -cos(s)
        else:
            e = exp(s)
            f[0] = e + s + 1.0
            df[0] = e + 1.0
            d2f[0] = e

    cdef int _pieces(self, const double* x, const double* y, double* e, double* ny,
                     double* alpha, double* b, double* s) nogil:
        """Returns 0 on success, 1 for y = 0, 2 for |s| >= b0."""
        cdef int i, j, n = self.n
        cdef double sigma = self.sig0, beta = 0.0, acc, yy = 0.0
        for i in range(n):
            acc = 0.0
            for j in range(n):
                acc = acc + self.sig_H[i * n + j] * x[j]
            sigma = sigma + x[i] * (self.sig_l[i] + 0.5 * acc)
            yy = yy + y[i] * y[i]
        if yy == 0.0:
            return 1
        e[0] = exp(sigma)
        ny[0] = sqrt(yy)
        alpha[0] = e[0] * ny[0]
        for i in range(n):
            acc = self.pot_l[i]
            for j in range(n):
                acc = acc + self.pot_H[i * n + j] * x[j]
            b[i] = acc
            beta = beta + acc * y[i]
        s[0] = beta / alpha[0]
        if not fabs(s[0]) < self.b0:
            return 2
        return 0

    cdef int _grad_y(self, const double* x, const double* y, double* F, double* fy) nogil:
        cdef double e, ny, alpha, s, f, df, d2f
        cdef double b[MAXN]
        cdef int i, rc
        rc = self._pieces(x, y, &e, &ny, &alpha, b, &s)
        if rc:
            return rc
        self._phi3(s, &f, &df, &d2f)
        F[0] = alpha * f
        for i in range(self.n):
            fy[i] = df * b[i] + (f - s * df) * (e / ny) * y[i]
        return 0

    cdef int _F(self, const double* x, const double* y, double* F) nogil:
        cdef double e, ny, alpha, s, f, df, d2f
        cdef double b[MAXN]
        cdef int rc
        rc = self._pieces(x, y, &e, &ny, &alpha, b, &s)
        if rc:
            return rc
        self._phi3(s, &f, &df, &d2f)
        F[0] = alpha * f
        return 0

    cdef int _tensor(self, const double* x, const double* y, double* g) nogil:
        cdef double e, ny, alpha, s, f, df, d2f, c3
        cdef double b[MAXN]
        cdef double ell[MAXN]
        cdef double fy[MAXN]
        cdef double w[MAXN]
        cdef int i, j, rc, n = self.n
        rc = self._pieces(x, y, &e, &ny, &alpha, b, &s)
        if rc:
            return rc
        self._phi3(s, &f, &df, &d2f)
        for i in range(n):
            ell[i] = (e / ny) * y[i]
            fy[i] = df * b[i] + (f - s * df) * ell[i]
            w[i] = b[i] - s * ell[i]
        c3 = f * (f - s * df)
        for i in range(n):
            for j in range(n):
                g[i * n + j] = fy[i] * fy[j] + f * d2f * w[i] * w[j] - c3 * ell[i] * ell[j]
            g[i * n + i] = g[i * n + i] + c3 * e * e
        return 0

    cdef int _spray(self, const double* x, const double* y, double hx, double* G) nogil:
        cdef int n = self.n
        cdef int i, j, k, q, rc
        cdef double ny = 0.0, F, piv, t
        cdef double offs[4]
        cdef double fq[4]
        cdef double ev[4 * MAXN]
        cdef double xs[MAXN]
        cdef double fy[MAXN]
        cdef double rhs[MAXN]
        cdef double g[MAXN * MAXN]
        offs[0] = 2.0; offs[1] = 1.0; offs[2] = -1.0; offs[3] = -2.0
        for i in range(n):
            ny = ny + y[i] * y[i]
        ny = sqrt(ny)
        if ny == 0.0:
            return 1
        # directional x-derivative of [F^2]_y along y; the five-point stencil is
        # written in difference form so x-independent terms cancel exactly
        for q in range(4):
            for i in range(n):
                xs[i] = x[i] + offs[q] * hx * y[i] / ny
            rc = self._grad_y(xs, y, &F, fy)
            if rc:
                return rc
            for i in range(n):
                ev[q * n + i] = 2.0 * F * fy[i]
        for i in range(n):
            rhs[i] = ((ev[3 * n + i] - ev[i]) + 8.0 * (ev[n + i] - ev[2 * n + i])) * ny / (12.0 * hx)
        # partial x-derivatives of F^2
        for k in range(n):
            for i in range(n):
                xs[i] = x[i]
            for q in range(4):
                xs[k] = x[k] + offs[q] * hx
                rc = self._F(xs, y, &F)
                if rc:
                    return rc
                fq[q] = F * F
            rhs[k] = rhs[k] - ((fq[3] - fq[0]) + 8.0 * (fq[1] - fq[2])) / (12.0 * hx)
        rc = self._tensor(x, y, g)
        if rc:
            return rc
        # Gaussian elimination with partial pivoting
        for k in range(n):
            q = k
            for i in range(k + 1, n):
                if fabs(g[i * n + k]) > fabs(g[q * n + k]):
                    q = i
            if q != k:
                for j in range(n):
                    t = g[k * n + j]; g[k * n + j] = g[q * n + j]; g[q * n + j] = t
                t = rhs[k]; rhs[k] = rhs[q]; rhs[q] = t
            piv = g[k * n + k]
            if piv == 0.0:
                return 3
            for i in range(k + 1, n):
                t = g[i * n + k] / piv
                for j in range(k, n):
                    g[i * n + j] = g[i * n + j] - t * g[k * n + j]
                rhs[i] = rhs[i] - t * rhs[k]
        for i in range(n - 1, -1, -1):
            t = rhs[i]
            for j in range(i + 1, n):
                t = t - g[i * n + j] * rhs[j]
            rhs[i] = t / g[i * n + i]
        for i in range(n):
            G[i] = 0.25 * rhs[i]
        return 0

    cdef void _raise(self, int rc) except *:
        if rc == 1:
            raise DomainError("F is undefined at the zero vector")
        if rc == 2:
            raise AdmissibilityError(f"|s| >= b0={self.b0:.6g}")
        if rc == 3:
            raise ArithmeticError("singular fundamental tensor")

    def phi3(self, double s):
        cdef double f, df, d2f
        self._phi3(s, &f, &df, &d2f)
        return f, df, d2f

    def F(self, x, y):
        cdef double[::1] xv = np.ascontiguousarray(x, dtype=np.float64)
        cdef double[::1] yv = np.ascontiguousarray(y, dtype=np.float64)
        cdef double F
        rc = self._F(&xv[0], &yv[0], &F)
        if rc:
            self._raise(rc)
        return F

    def F_grad_y(self, x, y):
        cdef double[::1] xv = np.ascontiguousarray(x, dtype=np.float64)
        cdef double[::1] yv = np.ascontiguousarray(y, dtype=np.float64)
        out = np.empty(self.n)
        cdef double[::1] ov = out
        cdef double F
        rc = self._grad_y(&xv[0], &yv[0], &F, &ov[0])
        if rc:
            self._raise(rc)
        return F, out

    def F_grad_x(self, x, y):
        cdef double[::1] xv = np.ascontiguousarray(x, dtype=np.float64)
        cdef double[::1] yv = np.ascontiguousarray(y, dtype=np.float64)
        cdef double e, ny, alpha, s, f, df, d2f, gs, py
        cdef double b[MAXN]
        cdef int i, j, n = self.n
        rc = self._pieces(&xv[0], &yv[0], &e, &ny, &alpha, b, &s)
        if rc:
            self._raise(rc)
        self._phi3(s, &f, &df, &d2f)
        out = np.empty(n)
        for i in range(n):
            gs = self.sig_l[i]
            py = 0.0
            for j in range(n):
                gs = gs + self.sig_H[i * n + j] * xv[j]
                py = py + self.pot_H[i * n + j] * yv[j]
            out[i] = (f - s * df) * alpha * gs + df * py
        return alpha * f, out

    def tensor(self, x, y):
        cdef double[::1] xv = np.ascontiguousarray(x, dtype=np.float64)
        cdef double[::1] yv = np.ascontiguousarray(y, dtype=np.float64)
        out = np.empty((self.n, self.n))
        cdef double[:, ::1] ov = out
        rc = self._tensor(&xv[0], &yv[0], &ov[0, 0])
        if rc:
            self._raise(rc)
        return out

    def spray(self, x, y, double hx):
        cdef double[::1] xv = np.ascontiguousarray(x, dtype=np.float64)
        cdef double[::1] yv = np.ascontiguousarray(y, dtype=np.float64)
        out = np.empty(self.n)
        cdef double[::1] ov = out
        rc = self._spray(&xv[0], &yv[0], hx, &ov[0])
        if rc:
            self._raise(rc)
        return out

    def rk4(self, x0, y0, double t_max, int steps, double hx, lo, hi):
        cdef int n = self.n
        cdef double[::1] lov = np.ascontiguousarray(lo, dtype=np.float64)
        cdef double[::1] hiv = np.ascontiguousarray(hi, dtype=np.float64)
        pts = np.empty((steps + 1, n))
        vel = np.empty((steps + 1, n))
        cdef double[:, ::1] P = pts
        cdef double[:, ::1] V = vel
        cdef double h = t_max / steps
        cdef double x[MAXN]
        cdef double v[MAXN]
        cdef double xt[MAXN]
        cdef double vt[MAXN]
        cdef double ax[MAXN]
        cdef double av[MAXN]
        cdef double G[MAXN]
        cdef double c
        cdef int i, j, stage, rc = 0, done = steps, out
        cdef double x0v, y0v
        xa = np.ascontiguousarray(x0, dtype=np.float64)
        ya = np.ascontiguousarray(y0, dtype=np.float64)
        for j in range(n):
            x[j] = xa[j]
            v[j] = ya[j]
            P[0, j] = x[j]
            V[0, j] = v[j]
        with nogil:
            for i in range(steps):
                for j in range(n):
                    xt[j] = x[j]
                    vt[j] = v[j]
                    ax[j] = 0.0
                    av[j] = 0.0
                for stage in range(4):
                    rc = self._spray(xt, vt, hx, G)
                    if rc:
                        break
                    c = 1.0 if (stage == 0 or stage == 3) else 2.0
                    for j in range(n):
                        ax[j] = ax[j] + c * vt[j]
                        av[j] = av[j] - c * 2.0 * G[j]
                    if stage < 3:
                        c = 0.5 * h if stage < 2 else h
                        for j in range(n):
                            # derivative of this stage: (vt, -2G)
                            x0v = vt[j]
                            y0v = -2.0 * G[j]
                            xt[j] = x[j] + c * x0v
                            vt[j] = v[j] + c * y0v
                if rc:
                    break
                out = 0
                for j in range(n):
                    x[j] = x[j] + (h / 6.0) * ax[j]
                    v[j] = v[j] + (h / 6.0) * av[j]
                    if x[j] < lov[j] or x[j] > hiv[j]:
                        out = 1
                if out:
                    done = i
                    break
                for j in range(n):
                    P[i + 1, j] = x[j]
                    V[i + 1, j] = v[j]
        if rc:
            self._raise(rc)
        return pts[: done + 1], vel[: done + 1], done < steps

    def polyline(self, nodes):
        cdef double[:, ::1] X = np.ascontiguousarray(nodes, dtype=np.float64)
        cdef int N = X.shape[0], n = self.n
        grad = np.zeros((N, n))
        cdef double[:, ::1] Gr = grad
        cdef double m[MAXN]
        cdef double d[MAXN]
        cdef double b[MAXN]
        cdef double e, ny, alpha, s, f, df, d2f, gs, py, fx, fyv, total = 0.0
        cdef int k, i, j, rc = 0
        with nogil:
            for k in range(N - 1):
                ny = 0.0
                for i in range(n):
                    m[i] = 0.5 * (X[k, i] + X[k + 1, i])
                    d[i] = X[k + 1, i] - X[k, i]
                    ny = ny + d[i] * d[i]
                if ny == 0.0:
                    continue
                rc = self._pieces(m, d, &e, &ny, &alpha, b, &s)
                if rc:
                    break
                self._phi3(s, &f, &df, &d2f)
                total = total + alpha * f
                for i in range(n):
                    gs = self.sig_l[i]
                    py = 0.0
                    for j in range(n):
                        gs = gs + self.sig_H[i * n + j] * m[j]
                        py = py + self.pot_H[i * n + j] * d[j]
                    fx = (f - s * df) * alpha * gs + df * py
                    fyv = df * b[i] + (f - s * df) * (e / ny) * d[i]
                    Gr[k, i] = Gr[k, i] + 0.5 * fx - fyv
                    Gr[k + 1, i] = Gr[k + 1, i] + 0.5 * fx + fyv
        if rc:
            self._raise(rc)
        return total, grad
