"""Pure numpy/scipy implementations of the compiled kernels.

Same signatures and return values as ``_kernels``; used when the extension is
not built or when ``STABLEDETECT_PURE_PYTHON`` is set.
"""

import math
import warnings

import numpy as np
from scipy import integrate

LG_LO = -50.0
LG_HI = math.log(50.0)


class _Zolotarev:
    """Integrand of the zero-phase form of the inversion integral for one x > 0."""

    def __init__(self, x, a, beta):
        self.a = a
        self.th0 = math.atan(beta * math.tan(math.pi * a / 2)) / a
        self.w = math.pi / 2 + self.th0
        self.k = a / (a - 1)
        self.base = self.k * math.log(x) + math.log(math.cos(a * self.th0)) / (a - 1)

    def lg(self, half, v):
        if half == 0:
            s, psi = v, self.w - v
        else:
            s, psi = self.w - v, v
        sp = math.sin(psi)
        cc = math.cos(self.th0 + (self.a - 1) * s)
        if sp <= 0 or cc <= 0:
            return math.inf if self.k < 0 else -math.inf
        return (self.base + self.k * (math.log(sp) - math.log(math.sin(self.a * s)))
                + math.log(cc) - math.log(sp))

    def integrand(self, half, v):
        lg = self.lg(half, v)
        if not -700.0 <= lg <= 700.0:
            return 0.0
        return math.exp(lg - math.exp(lg))

    def solve(self, target):
        mid = 0.5 * self.w
        increasing = self.a < 1
        half = 1 if (self.lg(0, mid) < target) == increasing else 0
        rising = increasing if half == 0 else not increasing
        lo, hi = 1e-300, mid
        if (self.lg(half, lo) < target) != rising:
            return half, lo
        for _ in range(400):
            m = math.sqrt(lo) * math.sqrt(hi) if hi / lo > 4 else 0.5 * (lo + hi)
            if m <= lo or m >= hi:
                break
            if (self.lg(half, m) < target) == rising:
                lo = m
            else:
                hi = m
        return half, 0.5 * (lo + hi)

    def span(self, p0, p1, abs_tol):
        (h0, v0), (h1, v1) = p0, p1
        if _after(h0, v0, h1, v1):
            (h0, v0), (h1, v1) = (h1, v1), (h0, v0)
        mid = 0.5 * self.w
        if h0 == h1 == 0:
            pieces = [(0, v0, v1)]
        elif h0 == h1 == 1:
            pieces = [(1, v1, v0)]
        else:
            pieces = [(0, v0, mid), (1, v1, mid)]
        total, ok = 0.0, True
        for half, lo, hi in pieces:
            if hi <= lo:
                continue
            val, err = integrate.quad(lambda v: self.integrand(half, v), lo, hi,
                                      epsabs=1e-300, epsrel=1e-11, limit=500)
            ok &= err <= max(1e-9 * abs(val), abs_tol)
            total += val
        return total, ok


def _after(h0, v0, h1, v1):
    if h0 != h1:
        return h0 > h1
    return v0 > v1 if h0 == 0 else v0 < v1


def _pdf_one(x, a, beta, tol):
    if x < 0:
        x, beta = -x, -beta
    th0 = math.atan(beta * math.tan(math.pi * a / 2)) / a
    if x == 0:
        zeta = -beta * math.tan(math.pi * a / 2)
        return (math.gamma(1 + 1 / a) * math.cos(th0)
                / (math.pi * (1 + zeta * zeta) ** (1 / (2 * a)))), True
    if math.pi / 2 + th0 < 1e-14:
        return 0.0, True
    z = _Zolotarev(x, a, beta)
    pref = a / (math.pi * abs(a - 1) * x)
    tol_i = 1e-3 * tol / pref
    lo, pk, hi = z.solve(LG_LO), z.solve(0.0), z.solve(LG_HI)
    i1, ok1 = z.span(lo, pk, tol_i)
    i2, ok2 = z.span(pk, hi, tol_i)
    return pref * (i1 + i2), ok1 and ok2


def pdf_standard(x, alpha, beta, tol):
    x = np.ascontiguousarray(x, dtype=float)
    out = np.empty_like(x)
    failed = 0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        for i, xi in enumerate(x):
            val, ok = _pdf_one(float(xi), alpha, beta, tol)
            out[i] = max(val, 0.0)
            failed += not ok
    return out, failed


def cms_transform(v, w, alpha, beta):
    v = np.asarray(v, dtype=float)
    w = np.asarray(w, dtype=float)
    if alpha == 1.0:
        half_pi_bv = np.pi / 2 + beta * v
        return (2 / np.pi) * (half_pi_bv * np.tan(v)
                              - beta * np.log((np.pi / 2) * w * np.cos(v) / half_pi_bv))
    t = math.tan(math.pi * alpha / 2)
    b = math.atan(beta * t) / alpha
    s = (1 + beta * beta * t * t) ** (1 / (2 * alpha))
    ab = alpha * (v + b)
    return s * np.sin(ab) / np.cos(v) ** (1 / alpha) * (np.cos(v - ab) / w) ** ((1 - alpha) / alpha)


def row_power_means(y, powers, signed):
    y = np.asarray(y, dtype=float)
    powers = np.asarray(powers, dtype=float)
    signed = np.asarray(signed, dtype=bool)
    with np.errstate(divide="ignore"):
        la = np.log(np.abs(y))
    out = np.empty((y.shape[0], powers.size + 1))
    for q, (p, sgn) in enumerate(zip(powers, signed)):
        val = np.exp(p * la)
        if sgn:
            val = np.where(y < 0, -val, val)
        out[:, q] = val.mean(axis=1)
    out[:, -1] = la.mean(axis=1)
    return out


def _table_logpdf(y, sigma, x0, u0, h, tab, slope):
    x = y / sigma
    u = np.arcsinh(x / x0)
    grid = u0 + h * np.arange(tab.size)
    out = np.interp(u, grid, tab)
    lo = u < grid[0]
    hi = u > grid[-1]
    with np.errstate(divide="ignore"):
        if lo.any():
            xe = x0 * np.sinh(grid[0])
            out[lo] = tab[0] + slope * (np.log(np.abs(x[lo])) - math.log(abs(xe)))
        if hi.any():
            xe = x0 * np.sinh(grid[-1])
            out[hi] = tab[-1] + slope * (np.log(np.abs(x[hi])) - math.log(abs(xe)))
    return out - math.log(sigma)


def table_llr(y, sigma1, x01, u01, h1, tab1, slope1, sigma0, x00, u00, h0, tab0, slope0):
    y = np.asarray(y, dtype=float)
    diff = (_table_logpdf(y, sigma1, x01, u01, h1, np.asarray(tab1), slope1)
            - _table_logpdf(y, sigma0, x00, u00, h0, np.asarray(tab0), slope0))
    return np.array([math.fsum(row) for row in diff])
