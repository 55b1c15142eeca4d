# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops. ``_kernels_py`` holds the reference fallback with the same API."""

import numpy as np
cimport numpy as cnp
from libc.math cimport (sin, cos, tan, atan, log, exp, fabs, sqrt, asinh,
                        tgamma, M_PI, INFINITY, isnan)

cnp.import_array()

cdef enum:
    MAX_INTERVALS = 2000

# 15-point Kronrod / 7-point Gauss (QUADPACK qk15 abscissae and weights)
cdef double XGK[8]
cdef double WGK[8]
cdef double WG[4]
XGK[:] = [0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
          0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
          0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
          0.207784955007898467600689403773245, 0.0]
WGK[:] = [0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
          0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
          0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
          0.204432940075298892414161999234649, 0.209482141084727828012999174891714]
WG[:] = [0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
         0.381830050505118944950369775488975, 0.417959183673469387755102040816327]

# log g cut-offs: g*exp(-g) is below 1e-20 outside [exp(LG_LO), exp(LG_HI)]
cdef double LG_LO = -50.0
cdef double LG_HI = 3.912023005428146


cdef struct Ctx:
    double a          # alpha
    double th0        # (1/alpha) atan(beta tan(pi alpha / 2))
    double w          # width of the theta interval, pi/2 + th0
    double k          # alpha / (alpha - 1)
    double base       # k log x + log(cos(alpha th0)) / (alpha - 1)


cdef inline double _lg(const Ctx* c, int half, double v) nogil:
    # log g at a point given in the variable of one half of the interval:
    # half 0 measures s = theta + th0 from the left end, half 1 measures
    # psi = pi/2 - theta from the right end. Keeps both ends resolvable.
    cdef double s, psi, sp, cc
    if half == 0:
        s = v
        psi = c.w - v
    else:
        psi = v
        s = c.w - v
    sp = sin(psi)
    cc = cos(c.th0 + (c.a - 1.0) * s)
    if sp <= 0.0 or cc <= 0.0:
        return INFINITY if c.k < 0 else -INFINITY
    return c.base + c.k * (log(sp) - log(sin(c.a * s))) + log(cc) - log(sp)


cdef inline double _integrand(const Ctx* c, int half, double v) nogil:
    cdef double lg = _lg(c, half, v)
    if lg > 700.0 or lg < -700.0 or isnan(lg):
        return 0.0
    return exp(lg - exp(lg))


cdef inline bint _after(int h0, double v0, int h1, double v1) nogil:
    # True when position (h0, v0) lies at larger theta than (h1, v1);
    # every half-0 point precedes every half-1 point
    if h0 != h1:
        return h0 > h1
    if h0 == 0:
        return v0 > v1
    return v0 < v1


cdef void _solve(const Ctx* c, double target, int* half_out, double* v_out) nogil:
    """Locate log g == target; clamps to an interval end when out of range."""
    cdef double mid = 0.5 * c.w
    cdef double lg_mid = _lg(c, 0, mid)
    cdef bint increasing = c.a < 1.0   # log g increases with theta when alpha < 1
    cdef int half
    cdef double lo, hi, m, val
    cdef bint rising_in_v
    cdef int it
    # which half holds the crossing
    if (lg_mid < target) == increasing:
        half = 1
    else:
        half = 0
    # in half 0, v grows with theta; in half 1, v shrinks as theta grows
    rising_in_v = increasing if half == 0 else not increasing
    lo = 1e-300
    hi = mid
    val = _lg(c, half, lo)
    if (val < target) != rising_in_v:
        # beyond reach at the interval end
        half_out[0] = half
        v_out[0] = lo
        return
    for it in range(400):
        if hi / lo > 4.0:
            m = sqrt(lo) * sqrt(hi)
        else:
            m = 0.5 * (lo + hi)
        if m <= lo or m >= hi:
            break
        val = _lg(c, half, m)
        if (val < target) == rising_in_v:
            lo = m
        else:
            hi = m
    half_out[0] = half
    v_out[0] = 0.5 * (lo + hi)


cdef int _gk_adaptive(const Ctx* c, int half, double a0, double b0, double abs_tol,
                      double rel_tol, double* result) nogil:
    """Global adaptive Gauss-Kronrod on [a0, b0] in one half's variable."""
    cdef double A[MAX_INTERVALS]
    cdef double B[MAX_INTERVALS]
    cdef double R[MAX_INTERVALS]
    cdef double E[MAX_INTERVALS]
    cdef int n = 1, i, worst
    cdef double total, err, center, a, b
    cdef double target
    if b0 <= a0:
        result[0] = 0.0
        return 0
    A[0] = a0
    B[0] = b0
    _qk15(c, half, a0, b0, &R[0], &E[0])
    while True:
        total = 0.0
        err = 0.0
        worst = 0
        for i in range(n):
            total += R[i]
            err += E[i]
            if E[i] > E[worst]:
                worst = i
        # relative accuracy drives refinement; the absolute tolerance only
        # decides success once refinement is exhausted
        target = rel_tol * fabs(total)
        if target < 1e-300:
            target = 1e-300
        if err <= target:
            result[0] = total
            return 0
        a = A[worst]
        b = B[worst]
        center = 0.5 * (a + b)
        if n >= MAX_INTERVALS or center <= a or center >= b:
            result[0] = total
            return 0 if err <= abs_tol else 1
        A[n] = center
        B[n] = b
        B[worst] = center
        _qk15(c, half, a, center, &R[worst], &E[worst])
        _qk15(c, half, center, b, &R[n], &E[n])
        n += 1


cdef void _qk15(const Ctx* c, int half, double a, double b, double* res, double* abserr) nogil:
    cdef double center = 0.5 * (a + b)
    cdef double hl = 0.5 * (b - a)
    cdef double fc = _integrand(c, half, center)
    cdef double resk = fc * WGK[7]
    cdef double resg = fc * WG[3]
    cdef double f1, f2
    cdef int j
    for j in range(7):
        f1 = _integrand(c, half, center - hl * XGK[j])
        f2 = _integrand(c, half, center + hl * XGK[j])
        resk += WGK[j] * (f1 + f2)
        if j % 2 == 1:
            resg += WG[j // 2] * (f1 + f2)
    res[0] = resk * hl
    abserr[0] = fabs((resk - resg) * hl)


cdef int _integrate_span(const Ctx* c, int h0, double v0, int h1, double v1,
                         double abs_tol, double rel_tol, double* out) nogil:
    # integrate between two theta-positions, splitting at the half boundary
    cdef double mid = 0.5 * c.w
    cdef double r1 = 0.0, r2 = 0.0
    cdef int st = 0
    if _after(h0, v0, h1, v1):
        h0, h1 = h1, h0
        v0, v1 = v1, v0
    if h0 == 0 and h1 == 0:
        st = _gk_adaptive(c, 0, v0, v1, abs_tol, rel_tol, &r1)
    elif h0 == 1 and h1 == 1:
        st = _gk_adaptive(c, 1, v1, v0, abs_tol, rel_tol, &r1)
    else:
        st = _gk_adaptive(c, 0, v0, mid, abs_tol, rel_tol, &r1)
        st |= _gk_adaptive(c, 1, v1, mid, abs_tol, rel_tol, &r2)
    out[0] = r1 + r2
    return st


cdef int _pdf_one(double x, double a, double beta, double tol, double* out) nogil:
    cdef Ctx c
    cdef double zeta, pref, i1, i2, tol_i
    cdef int hlo, hpk, hhi, st
    cdef double vlo, vpk, vhi
    if x < 0.0:
        x = -x
        beta = -beta
    c.a = a
    c.th0 = atan(beta * tan(M_PI * a / 2.0)) / a
    c.w = M_PI / 2.0 + c.th0
    if x == 0.0:
        zeta = -beta * tan(M_PI * a / 2.0)
        out[0] = tgamma(1.0 + 1.0 / a) * cos(c.th0) / (M_PI * (1.0 + zeta * zeta) ** (1.0 / (2.0 * a)))
        return 0
    if c.w < 1e-14:
        out[0] = 0.0
        return 0
    c.k = a / (a - 1.0)
    c.base = c.k * log(x) + log(cos(a * c.th0)) / (a - 1.0)
    pref = a / (M_PI * fabs(a - 1.0) * x)
    tol_i = 1e-3 * tol / pref
    _solve(&c, LG_LO, &hlo, &vlo)
    _solve(&c, 0.0, &hpk, &vpk)
    _solve(&c, LG_HI, &hhi, &vhi)
    st = _integrate_span(&c, hlo, vlo, hpk, vpk, tol_i, 1e-11, &i1)
    st |= _integrate_span(&c, hpk, vpk, hhi, vhi, tol_i, 1e-11, &i2)
    out[0] = pref * (i1 + i2)
    return st


def pdf_standard(double[::1] x, double alpha, double beta, double tol):
    """Standardized S1 density at each ``x``; alpha != 1.

    Returns ``(values, n_failed)`` where ``n_failed`` counts points whose
    quadrature hit the subdivision budget.
    """
    cdef Py_ssize_t i, n = x.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out_arr = np.empty(n)
    cdef double[::1] out = out_arr
    cdef int failed = 0
    with nogil:
        for i in range(n):
            if _pdf_one(x[i], alpha, beta, tol, &out[i]) != 0:
                failed += 1
            if out[i] < 0.0:
                out[i] = 0.0
    return out_arr, failed


def cms_transform(double[::1] v, double[::1] w, double alpha, double beta):
    """Chambers-Mallows-Stuck map of V ~ U(-pi/2, pi/2), W ~ Exp(1) to S_alpha(1, beta, 0)."""
    cdef Py_ssize_t i, n = v.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out_arr = np.empty(n)
    cdef double[::1] out = out_arr
    cdef double t = tan(M_PI * alpha / 2.0)
    cdef double b = atan(beta * t) / alpha
    cdef double s = (1.0 + beta * beta * t * t) ** (1.0 / (2.0 * alpha))
    cdef double e = (1.0 - alpha) / alpha
    cdef double ab, vi
    with nogil:
        if alpha == 1.0:
            for i in range(n):
                vi = v[i]
                out[i] = (2.0 / M_PI) * ((M_PI / 2.0 + beta * vi) * tan(vi)
                          - beta * log((M_PI / 2.0) * w[i] * cos(vi) / (M_PI / 2.0 + beta * vi)))
        else:
            for i in range(n):
                vi = v[i]
                ab = alpha * (vi + b)
                out[i] = (s * sin(ab) / cos(vi) ** (1.0 / alpha)
                          * (cos(vi - ab) / w[i]) ** e)
    return out_arr


def row_power_means(double[:, ::1] y, double[::1] powers, unsigned char[::1] signed):
    """Per-row means of |y|^p (or sign(y)|y|^p) for each power, plus mean log|y| in the last column."""
    cdef Py_ssize_t n = y.shape[0], L = y.shape[1], k = powers.shape[0]
    cdef Py_ssize_t i, j, q
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out_arr = np.zeros((n, k + 1))
    cdef double[:, ::1] out = out_arr
    cdef double la, yy, val
    with nogil:
        for i in range(n):
            for j in range(L):
                yy = y[i, j]
                la = log(fabs(yy))
                for q in range(k):
                    val = exp(powers[q] * la)
                    if signed[q] and yy < 0.0:
                        val = -val
                    out[i, q] += val
                out[i, k] += la
            for q in range(k + 1):
                out[i, q] /= L
    return out_arr


cdef inline double _table_logpdf(double y, double sigma, double x0, double u0, double h,
                                 const double[::1] tab, double tail_slope) nogil:
    # log density of sigma * X at y, X standardized with log-density tabulated in u = asinh(x / x0)
    cdef Py_ssize_t m = tab.shape[0]
    cdef double x = y / sigma
    cdef double u = asinh(x / x0)
    cdef double pos = (u - u0) / h
    cdef Py_ssize_t idx
    cdef double frac, xe
    if pos < 0.0:
        xe = x0 * sinh_(u0)
        return tab[0] + tail_slope * (log(fabs(x)) - log(fabs(xe))) - log(sigma)
    if pos >= m - 1:
        xe = x0 * sinh_(u0 + h * (m - 1))
        return tab[m - 1] + tail_slope * (log(fabs(x)) - log(fabs(xe))) - log(sigma)
    idx = <Py_ssize_t> pos
    frac = pos - idx
    return tab[idx] + frac * (tab[idx + 1] - tab[idx]) - log(sigma)


cdef inline double sinh_(double u) nogil:
    return 0.5 * (exp(u) - exp(-u))


def table_llr(double[:, ::1] y,
              double sigma1, double x01, double u01, double h1, double[::1] tab1, double slope1,
              double sigma0, double x00, double u00, double h0, double[::1] tab0, double slope0):
    """Per-row sum of log f1(y) - log f0(y) from two tabulated log-densities."""
    cdef Py_ssize_t n = y.shape[0], L = y.shape[1], i, j
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out_arr = np.zeros(n)
    cdef double[::1] out = out_arr
    cdef double acc, comp, term, tmp
    with nogil:
        for i in range(n):
            acc = 0.0
            comp = 0.0
            for j in range(L):
                term = (_table_logpdf(y[i, j], sigma1, x01, u01, h1, tab1, slope1)
                        - _table_logpdf(y[i, j], sigma0, x00, u00, h0, tab0, slope0))
                # Kahan summation
                term = term - comp
                tmp = acc + term
                comp = (tmp - acc) - term
                acc = tmp
            out[i] = acc
    return out_arr
