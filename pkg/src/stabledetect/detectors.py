"""Detectors for H0: S_alpha(sigma_H0, 0, 0) versus H1: S_alpha(sigma_H1, beta_H1, 0).

The moment detectors replace the L observations by one or two sample means
(|y|^p, sign(y)|y|^p or log|y|), treat those as Gaussian by the CLT and run
the Gaussian likelihood-ratio test. The ML detector uses the stable densities.

Every test statistic is a log-likelihood ratio minus log(P0 / P1); the
verdict is H1 when the statistic is strictly positive. A statistic within
floating-point rounding of zero counts as a tie and goes to H0.
"""

from __future__ import annotations

import functools
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, special

from . import kernels
from .errors import DegenerateHypothesesError, IntegrationError
from .moments import (StatKind, flom_mean, mixed_covariance, signed_flom_mean,
                      statistic_mean, statistic_variance)
from .stable import DEFAULT_PDF_TOL, density_table, pdf

log = logging.getLogger(__name__)

H0, H1 = "H0", "H1"
DENSITY_FLOOR = 1e-300
COND_LIMIT = 1e12
FLOM_P = 0.001
_TIE_EPS = 16 * np.finfo(float).eps


@dataclass(frozen=True)
class Decision:
    verdict: str
    statistic: float


def _decide(stat: float, scale: float) -> Decision:
    # scale bounds the rounding error of the evaluated statistic
    if abs(stat) <= _TIE_EPS * scale:
        return Decision(H0, 0.0)
    return Decision(H1 if stat > 0 else H0, float(stat))


def decide_h1(stat, scale):
    """Vectorized verdict: True where H1 wins outside the rounding tie band."""
    stat = np.asarray(stat)
    return stat > _TIE_EPS * np.asarray(scale)


# ---------------------------------------------------------------- 1-d statistics

@dataclass(frozen=True)
class MomentSummary:
    """Gaussian approximation of a sample-mean statistic (variances already / L)."""

    mu_H0: float
    mu_H1: float
    var_H0: float
    var_H1: float
    log_prior_ratio: float = 0.0

    def __post_init__(self):
        if not (self.var_H0 > 0 and self.var_H1 > 0):
            raise ValueError("statistic variances must be positive")

    def quadratic(self) -> tuple[float, float, float]:
        """(a, b, c) with T(z) = a z^2 + b z + c."""
        m0, m1, v0, v1 = self.mu_H0, self.mu_H1, self.var_H0, self.var_H1
        a = 1 / (2 * v0) - 1 / (2 * v1)
        b = m1 / v1 - m0 / v0
        c = m0 * m0 / (2 * v0) - m1 * m1 / (2 * v1) + 0.5 * math.log(v0 / v1) - self.log_prior_ratio
        return a, b, c


@dataclass(frozen=True)
class Thresholds:
    """H1 region: t1 < z < t2 when ``h1_inside``, else z < t1 or z > t2."""

    t1: float
    t2: float
    h1_inside: bool

    def h1(self, z):
        z = np.asarray(z)
        inside = (z > self.t1) & (z < self.t2)
        return inside if self.h1_inside else (z < self.t1) | (z > self.t2)


def summarize(kind: StatKind, model, L: int,
              printed_signed_second_moment: bool = False) -> MomentSummary:
    """Means and variances / L of the statistic under both hypotheses."""
    if L < 1:
        raise ValueError("L must be at least 1")
    kind.check(model.alpha)
    stats = []
    for law in (model.h0, model.h1):
        stats.append((statistic_mean(kind, law),
                      statistic_variance(kind, law, printed_signed_second_moment) / L))
    (m0, v0), (m1, v1) = stats
    return MomentSummary(m0, m1, v0, v1, model.log_prior_ratio)


def lrt_1d_statistic(z, summary: MomentSummary):
    """Gaussian log-ratio at z (vectorized) and its rounding scale."""
    z = np.asarray(z, dtype=float)
    s = summary
    q1 = (z - s.mu_H1) ** 2 / (2 * s.var_H1)
    q0 = (z - s.mu_H0) ** 2 / (2 * s.var_H0)
    lv = 0.5 * math.log(s.var_H0 / s.var_H1)
    stat = q0 - q1 + lv - s.log_prior_ratio
    return stat, q0 + q1 + abs(lv) + abs(s.log_prior_ratio)


def lrt_1d(obs, kind: StatKind, summary: MomentSummary) -> Decision:
    y = np.asarray(obs, dtype=float)
    if y.ndim != 1 or y.size < 1 or not np.all(np.isfinite(y)):
        raise ValueError("observation must be a non-empty finite 1-d sequence")
    z = math.fsum(kind.apply(y)) / y.size
    stat, scale = lrt_1d_statistic(z, summary)
    return _decide(float(stat), float(scale))


def _polish(f, df, r):
    d = df(r)
    if d != 0 and math.isfinite(r):
        r2 = r - f(r) / d
        if abs(f(r2)) < abs(f(r)):
            return r2
    return r


def thresholds_1d(summary: MomentSummary) -> Thresholds:
    """Decision boundaries of the 1-d Gaussian LRT.

    With var_H1 > var_H0 the log-ratio is convex in z and H1 wins outside
    [t1, t2]; with var_H1 < var_H0 it is concave and H1 wins inside. Equal
    variances give one linear threshold, returned with an infinite partner.
    """
    a, b, c = summary.quadratic()

    def f(z):
        return float(lrt_1d_statistic(z, summary)[0])

    def df(z):
        return 2 * a * z + b

    if a == 0.0:
        if b == 0.0:
            raise DegenerateHypothesesError("indistinguishable hypotheses (equal means and variances)")
        tau = _polish(f, df, -c / b)
        return Thresholds(tau, math.inf, True) if b > 0 else Thresholds(-math.inf, tau, True)
    disc = b * b - 4 * a * c
    if disc < 0:
        raise DegenerateHypothesesError(
            "Gaussian approximations never cross; the test always decides "
            + (H1 if a > 0 else H0))
    q = -0.5 * (b + math.copysign(math.sqrt(disc), b))
    roots = [q / a, c / q] if q != 0 else [0.0, 0.0]
    r1, r2 = sorted(_polish(f, df, r) for r in roots)
    return Thresholds(r1, r2, a < 0)


def _norm_interval(m, s, lo, hi):
    """P(lo < X < hi) for X ~ N(m, s^2), accurate in both tails (vectorized)."""
    ulo = (lo - m) / s
    uhi = (hi - m) / s
    right = special.ndtr(-ulo) - special.ndtr(-uhi)
    left = special.ndtr(uhi) - special.ndtr(ulo)
    mid = 1.0 - special.ndtr(ulo) - special.ndtr(-uhi)
    return np.where(ulo >= 0, right, np.where(uhi <= 0, left, mid))


def _norm_outside(m, s, lo, hi):
    return special.ndtr((lo - m) / s) + special.ndtr(-(hi - m) / s)


def theoretical_pe_1d(summary: MomentSummary) -> float:
    """Error probability of the 1-d LRT under its Gaussian model."""
    p1 = 1.0 / (1.0 + math.exp(summary.log_prior_ratio))
    p0 = 1.0 - p1
    try:
        th = thresholds_1d(summary)
    except DegenerateHypothesesError:
        # the statistic has a constant sign: the test always returns one verdict
        a, b, c = summary.quadratic()
        always_h1 = (a > 0) if a != 0 else (b == 0 and c > 0)
        return p0 if always_h1 else p1
    out = []
    for m, v in ((summary.mu_H0, summary.var_H0), (summary.mu_H1, summary.var_H1)):
        s = math.sqrt(v)
        inside = float(_norm_interval(m, s, th.t1, th.t2))
        outside = float(_norm_outside(m, s, th.t1, th.t2))
        out.append((inside, outside) if th.h1_inside else (outside, inside))
    # out[k] = (P(decide H1 | Hk), P(decide H0 | Hk))
    return p0 * out[0][0] + p1 * out[1][1]


# ---------------------------------------------------------------- mixed statistic

@dataclass(frozen=True)
class BivariateSummary:
    """Gaussian model of Z = (mean |y|^p1, mean sign(y)|y|^p2) under both hypotheses."""

    mu_H0: tuple
    mu_H1: tuple
    cov_H0: tuple
    cov_H1: tuple
    independence_mode: bool = False
    log_prior_ratio: float = 0.0
    condition: float = 1.0
    auto_independence: bool = False
    p: tuple = field(default=(None, None))

    def __post_init__(self):
        for c in (self.cov_H0, self.cov_H1):
            (c11, c12), (c21, c22) = c
            if c12 != c21:
                raise ValueError("covariance matrices must be symmetric")
            if not (c11 > 0 and c22 > 0 and c11 * c22 - c12 * c12 > 0):
                raise ValueError("covariance matrices must be positive definite")
            if self.independence_mode and c12 != 0:
                raise ValueError("independence mode requires zero off-diagonals")

    def arrays(self):
        return (np.array(self.mu_H0), np.array(self.mu_H1),
                np.array(self.cov_H0), np.array(self.cov_H1))

    def quadratic(self):
        """(A, b, c) with 2T(z) = z'Az + 2b'z + c."""
        m0, m1, c0, c1 = self.arrays()
        p0, p1 = _inv2(c0), _inv2(c1)
        A = p0 - p1
        b = p1 @ m1 - p0 @ m0
        c = (m0 @ p0 @ m0 - m1 @ p1 @ m1 + math.log(_det2(c0) / _det2(c1))
             - 2 * self.log_prior_ratio)
        return A, b, float(c)


def _det2(c):
    return c[0, 0] * c[1, 1] - c[0, 1] * c[1, 0]


def _inv2(c):
    d = _det2(c)
    return np.array([[c[1, 1], -c[0, 1]], [-c[1, 0], c[0, 0]]]) / d


def _cov(law, p1, p2, L, independent):
    v1 = statistic_variance(StatKind.flom(p1), law) / L
    v2 = statistic_variance(StatKind.signed(p2), law) / L
    c12 = 0.0 if independent else mixed_covariance(law, p1, p2) / L
    return ((v1, c12), (c12, v2))


def summarize_mixed(model, p1: float, p2: float, L: int, independence_mode: bool = False,
                    cond_limit: float = COND_LIMIT) -> BivariateSummary:
    """Bivariate Gaussian summary; falls back to independence mode when ill-conditioned."""
    if L < 1:
        raise ValueError("L must be at least 1")
    if not (p1 > 0 and p2 > 0 and p1 + p2 < model.alpha / 2):
        raise ValueError(f"need p1, p2 > 0 and p1 + p2 < alpha/2 = {model.alpha / 2}")
    means = [(flom_mean(law, p1), signed_flom_mean(law, p2)) for law in (model.h0, model.h1)]
    covs = [_cov(law, p1, p2, L, independence_mode) for law in (model.h0, model.h1)]
    cond = max(float(np.linalg.cond(np.array(c))) for c in covs)
    auto = False
    if not independence_mode and not cond <= cond_limit:
        log.warning("mixed-statistic covariance condition number %.3g exceeds %.3g; "
                    "switching to independence mode", cond, cond_limit)
        covs = [_cov(law, p1, p2, L, True) for law in (model.h0, model.h1)]
        independence_mode = auto = True
    return BivariateSummary(means[0], means[1], covs[0], covs[1], independence_mode,
                            model.log_prior_ratio, cond, auto, (p1, p2))


def lrt_2d_statistic(z1, z2, summary: BivariateSummary):
    """Bivariate Gaussian log-ratio (vectorized) and its rounding scale."""
    m0, m1, c0, c1 = summary.arrays()
    z1 = np.asarray(z1, dtype=float)
    z2 = np.asarray(z2, dtype=float)
    terms = []
    for m, c in ((m0, c0), (m1, c1)):
        p = _inv2(c)
        d1, d2 = z1 - m[0], z2 - m[1]
        terms.append(0.5 * (p[0, 0] * d1 * d1 + 2 * p[0, 1] * d1 * d2 + p[1, 1] * d2 * d2))
    ld = 0.5 * math.log(_det2(c0) / _det2(c1))
    stat = terms[0] - terms[1] + ld - summary.log_prior_ratio
    scale = np.abs(terms[0]) + np.abs(terms[1]) + abs(ld) + abs(summary.log_prior_ratio)
    return stat, scale


def lrt_2d(obs, summary: BivariateSummary) -> Decision:
    y = np.asarray(obs, dtype=float)
    if y.ndim != 1 or y.size < 1 or not np.all(np.isfinite(y)):
        raise ValueError("observation must be a non-empty finite 1-d sequence")
    p1, p2 = summary.p
    if p1 is None:
        raise ValueError("summary carries no exponents; build it with summarize_mixed")
    z1 = math.fsum(StatKind.flom(p1).apply(y)) / y.size
    z2 = math.fsum(StatKind.signed(p2).apply(y)) / y.size
    stat, scale = lrt_2d_statistic(z1, z2, summary)
    return _decide(float(stat), float(scale))


def _quad_in_z2(summary, z1, quad=None):
    A, b, c = quad if quad is not None else summary.quadratic()
    a_t = A[1, 1]
    b_t = A[0, 1] * z1 + b[1]
    c_t = A[0, 0] * z1 * z1 + 2 * b[0] * z1 + c
    return a_t, b_t, c_t


def s_range(summary: BivariateSummary):
    """Real roots (s1 <= s2) of the z1-discriminant a_s z1^2 + 2 b_s z1 + c_s, or None."""
    A, b, c = summary.quadratic()
    a_s = A[0, 1] ** 2 - A[1, 1] * A[0, 0]
    b_s = A[0, 1] * b[1] - A[1, 1] * b[0]
    c_s = b[1] ** 2 - c * A[1, 1]
    return _real_roots(a_s, b_s, c_s)


def _real_roots(a, b, c):
    # roots of a x^2 + 2 b x + c
    if a == 0:
        return None if b == 0 else (-c / (2 * b), -c / (2 * b))
    disc = b * b - a * c
    if disc < 0:
        return None
    q = -(b + math.copysign(math.sqrt(disc), b))
    if q == 0:
        return (0.0, 0.0)
    r = sorted((q / a, c / q))
    return r[0], r[1]


def thresholds_2d(summary: BivariateSummary, z1: float):
    """z2-boundaries of the mixed test at fixed z1; None where the discriminant is negative.

    With a_t > 0 the H1 region is outside [t1, t2]; with a_t < 0 it is inside.
    a_t = 0 leaves a single linear threshold.
    """
    A, _, _ = summary.quadratic()
    if not A.any():
        raise DegenerateHypothesesError("identical precision matrices (A = 0)")
    a_t, b_t, c_t = (float(v) for v in _quad_in_z2(summary, z1))

    def f(z2):
        return float(lrt_2d_statistic(z1, z2, summary)[0])

    def df(z2):
        return a_t * z2 + b_t

    if a_t == 0.0:
        if b_t == 0.0:
            return None
        tau = _polish(f, df, -c_t / (2 * b_t))
        return Thresholds(tau, math.inf, True) if b_t > 0 else Thresholds(-math.inf, tau, True)
    roots = _real_roots(a_t, b_t, c_t)
    if roots is None:
        return None
    r1, r2 = sorted(_polish(f, df, r) for r in roots)
    return Thresholds(r1, r2, a_t < 0)


def _region_probs(a_t, b_t, c_t, m, s):
    """(P(z2 in H1 region), P(z2 in H0 region)) for z2 ~ N(m, s^2), vectorized over z1."""
    a_t = float(a_t)
    if a_t == 0.0:
        tau = -c_t / np.where(b_t == 0, 1.0, 2 * b_t)
        up = special.ndtr(-(tau - m) / s)
        down = special.ndtr((tau - m) / s)
        const = np.where(c_t > 0, 1.0, 0.0)
        p_h1 = np.where(b_t > 0, up, np.where(b_t < 0, down, const))
        return p_h1, np.where(b_t > 0, down, np.where(b_t < 0, up, 1.0 - const))
    disc = b_t * b_t - a_t * c_t
    real = disc > 0
    sq = np.sqrt(np.where(real, disc, 0.0))
    q = -(b_t + np.where(b_t >= 0, sq, -sq))
    safe_q = np.where(q == 0, 1.0, q)
    r1 = np.where(q == 0, 0.0, q / a_t)
    r2 = np.where(q == 0, 0.0, c_t / safe_q)
    lo, hi = np.minimum(r1, r2), np.maximum(r1, r2)
    inside = np.where(real, _norm_interval(m, s, lo, hi), 0.0)
    outside = np.where(real, _norm_outside(m, s, lo, hi), 1.0)
    return (outside, inside) if a_t > 0 else (inside, outside)


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(24)


@functools.lru_cache(maxsize=16)
def _unit_rule(panels):
    # Gauss-Legendre panels on [0, 1] pushed through the smoothstep w^2 (3 - 2w)
    base = ((np.arange(panels)[:, None] + 0.5 * (_GL_NODES[None, :] + 1)) / panels).ravel()
    ww = np.tile(_GL_WEIGHTS / (2 * panels), panels)
    return base * base * (3 - 2 * base), 6 * base * (1 - base) * ww


def _segment_rule(edges, panels):
    """Nodes/weights on each segment, smoothstep-mapped so sqrt-type endpoint kinks stay smooth."""
    g, gw = _unit_rule(panels)
    lo, hi = edges[:-1, None], edges[1:, None]
    return (lo + (hi - lo) * g).ravel(), ((hi - lo) * gw).ravel()


def theoretical_pe_mixed(summary: BivariateSummary, quad_tol: float = 1e-10,
                         conditional: bool = True, span: float = 12.0) -> float:
    """Error probability of the mixed test under its bivariate Gaussian model.

    For each hypothesis the probability of the wrong region is integrated over
    z1 against the N(mu_1k, c_11k) density; the inner z2-probability uses
    the conditional law of Z2 given Z1 (``conditional=True``) or its
    marginal N(mu_2k, c_22k) (``conditional=False``, which drops the
    correlation inside the error integral). The z1-axis is split where the
    z2-boundaries appear or merge. Raises IntegrationError if panel doubling
    cannot meet ``quad_tol``.
    """
    if not quad_tol > 0:
        raise ValueError("quad_tol must be positive")
    A, b, c = summary.quadratic()
    p1 = 1.0 / (1.0 + math.exp(summary.log_prior_ratio))
    weights_h = (1.0 - p1, p1)
    if not A.any() and not b.any():
        # identical laws: constant statistic c / 2
        return weights_h[0] if c > 0 else weights_h[1]
    m0, m1, c0, c1 = summary.arrays()
    cuts = []
    sr = s_range(summary)
    if sr is not None:
        cuts.extend(sr)
    if A[1, 1] == 0 and A[0, 1] != 0:
        cuts.append(-b[1] / A[0, 1])
    total = 0.0
    for k, (m, cv) in enumerate(((m0, c0), (m1, c1))):
        sd1 = math.sqrt(cv[0, 0])
        ucuts = sorted(u for u in ((x - m[0]) / sd1 for x in cuts) if -span < u < span)
        edges = np.array([-span, *ucuts, span])
        if conditional:
            slope = cv[0, 1] / cv[0, 0]
            s2 = math.sqrt(cv[1, 1] - cv[0, 1] ** 2 / cv[0, 0])
        else:
            slope, s2 = 0.0, math.sqrt(cv[1, 1])

        def err_prob(panels):
            u, w = _segment_rule(edges, panels)
            z1 = m[0] + sd1 * u
            a_t, b_t, c_t = _quad_in_z2(summary, z1, (A, b, c))
            probs = _region_probs(a_t, b_t, c_t, m[1] + slope * (z1 - m[0]), s2)
            wrong = probs[0] if k == 0 else probs[1]
            return float(np.sum(w * wrong * np.exp(-0.5 * u * u)) / math.sqrt(2 * math.pi))

        panels = 4
        prev = err_prob(panels)
        for _ in range(8):
            panels *= 2
            cur = err_prob(panels)
            if abs(cur - prev) <= quad_tol:
                break
            prev = cur
        else:
            raise IntegrationError(f"mixed error integral missed quad_tol={quad_tol}")
        total += weights_h[k] * cur
    return min(max(total, 0.0), 1.0)


# ---------------------------------------------------------------- ML detector

def ml_detect(obs, model, pdf_tol: float = DEFAULT_PDF_TOL) -> Decision:
    """Sum of log density ratios from the numerically inverted stable densities."""
    y = np.asarray(obs, dtype=float)
    if y.ndim != 1 or y.size < 1 or not np.all(np.isfinite(y)):
        raise ValueError("observation must be a non-empty finite 1-d sequence")
    l1 = np.log(np.maximum(pdf(model.h1, y, pdf_tol), DENSITY_FLOOR))
    l0 = np.log(np.maximum(pdf(model.h0, y, pdf_tol), DENSITY_FLOOR))
    diff = l1 - l0
    stat = math.fsum(diff) - model.log_prior_ratio
    return _decide(stat, float(np.sum(np.abs(l1) + np.abs(l0))) + abs(model.log_prior_ratio))


def ml_statistics(y, model, pdf_tol: float = DEFAULT_PDF_TOL, table_step: float = 0.01):
    """Vectorized ML statistic per row of ``y`` using cached density tables."""
    for law in (model.h0, model.h1):
        if law.mu != 0.0:
            raise ValueError("tabulated ML statistic assumes mu = 0")
    t1 = density_table(model.h1.alpha, model.h1.beta, pdf_tol, table_step)
    t0 = density_table(model.h0.alpha, model.h0.beta, pdf_tol, table_step)
    y2 = np.atleast_2d(np.asarray(y, dtype=float))
    return kernels.table_llr(y2, t1, model.h1.sigma, t0, model.h0.sigma) - model.log_prior_ratio


# ---------------------------------------------------------------- exponent choice

def p_grid(alpha: float, n: int = 200) -> np.ndarray:
    eps = 1e-3 * alpha
    return np.linspace(eps, alpha / 2 - eps, n)


def optimize_p(kind: str, model, L: int, independence_mode: bool = False,
               n_grid: int | None = None, polish: bool = True):
    """Exponent(s) minimizing the theoretical error probability.

    FLOM returns the floor 0.001; SIGNED searches a 200-point grid on
    (eps, alpha/2 - eps) with eps = 1e-3 alpha; MIXED searches a 50 x 50 grid
    restricted to p1 + p2 < alpha/2 and then refines the best feasible point
    with Nelder-Mead. LOG has no exponent and returns None.
    """
    kind = kind.upper()
    a = model.alpha
    if kind == "LOG":
        return None
    if kind == "FLOM":
        return FLOM_P
    if kind == "SIGNED":
        grid = p_grid(a, n_grid or 200)
        pes = [theoretical_pe_1d(summarize(StatKind.signed(p), model, L)) for p in grid]
        return float(grid[int(np.argmin(pes))])
    if kind not in ("MIXED", "MIXED-INDEP"):
        raise ValueError(f"unknown detector kind {kind!r}")
    indep = independence_mode or kind == "MIXED-INDEP"
    eps = 1e-3 * a
    limit = a / 2 - eps

    def pe(p1, p2):
        if p1 < eps or p2 < eps or p1 + p2 > limit:
            return math.inf
        try:
            val = theoretical_pe_mixed(summarize_mixed(model, p1, p2, L, indep), 1e-12)
        except (IntegrationError, ValueError):
            return math.inf
        return math.log(val) if val > 0 else -745.0

    grid = np.linspace(eps, limit - eps, n_grid or 50)
    best, best_val = None, math.inf
    for p1 in grid:
        for p2 in grid:
            if p1 + p2 <= limit:
                v = pe(p1, p2)
                if v < best_val:
                    best, best_val = (float(p1), float(p2)), v
    if best is None:
        raise ValueError("no feasible exponent pair")
    if polish:
        res = optimize.minimize(lambda x: pe(x[0], x[1]), np.array(best), method="Nelder-Mead",
                                options={"xatol": 1e-6 * a, "fatol": 1e-10, "maxiter": 400})
        if res.fun < best_val:
            best = (float(res.x[0]), float(res.x[1]))
    return best
