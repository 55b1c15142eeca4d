"""Moment-method estimation of (alpha, sigma, beta) with mu fixed at 0.

The skew angle theta = arctan(beta tan(pi alpha / 2)) comes from the ratio of
signed to unsigned fractional moments at p = 0.1 alpha,
r = tan(p theta / alpha) / tan(p pi / 2); alpha then follows from the
variance of log|Y|, var = pi^2/12 + (pi^2/6 - theta^2) / alpha^2, and sigma
from its mean. The two relations are iterated to a common fixed point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConvergenceError
from .moments import EULER_GAMMA
from .stable import StableParams

ALPHA_BOUNDS = (0.05, 1.95)
MAX_ITER = 20
TOL = 1e-6


class DegenerateSampleError(ValueError):
    pass


@dataclass(frozen=True)
class EstimationReport:
    params: StableParams
    n_samples: int
    diagnostics: dict = field(default_factory=dict)


def _theta_bound(alpha: float) -> float:
    return min(alpha * math.pi / 2, math.pi - alpha * math.pi / 2)


def _fit(x: np.ndarray):
    """Fixed point on samples already divided by a positive scale."""
    la = np.log(np.abs(x))
    mean_l = float(np.mean(la))
    excess = float(np.var(la, ddof=1)) - math.pi ** 2 / 12
    sign = np.sign(x)
    lo, hi = ALPHA_BOUNDS

    # with phi = theta / alpha the log variance reads pi^2/12 + pi^2/(6 alpha^2) - phi^2,
    # whose solution for alpha stays well conditioned even when theta^2 > pi^2/6
    def alpha_from(phi):
        denom = excess + phi * phi
        if denom <= 0:
            return hi
        return min(hi, max(lo, math.sqrt(math.pi ** 2 / 6 / denom)))

    def step(alpha):
        p = 0.1 * alpha
        powered = np.exp(p * la)
        ratio = float(np.mean(sign * powered) / np.mean(powered))
        phi = math.atan(ratio * math.tan(p * math.pi / 2)) / p
        return alpha_from(phi), phi

    # Steffensen-accelerated fixed point alpha = step(alpha)
    alpha = alpha_from(0.0)
    for it in range(1, MAX_ITER + 1):
        a1, _ = step(alpha)
        a2, _ = step(a1)
        denom = a2 - 2 * a1 + alpha
        nxt = alpha - (a1 - alpha) ** 2 / denom if denom != 0 else a2
        if not lo <= nxt <= hi:
            nxt = a2
        done = abs(nxt - alpha) < TOL
        alpha = nxt
        if done:
            break
    else:
        raise ConvergenceError(f"moment estimator did not settle in {MAX_ITER} iterations")
    alpha, phi = step(alpha)
    bound = _theta_bound(alpha)
    theta = min(bound, max(-bound, alpha * phi))
    beta = min(1.0, max(-1.0, math.tan(theta) / math.tan(alpha * math.pi / 2)))
    log_sigma = mean_l - EULER_GAMMA * (1 / alpha - 1) + math.log(math.cos(theta)) / alpha
    return alpha, beta, log_sigma, it


def estimate_params(samples, n_bootstrap: int = 0, rng: np.random.Generator | None = None
                    ) -> EstimationReport:
    """Estimate S_alpha(sigma, beta, 0) from i.i.d. samples.

    Samples are first divided by the median of |y|, so rescaling the input
    by c changes only sigma (by c) up to rounding; scalings by powers of two
    leave alpha and beta bit-identical. ``n_bootstrap`` resamples give
    standard errors in ``diagnostics``.
    """
    y = np.asarray(samples, dtype=float).ravel()
    if y.size < 50:
        raise ValueError("need at least 50 samples")
    if not np.all(np.isfinite(y)):
        raise ValueError("samples must be finite")
    if np.all(y == y[0]):
        raise DegenerateSampleError("all samples are equal")
    y = y[y != 0.0]
    if y.size < 50:
        raise DegenerateSampleError("too many exact zeros")
    scale = float(np.median(np.abs(y)))
    alpha, beta, log_sigma, iters = _fit(y / scale)
    sigma = math.exp(log_sigma) * scale
    diagnostics = {"iterations": iters}
    if n_bootstrap > 0:
        rng = rng if rng is not None else np.random.default_rng()
        draws = []
        for _ in range(n_bootstrap):
            yb = y[rng.integers(0, y.size, y.size)]
            sb = float(np.median(np.abs(yb)))
            try:
                a, b, ls, _ = _fit(yb / sb)
            except ConvergenceError:
                continue
            draws.append((a, b, math.exp(ls) * sb))
        if len(draws) > 1:
            arr = np.array(draws)
            se = arr.std(axis=0, ddof=1)
            diagnostics.update(se_alpha=float(se[0]), se_beta=float(se[1]),
                               se_sigma=float(se[2]), n_bootstrap=len(draws))
    return EstimationReport(StableParams(alpha, sigma, beta, 0.0), int(y.size), diagnostics)
