"""Alpha-stable laws in the S1 (tan) parameterization.

A law ``S_alpha(sigma, beta, mu)`` has characteristic function

    phi(t) = exp(j mu t - |sigma t|^alpha (1 - j beta sign(t) omega(t, alpha)))

with ``omega = tan(pi alpha / 2)`` for alpha != 1 and ``-(2/pi) log|t|`` at alpha = 1.
"""

from __future__ import annotations

import functools
import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import integrate

from . import kernels
from .errors import IntegrationError

DEFAULT_PDF_TOL = 1e-8
LOG_DENSITY_FLOOR = math.log(1e-300)


@dataclass(frozen=True)
class StableParams:
    alpha: float
    sigma: float
    beta: float = 0.0
    mu: float = 0.0

    def __post_init__(self):
        if not (0.0 < self.alpha < 2.0):
            raise ValueError(f"alpha must lie in (0, 2), got {self.alpha}")
        if not (self.sigma > 0.0 and math.isfinite(self.sigma)):
            raise ValueError(f"sigma must be positive and finite, got {self.sigma}")
        if not (-1.0 <= self.beta <= 1.0):
            raise ValueError(f"beta must lie in [-1, 1], got {self.beta}")
        if not math.isfinite(self.mu):
            raise ValueError("mu must be finite")

    @property
    def scale_power(self) -> float:
        """sigma**alpha, the quantity that adds under independent summation."""
        return self.sigma ** self.alpha

    def scaled(self, c: float) -> StableParams:
        """Law of ``c * Y`` for ``c > 0`` (alpha != 1)."""
        return StableParams(self.alpha, self.sigma * c, self.beta, self.mu * c)


def require_detection_alpha(alpha: float) -> None:
    """Detection formulas involve tan(pi alpha/2) and C_alpha, both singular at alpha = 1."""
    if not (0.0 < alpha < 2.0) or alpha == 1.0:
        raise ValueError(f"detection requires alpha in (0, 1) or (1, 2), got {alpha}")


def char_fn(params: StableParams, t):
    """Characteristic function; scalar ``t`` gives a Python complex, arrays give arrays."""
    a, s, b, mu = params.alpha, params.sigma, params.beta, params.mu
    tt = np.asarray(t, dtype=float)
    st = np.abs(s * tt) ** a
    sign = np.sign(tt)
    if a == 1.0:
        with np.errstate(divide="ignore", invalid="ignore"):
            omega = np.where(tt == 0, 0.0, -(2 / np.pi) * np.log(np.abs(tt)))
    else:
        omega = math.tan(math.pi * a / 2)
    val = np.exp(1j * mu * tt - st * (1 - 1j * b * sign * omega))
    if np.ndim(val) == 0:
        return complex(val)
    return val


def c_alpha(alpha: float) -> float:
    """Normalization constant (1 - alpha) / (Gamma(2 - alpha) 2 cos(pi alpha / 2))."""
    if not (0.0 < alpha < 2.0):
        raise ValueError(f"alpha must lie in (0, 2), got {alpha}")
    if alpha == 1.0:
        raise ValueError("C_alpha is a removable 0/0 at alpha = 1 and is not supported")
    return (1 - alpha) / (math.gamma(2 - alpha) * 2 * math.cos(math.pi * alpha / 2))


def sample(params: StableParams, rng: np.random.Generator, size=None):
    """Draw from the law with the Chambers-Mallows-Stuck transform of uniforms.

    Consumes one uniform and one exponential stream per draw, in that order,
    so a fixed generator state gives a fixed sample.
    """
    n = 1 if size is None else int(np.prod(size))
    v = rng.uniform(-np.pi / 2, np.pi / 2, n)
    w = rng.standard_exponential(n)
    x = kernels.cms_transform(v, w, params.alpha, params.beta)
    y = params.sigma * x + params.mu
    if params.alpha == 1.0:
        y = y + (2 / np.pi) * params.beta * params.sigma * math.log(params.sigma)
    if size is None:
        return float(y[0])
    return y.reshape(size)


def pdf(params: StableParams, y, tol: float = DEFAULT_PDF_TOL):
    """Density by numerical inversion of the characteristic function.

    For alpha != 1 the inversion contour is deformed onto the path where the
    integrand phase vanishes, leaving a positive integrand on a finite
    interval that the compiled adaptive Gauss-Kronrod routine resolves to
    relative precision (so far tails keep their accuracy). At alpha = 1 the
    real-axis integral is used.

    Raises IntegrationError when any point misses ``tol``.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    yy = np.asarray(y, dtype=float)
    x = ((yy - params.mu) / params.sigma).ravel()
    if params.alpha == 1.0:
        x = x - (2 / np.pi) * params.beta * math.log(params.sigma)
        vals = np.array([_fourier_standard(xi, 1.0, params.beta, tol * params.sigma) for xi in x])
    else:
        vals, failed = kernels.pdf_standard(x, params.alpha, params.beta, tol * params.sigma)
        if failed:
            raise IntegrationError(f"density quadrature missed tol={tol} at {failed} point(s)")
    out = vals.reshape(yy.shape) / params.sigma
    return float(out) if out.ndim == 0 else out


def pdf_fourier(params: StableParams, y: float, tol: float = DEFAULT_PDF_TOL) -> float:
    """Density from the real-axis integral (1/pi) int_0^inf Re[phi(t) e^{-jty}] dt.

    Slower and less accurate in the tails than :func:`pdf`; kept as an
    independent route for cross-checks and for alpha = 1.
    """
    x = (y - params.mu) / params.sigma
    if params.alpha == 1.0:
        x -= (2 / np.pi) * params.beta * math.log(params.sigma)
    return _fourier_standard(x, params.alpha, params.beta, tol * params.sigma) / params.sigma


def _fourier_standard(x: float, alpha: float, beta: float, tol: float) -> float:
    if alpha == 1.0:
        def skew_phase(t):
            return -beta * (2 / np.pi) * t * math.log(t) if t > 0 else 0.0
    else:
        omega = math.tan(math.pi * alpha / 2)

        def skew_phase(t):
            return beta * omega * t ** alpha

    def integrand(t):
        return math.exp(-t ** alpha) * math.cos(skew_phase(t) - t * x)

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, err = integrate.quad(integrand, 0, np.inf, epsabs=tol * 1e-2, epsrel=1e-10,
                                  limit=5000)
    if err > tol:
        raise IntegrationError(f"Fourier inversion error estimate {err:.2e} exceeds tol={tol}")
    return max(val / math.pi, 0.0)


def combine(terms: Sequence[StableParams]) -> StableParams:
    """Parameters of the sum of independent stable terms sharing one alpha."""
    if not terms:
        raise ValueError("need at least one term")
    alpha = terms[0].alpha
    if any(p.alpha != alpha for p in terms):
        raise ValueError("all terms must share the same alpha")
    if len(terms) == 1:
        return terms[0]
    powers = [p.scale_power for p in terms]
    total = math.fsum(powers)
    beta = math.fsum(p.beta * w for p, w in zip(terms, powers)) / total
    return StableParams(alpha, total ** (1 / alpha), min(1.0, max(-1.0, beta)),
                        math.fsum(p.mu for p in terms))


class DensityTable:
    """Tabulated standardized log-density for fast repeated evaluation.

    The log-density of S_alpha(1, beta, 0) is stored on a uniform grid in
    ``u = asinh(x / x0)`` and linearly interpolated; beyond the grid the
    power-law tail ``|x|^-(1 + alpha)`` continues the edge values. The
    largest interpolation error found on a midpoint check is kept in
    ``max_log_error`` (natural-log units).
    """

    def __init__(self, alpha: float, beta: float, tol: float = DEFAULT_PDF_TOL,
                 x0: float = 0.1, u_max: float = 31.0, step: float = 0.01):
        self.alpha = float(alpha)
        self.beta = float(beta)
        self.x0 = float(x0)
        self.step = float(step)
        n = int(round(2 * u_max / step)) + 1
        self.u0 = -step * (n - 1) / 2
        u = self.u0 + step * np.arange(n)
        dens, failed = kernels.pdf_standard(x0 * np.sinh(u), alpha, beta, tol)
        if failed:
            raise IntegrationError(f"density table build failed at {failed} point(s)")
        with np.errstate(divide="ignore"):
            self.log_values = np.maximum(np.log(dens), LOG_DENSITY_FLOOR)
        self.tail_slope = -(1.0 + self.alpha)
        self.max_log_error = self._check_midpoints(tol)

    def _check_midpoints(self, tol: float, stride: int = 7) -> float:
        idx = np.arange(0, self.log_values.size - 1, stride)
        um = self.u0 + self.step * (idx + 0.5)
        exact, _ = kernels.pdf_standard(self.x0 * np.sinh(um), self.alpha, self.beta, tol)
        interp = 0.5 * (self.log_values[idx] + self.log_values[idx + 1])
        ok = exact > 1e-250
        if not ok.any():
            return 0.0
        return float(np.max(np.abs(np.log(exact[ok]) - interp[ok])))

    def logpdf(self, y, sigma: float = 1.0):
        """log density of ``sigma * X`` at ``y``."""
        return kernels.table_logpdf(y, self, sigma)


@functools.lru_cache(maxsize=64)
def density_table(alpha: float, beta: float, tol: float = DEFAULT_PDF_TOL,
                  step: float = 0.01) -> DensityTable:
    """Cached :class:`DensityTable` keyed by (alpha, beta, tol, step)."""
    return DensityTable(alpha, beta, tol, step=step)
