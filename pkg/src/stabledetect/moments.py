"""Closed-form fractional, signed and logarithmic moments of S_alpha(sigma, beta, 0)."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .stable import StableParams

EULER_GAMMA = float(np.euler_gamma)


@dataclass(frozen=True)
class StatKind:
    """Per-sample statistic: |y|^p (FLOM), sign(y)|y|^p (SIGNED) or log|y| (LOG)."""

    tag: str
    p: float | None = None

    def __post_init__(self):
        if self.tag not in ("FLOM", "SIGNED", "LOG"):
            raise ValueError(f"unknown statistic {self.tag!r}")
        if self.tag == "LOG":
            if self.p is not None:
                raise ValueError("LOG takes no exponent")
        elif self.p is None or not self.p > 0:
            raise ValueError(f"{self.tag} needs an exponent p > 0")

    @classmethod
    def flom(cls, p: float) -> StatKind:
        return cls("FLOM", float(p))

    @classmethod
    def signed(cls, p: float) -> StatKind:
        return cls("SIGNED", float(p))

    @classmethod
    def log(cls) -> StatKind:
        return cls("LOG")

    def check(self, alpha: float) -> None:
        """Variance of the statistic exists only for p < alpha / 2."""
        if self.p is not None and not self.p < alpha / 2:
            raise ValueError(f"{self.tag} exponent p={self.p} must be < alpha/2={alpha / 2}")

    def apply(self, y):
        """Elementwise statistic (used by reference paths and tests)."""
        y = np.asarray(y, dtype=float)
        if self.tag == "LOG":
            return np.log(np.abs(y))
        val = np.abs(y) ** self.p
        return np.sign(y) * val if self.tag == "SIGNED" else val


def _skew_angle(params: StableParams) -> float:
    # arctan(beta tan(pi alpha / 2)); zero skew is exact even at alpha = 1
    if params.beta == 0.0:
        return 0.0
    if params.alpha == 1.0:
        raise ValueError("skewed moments are undefined at alpha = 1 in this parameterization")
    return math.atan(params.beta * math.tan(math.pi * params.alpha / 2))


def _check(params: StableParams, p: float) -> None:
    if params.mu != 0.0:
        raise ValueError("moment formulas assume mu = 0")
    if not (0.0 < p < params.alpha):
        raise ValueError(f"p must lie in (0, alpha={params.alpha}), got {p}")


def flom_mean(params: StableParams, p: float) -> float:
    """E|Y|^p for 0 < p < alpha."""
    _check(params, p)
    a, theta = params.alpha, _skew_angle(params)
    # Gamma(1-p) cos(p pi/2) rewritten by reflection as pi / (2 Gamma(p) sin(p pi/2)),
    # which stays finite through p = 1
    head = math.gamma(1 - p / a) * 2 * math.gamma(p) * math.sin(p * math.pi / 2) / math.pi
    return head * math.cos(theta) ** (-p / a) * math.cos(p * theta / a) * params.sigma ** p


def signed_flom_mean(params: StableParams, p: float) -> float:
    """E[sign(Y)|Y|^p] for 0 < p < alpha; odd in beta."""
    _check(params, p)
    a, theta = params.alpha, _skew_angle(params)
    if theta == 0.0:
        return 0.0
    head = math.gamma(1 - p / a) * 2 * math.gamma(p) * math.cos(p * math.pi / 2) / math.pi
    return head * math.cos(theta) ** (-p / a) * math.sin(p * theta / a) * params.sigma ** p


def log_moments(params: StableParams) -> tuple[float, float]:
    """Mean and variance of log|Y|."""
    if params.mu != 0.0:
        raise ValueError("moment formulas assume mu = 0")
    a, theta = params.alpha, _skew_angle(params)
    mean = EULER_GAMMA * (1 / a - 1) + math.log(params.sigma) - math.log(math.cos(theta)) / a
    var = math.pi ** 2 / 12 + math.pi ** 2 / (6 * a * a) - theta * theta / (a * a)
    return mean, var


def statistic_mean(kind: StatKind, params: StableParams) -> float:
    if kind.tag == "FLOM":
        return flom_mean(params, kind.p)
    if kind.tag == "SIGNED":
        return signed_flom_mean(params, kind.p)
    return log_moments(params)[0]


def statistic_variance(kind: StatKind, params: StableParams,
                       printed_signed_second_moment: bool = False) -> float:
    """Per-sample variance of the statistic.

    For SIGNED the second moment is E|Y|^{2p}, since (sign(y)|y|^p)^2 = |y|^{2p}.
    ``printed_signed_second_moment=True`` substitutes E[sign(Y)|Y|^{2p}] instead,
    for comparison only; it is not a variance and can come out negative.
    """
    kind.check(params.alpha)
    if kind.tag == "LOG":
        return log_moments(params)[1]
    p = kind.p
    if kind.tag == "FLOM":
        return flom_mean(params, 2 * p) - flom_mean(params, p) ** 2
    second = (signed_flom_mean(params, 2 * p) if printed_signed_second_moment
              else flom_mean(params, 2 * p))
    return second - signed_flom_mean(params, p) ** 2


def mixed_covariance(params: StableParams, p1: float, p2: float) -> float:
    """cov(|Y|^p1, sign(Y)|Y|^p2), defined here for p1 + p2 < alpha / 2."""
    if not (p1 > 0 and p2 > 0):
        raise ValueError("exponents must be positive")
    if not p1 + p2 < params.alpha / 2:
        raise ValueError(f"need p1 + p2 < alpha/2 = {params.alpha / 2}, got {p1 + p2}")
    return (signed_flom_mean(params, p1 + p2)
            - flom_mean(params, p1) * signed_flom_mean(params, p2))
