"""Poisson network model: physical parameters to the stable-law hypothesis pair.

The desired network's decisions arrive at the fusion center as a totally
positively skewed stable signal; the coexisting network's emissions arrive as
symmetric stable interference. Both follow from Campbell's theorem for a
Poisson field with path loss r^-delta, giving alpha = 2 / delta.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .stable import StableParams, c_alpha, combine, require_detection_alpha

THINNING_MODES = ("printed", "success")


class RegionTooSmallError(ConfigError):
    """Truncating the plane at the requested radius biases the aggregate too much."""


@dataclass(frozen=True)
class FadingSpec:
    """Real symmetric fading coefficient normalized to E[h^2] = 1.

    ``rayleigh``: |h| Rayleigh (so h^2 ~ Exp(1)) with an independent random sign.
    ``unit``: h = 1 deterministically.
    """

    kind: str = "rayleigh"

    def __post_init__(self):
        if self.kind not in ("rayleigh", "unit"):
            raise ValueError(f"unknown fading kind {self.kind!r}")

    def abs_moment(self, q: float) -> float:
        """E|h|^q."""
        if self.kind == "unit":
            return 1.0
        return math.gamma(1 + q / 2)

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        if self.kind == "unit":
            return np.ones(n)
        amp = np.sqrt(rng.standard_exponential(n))
        return np.where(rng.random(n) < 0.5, -amp, amp)


@dataclass(frozen=True)
class EmissionSpec:
    """Interferer emission w: ``two_point`` (+-scale), ``gaussian`` (sd scale) or ``zero``."""

    kind: str = "two_point"
    scale: float = 1.0

    def __post_init__(self):
        if self.kind not in ("two_point", "gaussian", "zero"):
            raise ValueError(f"unknown emission kind {self.kind!r}")
        if self.kind != "zero" and not self.scale > 0:
            raise ValueError("emission scale must be positive")

    def abs_moment(self, q: float) -> float:
        """E|w|^q."""
        if self.kind == "zero":
            return 0.0
        if self.kind == "two_point":
            return self.scale ** q
        return self.scale ** q * 2 ** (q / 2) * math.gamma((q + 1) / 2) / math.sqrt(math.pi)

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        if self.kind == "zero":
            return np.zeros(n)
        if self.kind == "two_point":
            return np.where(rng.random(n) < 0.5, -self.scale, self.scale)
        return self.scale * rng.standard_normal(n)


@dataclass(frozen=True)
class NetworkConfig:
    lambda_D: float
    lambda_I: float
    delta: float
    fading: FadingSpec = FadingSpec()
    p_local_error: float = 0.0
    m_amplitude: float = 1.0
    w_emission: EmissionSpec = EmissionSpec()
    thinning: str = "printed"

    def __post_init__(self):
        if not (self.lambda_D > 0 and self.lambda_I > 0):
            raise ValueError("node densities must be positive")
        if not self.delta > 1:
            raise ValueError(f"path-loss exponent must exceed 1, got {self.delta}")
        if not (0.0 <= self.p_local_error < 1.0):
            raise ValueError("p_local_error must lie in [0, 1)")
        if not self.m_amplitude > 0:
            raise ValueError("m_amplitude must be positive")
        if self.thinning not in THINNING_MODES:
            raise ValueError(f"thinning must be one of {THINNING_MODES}")

    @property
    def alpha(self) -> float:
        return 2.0 / self.delta


@dataclass(frozen=True)
class HypothesisPair:
    """Arbitrary pair of stable laws under H0 and H1 (no ordering invariants).

    Used where the laws come from estimates rather than the network model.
    """

    h0: StableParams
    h1: StableParams
    prior_H1: float = 0.5

    def __post_init__(self):
        require_detection_alpha(self.h0.alpha)
        require_detection_alpha(self.h1.alpha)
        if not 0.0 < self.prior_H1 < 1.0:
            raise ValueError("prior_H1 must lie in (0, 1)")

    @property
    def alpha(self) -> float:
        """Smaller of the two exponents; bounds the admissible moment orders."""
        return min(self.h0.alpha, self.h1.alpha)

    @property
    def log_prior_ratio(self) -> float:
        """log(P0 / P1); the LRT decides H1 when the log-likelihood ratio exceeds it."""
        return math.log((1 - self.prior_H1) / self.prior_H1)


@dataclass(frozen=True)
class HypothesisModel:
    """H0: Y ~ S_alpha(sigma_H0, 0, 0); H1: Y ~ S_alpha(sigma_H1, beta_H1, 0)."""

    alpha: float
    sigma_H1: float
    beta_H1: float
    sigma_H0: float
    prior_H1: float = 0.5

    def __post_init__(self):
        require_detection_alpha(self.alpha)
        if not self.sigma_H1 > self.sigma_H0 > 0:
            raise ValueError("need sigma_H1 > sigma_H0 > 0")
        if not 0.0 < self.beta_H1 < 1.0:
            raise ValueError("need 0 < beta_H1 < 1")
        if not 0.0 < self.prior_H1 < 1.0:
            raise ValueError("prior_H1 must lie in (0, 1)")

    @classmethod
    def from_scale_powers(cls, alpha: float, signal_power: float, noise_power: float = 1.0,
                          prior_H1: float = 0.5) -> HypothesisModel:
        """Model for sigma_S^alpha = signal_power and sigma_W^alpha = noise_power."""
        total = signal_power + noise_power
        return cls(alpha, total ** (1 / alpha), signal_power / total,
                   noise_power ** (1 / alpha), prior_H1)

    @classmethod
    def from_snr(cls, alpha: float, snr_db: float, sigma_W: float = 1.0) -> HypothesisModel:
        noise_power = sigma_W ** alpha
        return cls.from_scale_powers(alpha, noise_power * 10 ** (snr_db / 10), noise_power)

    @property
    def h0(self) -> StableParams:
        return StableParams(self.alpha, self.sigma_H0, 0.0, 0.0)

    @property
    def h1(self) -> StableParams:
        return StableParams(self.alpha, self.sigma_H1, self.beta_H1, 0.0)

    @property
    def signal_power(self) -> float:
        """sigma_S^alpha recovered as sigma_H1^alpha - sigma_H0^alpha."""
        return self.sigma_H1 ** self.alpha - self.sigma_H0 ** self.alpha

    @property
    def log_prior_ratio(self) -> float:
        return math.log((1 - self.prior_H1) / self.prior_H1)

    def as_pair(self) -> HypothesisPair:
        return HypothesisPair(self.h0, self.h1, self.prior_H1)


def _campbell_power(lam: float, alpha: float, abs_moment: float) -> float:
    # sigma^alpha = lambda (pi / 2) C_alpha^-1 E|X|^alpha
    return lam * (math.pi / 2) / c_alpha(alpha) * abs_moment


def signal_abs_moment(cfg: NetworkConfig, q: float) -> float:
    """E|X|^q for the signal mark X = h^2 M."""
    return cfg.m_amplitude ** q * cfg.fading.abs_moment(2 * q)


def interference_abs_moment(cfg: NetworkConfig, q: float) -> float:
    """E|X|^q for the interference mark X = h g w (h, g i.i.d. from the fading family)."""
    return cfg.fading.abs_moment(q) ** 2 * cfg.w_emission.abs_moment(q)


def signal_params(cfg: NetworkConfig) -> StableParams:
    """Aggregate signal law S_alpha(sigma_S, 1, 0)."""
    a = cfg.alpha
    require_detection_alpha(a)
    power = _campbell_power(cfg.lambda_D, a, signal_abs_moment(cfg, a))
    return StableParams(a, power ** (1 / a), 1.0, 0.0)


def interference_params(cfg: NetworkConfig) -> StableParams:
    """Aggregate interference law S_alpha(sigma_W, 0, 0)."""
    a = cfg.alpha
    require_detection_alpha(a)
    moment = interference_abs_moment(cfg, a)
    if moment == 0.0:
        raise ConfigError("interference scale is zero (degenerate H0); use a nonzero emission")
    power = _campbell_power(cfg.lambda_I, a, moment)
    return StableParams(a, power ** (1 / a), 0.0, 0.0)


def apply_local_error(cfg: NetworkConfig) -> NetworkConfig:
    """Thin the transmitting desired-network nodes by the local error rate.

    ``thinning="printed"`` keeps a fraction P_Le of nodes; ``"success"`` keeps 1 - P_Le.
    """
    p = cfg.p_local_error
    if not 0.0 < p < 1.0:
        raise ConfigError("apply_local_error needs p_local_error in (0, 1)")
    keep = p if cfg.thinning == "printed" else 1.0 - p
    return dataclasses.replace(cfg, lambda_D=cfg.lambda_D * keep)


def hypothesis_model(cfg: NetworkConfig) -> HypothesisModel:
    sig, intf = signal_params(cfg), interference_params(cfg)
    h1 = combine([sig, intf])
    return HypothesisModel(cfg.alpha, h1.sigma, h1.beta, intf.sigma)


def snr_m(model) -> float:
    """Modified SNR 10 log10(sigma_S^alpha / sigma_W^alpha) in dB."""
    return 10 * math.log10(model.signal_power / model.sigma_H0 ** model.alpha)


def truncation_bias(cfg: NetworkConfig, which: str, region_radius: float,
                    t_max: float = 5.0) -> float:
    """Relative log-CF error at |t| = t_max from dropping nodes beyond the radius.

    The leading (mean) term of the missing tail is added back by
    :func:`simulate_aggregate`, so the reported error is the next term,
    pi lambda t^2 E[X^2] R^(2 - 2 delta) / (2 delta - 2), over sigma^alpha t^alpha.
    """
    lam, x2, params = _field_terms(cfg, which)
    d = cfg.delta
    resid = math.pi * lam * t_max ** 2 * x2 * region_radius ** (2 - 2 * d) / (2 * d - 2)
    return resid / (params.scale_power * t_max ** params.alpha)


def default_region_radius(cfg: NetworkConfig, which: str, max_bias: float = 0.005,
                          t_max: float = 5.0) -> float:
    """Smallest radius whose truncation bias is max_bias (plus 10% margin)."""
    unit = truncation_bias(cfg, which, 1.0, t_max)
    return 1.1 * (unit / max_bias) ** (1 / (2 * cfg.delta - 2))


def _field_terms(cfg: NetworkConfig, which: str):
    if which == "signal":
        return cfg.lambda_D, signal_abs_moment(cfg, 2.0), signal_params(cfg)
    if which == "interference":
        return cfg.lambda_I, interference_abs_moment(cfg, 2.0), interference_params(cfg)
    raise ValueError(f"which must be 'signal' or 'interference', got {which!r}")


def simulate_aggregate(cfg: NetworkConfig, which: str, region_radius: float | None,
                       rng: np.random.Generator, size: int = 1, max_bias: float = 0.005,
                       t_max: float = 5.0, chunk: int = 20000) -> np.ndarray:
    """Draws of sum_i X_i / r_i^delta over a Poisson field on a disc.

    Nodes are placed uniformly on the disc of the given radius with a
    Poisson(lambda pi R^2) count; marks are X = h^2 M (signal) or h g w
    (interference). No guard zone is used around the receiver. For
    nonnegative marks the expected contribution of the nodes beyond R,
    2 pi lambda E[X] R^(2 - delta) / (delta - 2), is added so the truncated
    sum keeps the untruncated location.

    Raises RegionTooSmallError when :func:`truncation_bias` exceeds max_bias.
    """
    lam, _, _ = _field_terms(cfg, which)
    if region_radius is None:
        region_radius = default_region_radius(cfg, which, max_bias, t_max)
    bias = truncation_bias(cfg, which, region_radius, t_max)
    if bias > max_bias:
        raise RegionTooSmallError(
            f"radius {region_radius:g} gives truncation bias {bias:.3g} > {max_bias:g}")
    shift = 0.0
    if which == "signal":
        if cfg.delta <= 2:
            raise ConfigError("nonnegative aggregate needs delta > 2 (alpha < 1)")
        shift = (2 * math.pi * lam * signal_abs_moment(cfg, 1.0)
                 * region_radius ** (2 - cfg.delta) / (cfg.delta - 2))
    out = np.empty(size)
    mean_count = lam * math.pi * region_radius ** 2
    for start in range(0, size, chunk):
        n = min(chunk, size - start)
        counts = rng.poisson(mean_count, n)
        total = int(counts.sum())
        r = region_radius * np.sqrt(rng.random(total))
        if which == "signal":
            h = cfg.fading.sample(rng, total)
            marks = h * h * cfg.m_amplitude
        else:
            marks = (cfg.fading.sample(rng, total) * cfg.fading.sample(rng, total)
                     * cfg.w_emission.sample(rng, total))
        contrib = marks * r ** (-cfg.delta)
        owner = np.repeat(np.arange(n), counts)
        out[start:start + n] = np.bincount(owner, weights=contrib, minlength=n)
    return out + shift


def empirical_cf(samples, t):
    """(1/N) sum exp(j t y_i); scalar t gives a complex, array t an array."""
    y = np.asarray(samples, dtype=float).ravel()
    if y.size == 0:
        raise ValueError("need at least one sample")
    tt = np.asarray(t, dtype=float)
    val = np.exp(1j * np.multiply.outer(tt, y)).mean(axis=-1)
    return complex(val) if val.ndim == 0 else val
