import dataclasses
import math

import numpy as np
import pytest

from stabledetect.errors import ConfigError
from stabledetect.field import (EmissionSpec, FadingSpec, HypothesisModel, HypothesisPair,
                                NetworkConfig, RegionTooSmallError, apply_local_error,
                                empirical_cf, hypothesis_model, interference_params,
                                signal_params, simulate_aggregate, snr_m, truncation_bias)
from stabledetect.stable import StableParams, c_alpha, char_fn, combine

UNIT = FadingSpec("unit")


def unit_density(alpha):
    # lambda with lambda (pi/2) C_alpha^-1 = 1
    return c_alpha(alpha) / (math.pi / 2)


class TestSpecs:
    def test_rayleigh_second_moment(self):
        assert FadingSpec().abs_moment(2) == 1.0

    def test_rayleigh_moment_vs_samples(self, rng):
        h = FadingSpec().sample(rng, 10 ** 6)
        x = np.abs(h)  # E[h^{2 alpha}] at alpha = 0.5
        se = x.std(ddof=1) / 1e3
        assert abs(x.mean() - FadingSpec().abs_moment(1.0)) < 3 * se
        assert abs(np.mean(h > 0) - 0.5) < 3 * 0.5e-3

    def test_gaussian_emission_moment(self, rng):
        e = EmissionSpec("gaussian", 2.0)
        x = np.abs(e.sample(rng, 10 ** 6)) ** 0.9
        assert abs(x.mean() - e.abs_moment(0.9)) < 3 * x.std(ddof=1) / 1e3

    def test_bad_specs(self):
        with pytest.raises(ValueError):
            FadingSpec("nakagami")
        with pytest.raises(ValueError):
            EmissionSpec("two_point", 0.0)
        with pytest.raises(ValueError):
            NetworkConfig(1.0, 1.0, 1.0)
        with pytest.raises(ValueError):
            NetworkConfig(1.0, 1.0, 4.0, p_local_error=1.0)
        with pytest.raises(ValueError):
            NetworkConfig(0.0, 1.0, 4.0)


class TestSignal:
    def test_unit_scale(self):
        cfg = NetworkConfig(unit_density(0.5), 1.0, 4.0, UNIT)
        p = signal_params(cfg)
        assert p.alpha == 0.5 and p.beta == 1.0
        assert p.sigma == pytest.approx(1.0, rel=1e-14)

    def test_linear_in_density(self):
        cfg = NetworkConfig(0.3, 1.0, 4.0)
        s1 = signal_params(cfg).scale_power
        s2 = signal_params(dataclasses.replace(cfg, lambda_D=0.6)).scale_power
        assert s2 == pytest.approx(2 * s1, rel=1e-14)

    def test_rayleigh_formula(self):
        a = 0.5
        cfg = NetworkConfig(0.7, 1.0, 2 / a)
        expect = 0.7 * (math.pi / 2) / c_alpha(a) * math.gamma(1 + a)
        assert signal_params(cfg).scale_power == pytest.approx(expect, rel=1e-14)


class TestInterference:
    def test_unit_scale(self):
        cfg = NetworkConfig(1.0, unit_density(0.5), 4.0, UNIT)
        p = interference_params(cfg)
        assert p.beta == 0.0 and p.sigma == pytest.approx(1.0, rel=1e-14)

    def test_two_point_formula(self):
        cfg = NetworkConfig(1.0, 0.4, 2.222, UNIT)
        a = 2 / 2.222
        assert interference_params(cfg).scale_power == pytest.approx(
            0.4 * (math.pi / 2) / c_alpha(a), rel=1e-14)

    def test_zero_emission(self):
        with pytest.raises(ConfigError):
            interference_params(NetworkConfig(1.0, 1.0, 4.0, w_emission=EmissionSpec("zero")))


class TestLocalError:
    def test_half(self):
        cfg = NetworkConfig(1.0, 1.0, 4.0, p_local_error=0.5)
        thin = apply_local_error(cfg)
        assert signal_params(thin).scale_power == pytest.approx(
            0.5 * signal_params(cfg).scale_power, rel=1e-14)
        drop = snr_m(hypothesis_model(thin)) - snr_m(hypothesis_model(cfg))
        assert drop == pytest.approx(10 * math.log10(0.5), abs=1e-12)
        assert drop == pytest.approx(-3.0103, abs=1e-4)

    def test_tenth_scale(self):
        cfg = NetworkConfig(1.0, 1.0, 4.0, p_local_error=0.1)
        assert signal_params(apply_local_error(cfg)).sigma == pytest.approx(
            0.01 * signal_params(cfg).sigma, rel=1e-12)

    def test_near_one(self):
        cfg = NetworkConfig(1.0, 1.0, 4.0, p_local_error=1 - 1e-12)
        assert apply_local_error(cfg).lambda_D == pytest.approx(1.0, rel=1e-11)

    def test_success_mode(self):
        cfg = NetworkConfig(2.0, 1.0, 4.0, p_local_error=0.2, thinning="success")
        assert apply_local_error(cfg).lambda_D == pytest.approx(1.6)

    def test_zero_rejected(self):
        with pytest.raises(ConfigError):
            apply_local_error(NetworkConfig(1.0, 1.0, 4.0))

    def test_snr_increasing_in_p(self):
        base = NetworkConfig(1.0, 1.0, 4.0)
        snrs = [snr_m(hypothesis_model(apply_local_error(
            dataclasses.replace(base, p_local_error=p)))) for p in np.linspace(0.05, 0.95, 19)]
        assert all(x < y for x, y in zip(snrs, snrs[1:]))


class TestHypothesisModel:
    def test_consistency_with_combine(self):
        cfg = NetworkConfig(0.8, 1.3, 2.222)
        m = hypothesis_model(cfg)
        ref = combine([signal_params(cfg), interference_params(cfg)])
        assert (m.sigma_H1, m.beta_H1) == (ref.sigma, ref.beta)
        assert m.sigma_H0 == interference_params(cfg).sigma
        assert 0 < m.beta_H1 < 1

    def test_equal_powers(self):
        m = HypothesisModel.from_scale_powers(0.5, 1.0, 1.0)
        assert m.beta_H1 == 0.5 and m.sigma_H1 == pytest.approx(4.0)

    def test_derived_example(self):
        m = HypothesisModel.from_scale_powers(0.5, 3.0, 1.0)
        assert m.beta_H1 == 0.75 and m.sigma_H1 == pytest.approx(16.0, rel=1e-14)

    def test_small_signal_limit(self):
        m = HypothesisModel.from_scale_powers(0.5, 1e-9, 1.0)
        assert m.beta_H1 < 1e-8 and m.sigma_H1 == pytest.approx(m.sigma_H0, rel=1e-8)

    def test_snr_examples(self):
        assert snr_m(HypothesisModel.from_scale_powers(0.5, 1.0, 1.0)) == pytest.approx(0.0, abs=1e-12)
        assert snr_m(HypothesisModel.from_scale_powers(0.5, 10.0, 1.0)) == pytest.approx(10.0)
        assert snr_m(HypothesisModel.from_scale_powers(0.9, 2.0, 1.0)) == pytest.approx(3.0103, abs=1e-4)

    def test_from_snr_zero_db(self):
        assert HypothesisModel.from_snr(0.5, 0.0).beta_H1 == pytest.approx(0.5)

    def test_invariants(self):
        with pytest.raises(ValueError):
            HypothesisModel(0.5, 1.0, 0.5, 2.0)
        with pytest.raises(ValueError):
            HypothesisModel(0.5, 2.0, 1.0, 1.0)
        with pytest.raises(ValueError):
            HypothesisModel(1.0, 2.0, 0.5, 1.0)

    def test_pair(self):
        pair = HypothesisPair(StableParams(0.5, 1.0), StableParams(0.52, 2.0, 0.4))
        assert pair.alpha == 0.5 and pair.log_prior_ratio == 0.0


class TestSimulation:
    def test_empirical_cf_trivial(self):
        assert empirical_cf([0.0, 0.0, 0.0], 2.3) == 1 + 0j
        assert empirical_cf([1.5], 2.0) == pytest.approx(np.exp(3j))
        with pytest.raises(ValueError):
            empirical_cf([], 1.0)

    def test_empirical_cf_sampling_oracle(self):
        from oracles import draws
        y = draws(0.5, 1.0, n=10 ** 6, seed=4)
        assert abs(empirical_cf(y, 1.0) - char_fn(StableParams(0.5, 1.0, 1.0), 1.0)) < 4e-3

    def test_empty_field(self, rng):
        cfg = NetworkConfig(1e-9, 1e-9, 4.0)
        y = simulate_aggregate(cfg, "interference", 10.0, rng, 1000)
        assert np.count_nonzero(y) <= 1

    def test_signal_positive(self, rng):
        cfg = NetworkConfig(unit_density(0.5), 1.0, 4.0)
        assert simulate_aggregate(cfg, "signal", None, rng, 100_000).min() > 0

    def test_region_too_small(self, rng):
        cfg = NetworkConfig(1.0, 1.0, 4.0)
        with pytest.raises(RegionTooSmallError):
            simulate_aggregate(cfg, "interference", 0.5, rng, 10)

    def test_signal_needs_alpha_below_one(self, rng):
        cfg = NetworkConfig(1.0, 1.0, 2.222 / 1.5)
        with pytest.raises(ConfigError):
            simulate_aggregate(cfg, "signal", None, rng, 10)

    def test_bias_decreases_with_radius(self):
        cfg = NetworkConfig(1.0, 1.0, 2.222)
        b = [truncation_bias(cfg, "interference", r) for r in (1.0, 2.0, 4.0, 8.0)]
        assert all(x > y for x, y in zip(b, b[1:]))

    @pytest.mark.parametrize("which", ["interference", "signal"])
    def test_cf_matches_theorem(self, which):
        n = 40_000
        cfg = NetworkConfig(unit_density(0.5), unit_density(0.5), 4.0, UNIT)
        y = simulate_aggregate(cfg, which, None, np.random.default_rng(8), n)
        law = signal_params(cfg) if which == "signal" else interference_params(cfg)
        t = np.round(np.arange(1, 51) * 0.1, 10)
        diff = empirical_cf(y, t) - char_fn(law, t)
        bound = 4 / math.sqrt(n)
        assert np.max(np.abs(diff.real)) < bound and np.max(np.abs(diff.imag)) < bound

    def test_reproducible(self):
        cfg = NetworkConfig(1.0, 1.0, 4.0)
        a = simulate_aggregate(cfg, "interference", None, np.random.default_rng(1), 500)
        b = simulate_aggregate(cfg, "interference", None, np.random.default_rng(1), 500)
        assert np.array_equal(a, b)
