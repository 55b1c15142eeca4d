import dataclasses
import math

import numpy as np
from hypothesis import HealthCheck, assume, given, settings
from hypothesis import strategies as st

from stabledetect import detectors as D
from stabledetect.field import (HypothesisModel, NetworkConfig, apply_local_error, hypothesis_model,
                                snr_m)
from stabledetect.harness import ExperimentConfig, run_ber_sweep
from stabledetect.moments import StatKind
from stabledetect.stable import StableParams, char_fn, combine, sample

SETTINGS = settings(deadline=None, max_examples=40,
                    suppress_health_check=[HealthCheck.too_slow])

alphas = st.floats(0.2, 0.9)
snrs = st.floats(-15.0, 20.0)
Ls = st.sampled_from([10, 30, 100, 300])
betas = st.floats(-1.0, 1.0)


def model(alpha, snr):
    return HypothesisModel.from_snr(alpha, snr)


def pe_curve(kind, m, L, n=200):
    return np.array([D.theoretical_pe_1d(D.summarize(kind(p), m, L)) for p in D.p_grid(m.alpha, n)])


# ---------------------------------------------------------------- p-shape claims
# Checked where the approximation is meaningful: alpha < 1, L >= 10, Pe >= 1e-6.
# Outside that regime (L <= 3, alpha near or above 1, Pe deep in the tail) both shapes can break.

@SETTINGS
@given(alphas, snrs, Ls)
def test_flom_pe_nondecreasing_in_p(alpha, snr, L):
    f = pe_curve(StatKind.flom, model(alpha, snr), L)
    assume(f.min() >= 1e-6)
    assert np.all(np.diff(f) >= -1e-12 * f[:-1])


@SETTINGS
@given(alphas, snrs, Ls)
def test_signed_pe_unimodal_in_p(alpha, snr, L):
    s = pe_curve(StatKind.signed, model(alpha, snr), L)
    assume(s.min() >= 1e-6)
    d = np.sign(np.diff(s))
    d = d[d != 0]
    changes = np.count_nonzero(np.diff(d))
    assert changes == 0 or (changes == 1 and d[0] < 0)


# ---------------------------------------------------------------- thresholds

summaries = st.builds(D.MomentSummary, st.floats(-5, 5), st.floats(-5, 5),
                      st.floats(0.05, 5), st.floats(0.05, 5))


@SETTINGS
@given(summaries, st.lists(st.floats(-20, 20), min_size=1, max_size=30))
def test_1d_thresholds_match_statistic(s, zs):
    assume(abs(s.var_H0 - s.var_H1) > 1e-6 or abs(s.mu_H0 - s.mu_H1) > 1e-6)
    t = D.thresholds_1d(s)
    for r in (t.t1, t.t2):
        if math.isfinite(r):
            stat, scale = D.lrt_1d_statistic(r, s)
            assert abs(stat) <= 1e-9 * max(1.0, float(scale))
    z = np.array(zs)
    stat, scale = D.lrt_1d_statistic(z, s)
    clear = np.abs(stat) > 1e-8 * np.maximum(scale, 1.0)
    assert np.array_equal(t.h1(z)[clear], (stat > 0)[clear])


@SETTINGS
@given(alphas, st.floats(-10.0, 10.0), st.sampled_from([10, 100]), st.floats(0.05, 0.45),
       st.floats(0.05, 0.9), st.floats(-3.0, 3.0))
def test_2d_thresholds_match_statistic(alpha, snr, L, f1, f2, u):
    p1 = f1 * alpha / 2
    p2 = f2 * (alpha / 2 - p1)
    s = D.summarize_mixed(model(alpha, snr), p1, p2, L)
    m0, _, c0, _ = s.arrays()
    z1 = m0[0] + u * math.sqrt(c0[0, 0])
    t = D.thresholds_2d(s, z1)
    grid = m0[1] + np.linspace(-6, 6, 61) * math.sqrt(c0[1, 1])
    stat, scale = D.lrt_2d_statistic(np.full_like(grid, z1), grid, s)
    clear = np.abs(stat) > 1e-8 * np.maximum(scale, 1.0)
    if t is None:
        assert np.all(np.sign(stat[clear]) == np.sign(stat[clear][0]))
        return
    for r in (t.t1, t.t2):
        if math.isfinite(r):
            val, sc = D.lrt_2d_statistic(z1, r, s)
            assert abs(float(val)) <= 1e-8 * max(1.0, float(sc))
    assert np.array_equal(t.h1(grid)[clear], (stat > 0)[clear])


# ---------------------------------------------------------------- equivariance

@SETTINGS
@given(alphas, st.floats(-8.0, 8.0), st.floats(0.05, 0.45), st.floats(-3.0, 3.0),
       st.integers(0, 2 ** 32 - 1))
def test_verdicts_scale_equivariant(alpha, snr, f, logc, seed):
    c = 10.0 ** logc
    m = model(alpha, snr)
    mc = dataclasses.replace(m, sigma_H0=c * m.sigma_H0, sigma_H1=c * m.sigma_H1)
    y = sample(m.h1 if seed % 2 else m.h0, np.random.default_rng(seed), 10)
    p = f * alpha
    for kind in (StatKind.flom(p), StatKind.signed(p), StatKind.log()):
        a = D.lrt_1d(y, kind, D.summarize(kind, m, 10))
        b = D.lrt_1d(c * y, kind, D.summarize(kind, mc, 10))
        s, sc = D.lrt_1d_statistic(math.fsum(kind.apply(y)) / y.size, D.summarize(kind, m, 10))
        if abs(float(s)) > 1e-8 * float(sc):
            assert a.verdict == b.verdict, kind


# ---------------------------------------------------------------- field

@SETTINGS
@given(st.floats(0.01, 0.99), st.floats(0.1, 5.0), st.floats(0.1, 5.0), st.floats(2.1, 9.0))
def test_thinning_shifts_snr_exactly(p, lam_d, lam_w, delta):
    base = NetworkConfig(lam_d, lam_w, delta)
    thin = apply_local_error(dataclasses.replace(base, p_local_error=p))
    shift = snr_m(hypothesis_model(thin)) - snr_m(hypothesis_model(base))
    assert math.isclose(shift, 10 * math.log10(p), abs_tol=1e-9)


# ---------------------------------------------------------------- stable core

@SETTINGS
@given(st.floats(0.2, 1.95), st.floats(0.1, 10.0), betas, st.floats(-50.0, 50.0))
def test_char_fn_conjugate_symmetry(alpha, sigma, beta, t):
    assume(abs(alpha - 1.0) > 1e-3)
    law = StableParams(alpha, sigma, beta)
    assert char_fn(law, -t) == np.conj(char_fn(law, t))
    assert abs(char_fn(law, t)) <= 1.0


@SETTINGS
@given(st.floats(0.2, 1.95), st.lists(st.tuples(st.floats(0.1, 10.0), betas), min_size=1,
                                      max_size=6))
def test_combine_properties(alpha, terms):
    assume(abs(alpha - 1.0) > 1e-3)
    laws = [StableParams(alpha, s, b) for s, b in terms]
    c = combine(laws)
    assert -1.0 <= c.beta <= 1.0
    assert math.isclose(c.scale_power, math.fsum(l.scale_power for l in laws), rel_tol=1e-12)
    r = combine(laws[::-1])
    assert math.isclose(r.sigma, c.sigma, rel_tol=1e-12)
    assert math.isclose(r.beta, c.beta, rel_tol=1e-12, abs_tol=1e-15)
    # sum of stable CFs multiplies
    t = 0.7
    prod = np.prod([char_fn(l, t) for l in laws])
    assert abs(char_fn(c, t) - prod) <= 1e-10


@settings(deadline=None, max_examples=5)
@given(st.integers(0, 2 ** 63 - 1))
def test_sweep_deterministic_by_seed(seed):
    cfg = ExperimentConfig(alpha=0.5, L=(10,), snr_grid=(1.0,), n_trials=600, seed=seed,
                           chunk_size=200, detectors=("LOG", "MIXED"))
    a = run_ber_sweep(cfg)
    b = run_ber_sweep(cfg)
    assert [r.values() for r in a.rows] == [r.values() for r in b.rows]
