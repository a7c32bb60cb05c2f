import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, stats

from aggwave.errors import InvalidInputError
from aggwave.shrinkage import (
    PriorConfig,
    log_logistic_density,
    logistic_density,
    p_of_level,
    shrink_coefficient,
    shrink_panel_level_dependent,
    soft_threshold,
    universal_soft_threshold,
)
from aggwave.signals import dj_function
from aggwave.wavelets import TransformPlan, dwt, level_slice


def quad_rule(d, sigma, p, tau):
    """Adaptive-quadrature evaluation of the posterior-mean rule."""
    g = lambda x: logistic_density(x, tau)
    lo, hi = d - 40 * sigma, d + 40 * sigma
    opts = dict(epsabs=0, epsrel=1e-13, limit=500, points=[0.0] if lo < 0 < hi else None)
    num = integrate.quad(lambda x: x * g(x) * stats.norm.pdf(x, d, sigma), lo, hi, **opts)[0]
    den = integrate.quad(lambda x: g(x) * stats.norm.pdf(x, d, sigma), lo, hi, **opts)[0]
    spike = p * stats.norm.pdf(d, 0, sigma)
    return (1 - p) * num / (spike + (1 - p) * den)


# --- logistic slab -------------------------------------------------------

def test_logistic_mode():
    assert logistic_density(0.0, 1.0) == pytest.approx(0.25, abs=1e-15)


def test_logistic_symmetry(rng):
    x = rng.standard_normal(50) * 20
    assert np.allclose(logistic_density(-x, 3.0), logistic_density(x, 3.0), rtol=1e-14)


def test_logistic_integrates_to_one():
    val = integrate.quad(lambda x: logistic_density(x, 5.0), -200, 200, epsabs=1e-13, limit=200)[0]
    assert val == pytest.approx(1.0, abs=1e-8)


def test_log_logistic_no_overflow():
    assert np.isfinite(log_logistic_density(np.array([1e6, -1e6]), 1e-4)).all()


def test_logistic_rejects_scale():
    with pytest.raises(InvalidInputError):
        logistic_density(1.0, 0.0)


# --- level rule ------------------------------------------------------------

def test_p_of_level_values():
    assert p_of_level(3, 3, 1.7) == 0.0
    assert p_of_level(4, 3, 2.0) == 0.75
    assert p_of_level(6, 3, 2.0) == 0.9375


def test_p_of_level_monotone():
    vals = [p_of_level(j, 2, 1.5) for j in range(2, 12)]
    assert all(a <= b for a, b in zip(vals, vals[1:]))
    assert vals[-1] < 1


def test_p_of_level_rejects_coarse_level():
    with pytest.raises(InvalidInputError):
        p_of_level(2, 3, 2.0)


def test_prior_config_validation():
    with pytest.raises(InvalidInputError):
        PriorConfig(p=1.0)
    with pytest.raises(InvalidInputError):
        PriorConfig(h=0.0)
    with pytest.raises(InvalidInputError):
        PriorConfig(tau=-1.0)
    with pytest.warns(UserWarning, match="tau"):
        PriorConfig(tau=12.0)
    assert PriorConfig(p=0.3).p_at(7, 3) == 0.3
    assert PriorConfig(h=2.0).p_at(4, 3) == 0.75


# --- posterior-mean rule ----------------------------------------------------

def test_rule_zero_at_zero():
    assert shrink_coefficient(0.0, 1.0, 0.75, 5.0) == 0.0


def test_rule_matches_adaptive_quadrature():
    assert shrink_coefficient(3.0, 1.0, 0.75, 5.0) == pytest.approx(quad_rule(3.0, 1.0, 0.75, 5.0), abs=1e-6)


@pytest.mark.parametrize(
    "d, sigma, p, tau",
    [(0.5, 1.0, 0.5, 5.0), (8.0, 2.0, 0.9, 5.0), (-4.0, 0.5, 0.25, 1.0), (25.0, 1.0, 0.75, 10.0),
     (1.5, 0.1, 0.6, 3.0)],
)
def test_rule_quadrature_grid(d, sigma, p, tau):
    assert shrink_coefficient(d, sigma, p, tau) == pytest.approx(quad_rule(d, sigma, p, tau), abs=1e-8, rel=1e-8)


def test_rule_antisymmetric(rng):
    d = rng.standard_normal(200) * 6
    assert np.array_equal(shrink_coefficient(-d, 1.0, 0.75, 5.0), -shrink_coefficient(d, 1.0, 0.75, 5.0))


def test_rule_shrinks_on_grid():
    d = np.linspace(-50, 50, 1001)
    for p in np.arange(0.1, 1.0, 0.1):
        for tau in (1.0, 5.0, 10.0):
            out = shrink_coefficient(d, 1.0, p, tau)
            assert (np.abs(out) <= np.abs(d) + 1e-12).all()


def test_rule_node_doubling_stable():
    d = np.linspace(-50, 50, 401)
    for sigma, tau in ((1.0, 5.0), (0.5, 10.0), (1.0, 1.0)):
        a = shrink_coefficient(d, sigma, 0.75, tau, nodes=64)
        b = shrink_coefficient(d, sigma, 0.75, tau, nodes=128)
        assert np.max(np.abs(a - b)) < 1e-8


def test_rule_limits_in_p():
    d = np.linspace(-3, 3, 25)
    assert np.max(np.abs(shrink_coefficient(d, 1.0, 1 - 1e-12, 5.0))) < 1e-6
    mags = [abs(shrink_coefficient(2.5, 1.0, p, 5.0)) for p in (0.1, 0.5, 0.9, 0.99, 0.999999)]
    assert all(a > b for a, b in zip(mags, mags[1:]))
    slab_only = np.array([quad_rule(x, 1.0, 0.0, 5.0) for x in d[::4]])
    assert np.allclose(shrink_coefficient(d[::4], 1.0, 1e-12, 5.0), slab_only, atol=1e-8)
    assert np.array_equal(shrink_coefficient(d, 1.0, 1.0, 5.0), np.zeros_like(d))


def test_rule_rejects_bad_input():
    with pytest.raises(InvalidInputError):
        shrink_coefficient(np.nan, 1.0, 0.5, 5.0)
    with pytest.raises(InvalidInputError):
        shrink_coefficient(1.0, 0.0, 0.5, 5.0)


@settings(max_examples=100, deadline=None)
@given(d=st.floats(-50, 50), p=st.floats(0.01, 0.99), tau=st.floats(0.5, 10.0), sigma=st.floats(0.2, 3.0))
def test_rule_properties(d, p, tau, sigma):
    out = shrink_coefficient(d, sigma, p, tau)
    assert abs(out) <= abs(d) + 1e-12
    assert out * d >= 0
    assert shrink_coefficient(-d, sigma, p, tau) == -out


# --- panel rules ----------------------------------------------------------

def test_panel_zero_in_zero_out():
    plan = TransformPlan(64, 3)
    out = shrink_panel_level_dependent(np.zeros((64, 3)), plan, PriorConfig())
    assert np.array_equal(out, np.zeros((64, 3)))


def test_panel_scaling_coefficients_untouched(rng):
    plan = TransformPlan(64, 3)
    D = rng.standard_normal((64, 4))
    out = shrink_panel_level_dependent(D, plan, PriorConfig(p=0.9))
    assert np.array_equal(out[:8], D[:8])
    out = universal_soft_threshold(D, plan)
    assert np.array_equal(out[:8], D[:8])


def test_panel_noiseless_sparse_signal():
    # a few large coefficients over tiny residual detail: the MAD scale is tiny
    plan = TransformPlan(512, 3)
    rng = np.random.default_rng(1)
    D = 1e-4 * rng.standard_normal(512)
    big = rng.choice(np.arange(8, 512), size=12, replace=False)
    D[big] = rng.choice([-1, 1], size=12) * rng.uniform(5, 30, size=12)
    out = shrink_panel_level_dependent(D, plan, PriorConfig())
    assert (np.abs(out) <= np.abs(D) + 1e-15).all()
    assert np.allclose(out[big], D[big], rtol=1e-6)


def test_panel_degenerate_level_passes_through(caplog):
    plan = TransformPlan(32, 3)
    D = np.zeros(32)
    D[8:16] = [0, 0, 0, 0, 0, 5.0, 0, 0]
    D[16:] = np.linspace(-1, 1, 16)
    out = shrink_panel_level_dependent(D, plan, PriorConfig())
    assert np.array_equal(out[8:16], D[8:16])
    assert "zero MAD" in caplog.text


def test_panel_level_dependent_matches_manual(rng):
    plan = TransformPlan(128, 3)
    D = rng.standard_normal((128, 2)) * 2
    prior = PriorConfig(h=2.0, tau=5.0)
    out = shrink_panel_level_dependent(D, plan, prior)
    for n in range(2):
        for j in plan.levels:
            sl = level_slice(plan, j)
            sig = np.median(np.abs(D[sl, n])) / 0.6745
            ref = shrink_coefficient(D[sl, n], sig, p_of_level(j, 3, 2.0), 5.0)
            assert np.allclose(out[sl, n], ref, atol=1e-14)


def _doppler_gain(J0, levels=None):
    plan = TransformPlan(1024, J0)
    theta = dwt(dj_function("doppler", 1024, 7.0), plan)
    mask = np.zeros(1024, bool)
    for j in levels or plan.levels:
        mask[level_slice(plan, j)] = True
    gain = []
    for seed in range(20):
        d = theta + np.random.default_rng(seed).standard_normal(1024)
        out = shrink_panel_level_dependent(d, plan, PriorConfig())
        gain.append(np.mean((d - theta)[mask] ** 2) - np.mean((out - theta)[mask] ** 2))
    return np.mean(gain)


def test_panel_denoising_gain():
    assert _doppler_gain(J0=5) > 0


def test_panel_denoising_gain_fine_levels_default_plan():
    # At J0=3 the 8 + 16 coarsest details are signal dominated, so their MAD
    # scale is far above the noise level; the finer levels still gain.
    assert _doppler_gain(J0=3, levels=range(5, 10)) > 0


# --- universal threshold -----------------------------------------------------

def test_soft_threshold_rule():
    lam = 2.0
    assert soft_threshold(1.9, lam) == 0.0
    assert soft_threshold(-2.0, lam) == 0.0
    assert soft_threshold(lam + 1, lam) == 1.0
    assert soft_threshold(-(lam + 1), lam) == -1.0


def test_universal_threshold_kill_zone(rng):
    plan = TransformPlan(256, 3)
    D = rng.standard_normal(256)
    out = universal_soft_threshold(D, plan)
    lam_factor = math.sqrt(2 * math.log(256))
    for j in plan.levels:
        sl = level_slice(plan, j)
        lam = lam_factor * np.median(np.abs(D[sl])) / 0.6745
        assert np.allclose(out[sl], np.sign(D[sl]) * np.maximum(np.abs(D[sl]) - lam, 0), atol=1e-15)


def test_universal_threshold_removes_noise():
    plan = TransformPlan(1024, 3)
    D = np.random.default_rng(3).standard_normal((1024, 50))
    out = universal_soft_threshold(D, plan)
    frac = np.mean(out[8:] == 0)
    assert frac >= 0.95
