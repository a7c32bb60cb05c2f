import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from aggwave.errors import InvalidInputError
from aggwave.models import grid
from aggwave.signals import DEFAULT_SD, SIGNALS, dj_function, rescale_to_sd


def test_heavisine_at_half():
    x = dj_function("heavisine", 512)
    t = grid(512)
    assert t[255] == 0.5
    assert x[255] == pytest.approx(-2.0, abs=1e-12)


@pytest.mark.parametrize("M", [32, 512, 2048])
def test_bumps_nonnegative(M):
    assert (dj_function("bumps", M) >= 0).all()


@pytest.mark.parametrize("M", [64, 512, 2048])
def test_blocks_piecewise_constant(M):
    jumps = np.count_nonzero(np.abs(np.diff(dj_function("blocks", M))) > 1e-12)
    assert jumps <= 11


def test_blocks_has_all_jumps_on_fine_grid():
    jumps = np.count_nonzero(np.abs(np.diff(dj_function("blocks", 2048))) > 1e-12)
    assert jumps == 11


@pytest.mark.parametrize("name", ["blocks", "heavisine"])
def test_grid_refinement_consistency(name):
    coarse = dj_function(name, 512)
    fine = dj_function(name, 2048)
    assert np.array_equal(coarse, fine[3::4])


@pytest.mark.parametrize("name", sorted(SIGNALS))
def test_normalized_sd(name):
    x = dj_function(name, 1024, DEFAULT_SD)
    assert x.std() == pytest.approx(7.0, abs=1e-10)
    assert np.array_equal(x, dj_function(name, 1024, DEFAULT_SD))


def test_doppler_closed_form():
    t = grid(256)
    ref = np.sqrt(t * (1 - t)) * np.sin(2 * np.pi * 1.05 / (t + 0.05))
    assert np.allclose(dj_function("doppler", 256), ref, atol=1e-15)


def test_unknown_name_lists_valid():
    with pytest.raises(InvalidInputError, match="bumps"):
        dj_function("spikes", 64)


def test_bad_length():
    with pytest.raises(InvalidInputError):
        dj_function("bumps", 100)


def test_rescale_identity_when_on_target(rng):
    x = rng.standard_normal(100)
    x *= 3.0 / x.std()
    assert np.allclose(rescale_to_sd(x, 3.0), x, rtol=1e-14)


def test_rescale_doubles(rng):
    x = rng.standard_normal(100)
    assert np.allclose(rescale_to_sd(x, 2 * x.std()), 2 * x, rtol=1e-13)


def test_rescale_rejects_constant_and_bad_target():
    with pytest.raises(InvalidInputError):
        rescale_to_sd(np.ones(10), 1.0)
    with pytest.raises(InvalidInputError):
        rescale_to_sd(np.arange(10.0), 0.0)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), target=st.floats(0.01, 100))
def test_rescale_hits_target(seed, target):
    x = np.random.default_rng(seed).standard_normal(64)
    assert rescale_to_sd(x, target).std() == pytest.approx(target, rel=1e-10)
