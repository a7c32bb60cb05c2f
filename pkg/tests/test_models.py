import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from aggwave.errors import IllConditionedWeightsError, InvalidInputError
from aggwave.models import (
    aggregate_panel,
    grid,
    project_components,
    reconstruct_components,
    validate_weights,
)
from aggwave.signals import dj_function
from aggwave.wavelets import TransformPlan, dwt


def dirichlet_weights(rng, L, N):
    return rng.dirichlet(np.ones(L), size=N).T


def test_grid_endpoints():
    t = grid(8)
    assert t[0] == 1 / 8 and t[-1] == 1.0 and t.size == 8


def test_single_component_unit_weights():
    alpha = np.arange(8.0)[:, None]
    A = aggregate_panel(alpha, np.ones((1, 5)), np.zeros((8, 5)))
    assert all(np.array_equal(A[:, n], alpha[:, 0]) for n in range(5))


def test_half_half_is_average(rng):
    alpha = rng.standard_normal((16, 2))
    A = aggregate_panel(alpha, np.array([[0.5], [0.5]]), np.zeros((16, 1)))
    assert np.allclose(A[:, 0], alpha.mean(axis=1), atol=1e-15)


def test_aggregate_matches_loop_oracle(rng):
    M, L, N = 32, 4, 50
    alpha = rng.standard_normal((M, L))
    y = dirichlet_weights(rng, L, N)
    eps = rng.standard_normal((M, N))
    A = aggregate_panel(alpha, y, eps)
    ref = np.empty((M, N))
    for m in range(M):
        for n in range(N):
            s = 0.0
            for l in range(L):
                s += y[l, n] * alpha[m, l]
            ref[m, n] = s + eps[m, n]
    assert np.max(np.abs(A - ref)) < 1e-12


def test_aggregate_shape_mismatch():
    with pytest.raises(InvalidInputError):
        aggregate_panel(np.zeros((8, 2)), np.ones((3, 4)) / 3, np.zeros((8, 4)))
    with pytest.raises(InvalidInputError):
        aggregate_panel(np.zeros((8, 2)), np.ones((2, 4)) / 2, np.zeros((8, 5)))


def test_projection_averages_for_single_component(rng):
    c = rng.standard_normal(16)
    D = np.tile(c[:, None], (1, 7))
    theta = project_components(D, np.ones((1, 7)))
    assert np.allclose(theta[:, 0], c, atol=1e-13)


def test_projection_exact_recovery(rng):
    theta = rng.standard_normal((64, 3))
    y = dirichlet_weights(rng, 3, 100)
    assert np.max(np.abs(project_components(theta @ y, y) - theta)) < 1e-8


def test_projection_singular_weights(rng):
    y = dirichlet_weights(rng, 2, 10)
    y = np.vstack([y[0], y[0], y[1]]) / np.vstack([y[0], y[0], y[1]]).sum(axis=0)
    with pytest.raises(IllConditionedWeightsError) as info:
        project_components(rng.standard_normal((8, 10)), y)
    assert info.value.condition_number > 1e12
    assert "cond(y y')" in str(info.value)


def test_projection_is_linear(rng):
    y = dirichlet_weights(rng, 3, 20)
    D1, D2 = rng.standard_normal((2, 32, 20))
    lhs = project_components(2.5 * D1 - D2, y)
    rhs = 2.5 * project_components(D1, y) - project_components(D2, y)
    assert np.allclose(lhs, rhs, atol=1e-12)


def test_projection_permutation_equivariance(rng):
    y = dirichlet_weights(rng, 4, 30)
    D = rng.standard_normal((16, 30))
    perm = [2, 0, 3, 1]
    assert np.allclose(project_components(D, y[perm]), project_components(D, y)[:, perm], atol=1e-12)


def test_reconstruct_round_trip(rng):
    plan = TransformPlan(64, 3)
    alpha = rng.standard_normal((64, 3))
    assert np.max(np.abs(reconstruct_components(dwt(alpha, plan), plan) - alpha)) < 1e-10
    assert np.array_equal(reconstruct_components(np.zeros((64, 2)), plan), np.zeros((64, 2)))


def test_reconstruct_shape_mismatch():
    with pytest.raises(InvalidInputError):
        reconstruct_components(np.zeros((32, 2)), TransformPlan(64))


def test_noiseless_pipeline_single_component_column(rng):
    plan = TransformPlan(128, 3)
    alpha = np.column_stack([dj_function(n, 128, 7.0) for n in ("bumps", "doppler")])
    y = dirichlet_weights(rng, 2, 50)
    A = aggregate_panel(alpha, y, np.zeros((128, 50)))
    est = reconstruct_components(project_components(dwt(A, plan), y), plan)
    assert np.max(np.abs(est[:, 0] - alpha[:, 0])) < 1e-8


@settings(max_examples=25, deadline=None)
@given(L=st.integers(1, 4), J=st.integers(5, 11), N=st.sampled_from([50, 100]),
       seed=st.integers(0, 2**32 - 1))
def test_noiseless_exactness_property(L, J, N, seed):
    rng = np.random.default_rng(seed)
    M = 2**J
    plan = TransformPlan(M, 3)
    alpha = rng.standard_normal((M, L)) * 7
    y = np.ones((1, N)) if L == 1 else dirichlet_weights(rng, L, N)
    A = aggregate_panel(alpha, y, np.zeros((M, N)))
    est = reconstruct_components(project_components(dwt(A, plan), y), plan)
    assert np.max(np.abs(est - alpha)) < 1e-8


def test_validate_weights_accepts_simplex(rng):
    y = dirichlet_weights(rng, 3, 10)
    assert validate_weights(y) is not None


def test_validate_weights_names_column(rng):
    y = dirichlet_weights(rng, 3, 10)
    y[:, 4] *= 0.9
    with pytest.raises(InvalidInputError, match="column 4"):
        validate_weights(y)


def test_validate_weights_open_interval(rng):
    y = dirichlet_weights(rng, 2, 6)
    y[:, 2] = [1.0, 0.0]
    with pytest.raises(InvalidInputError, match=r"row 0, column 2"):
        validate_weights(y)


def test_validate_weights_too_few_samples():
    with pytest.raises(InvalidInputError, match="N=2 < L=3"):
        validate_weights(np.full((3, 2), 1 / 3))
