import math
import warnings

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from elemsparse.matrix import (
    NonConvergenceWarning,
    PowerIterationConfig,
    as_matrix,
    frobenius_norm,
    power_iteration,
    spectral_norm,
    stable_rank,
)

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)
square = st.integers(1, 8).flatmap(lambda n: arrays(np.float64, (n, n), elements=finite))


def test_as_matrix_rejects_bad_input():
    with pytest.raises(ValueError):
        as_matrix(np.zeros((2, 3)))
    with pytest.raises(ValueError):
        as_matrix(np.zeros((0, 0)))
    with pytest.raises(ValueError):
        as_matrix([[1.0, np.nan], [0.0, 1.0]])
    with pytest.raises(ValueError):
        as_matrix([[np.inf]])


def test_as_matrix_is_read_only_copy():
    src = np.eye(2)
    m = as_matrix(src)
    src[0, 0] = 7
    assert m[0, 0] == 1
    with pytest.raises(ValueError):
        m[0, 0] = 3


@pytest.mark.parametrize("n", [1, 3, 10])
def test_frobenius_zero(n):
    assert frobenius_norm(np.zeros((n, n))) == 0


def test_frobenius_examples():
    assert frobenius_norm(np.eye(2)) == pytest.approx(math.sqrt(2), rel=1e-15)
    assert frobenius_norm([[1, 2], [3, 4]]) == pytest.approx(5.477225575051661, rel=1e-15)


@given(square)
def test_frobenius_two_summation_orders(m):
    # row-by-row in extended precision, so tiny entries do not underflow
    with mpmath.workdps(40):
        rows = [mpmath.fsum(mpmath.mpf(x) ** 2 for x in row) for row in m.tolist()]
        by_rows = float(mpmath.sqrt(mpmath.fsum(rows)))
    assert frobenius_norm(m) == pytest.approx(by_rows, rel=1e-12)


def test_spectral_examples():
    assert spectral_norm(np.eye(3)) == pytest.approx(1.0, rel=1e-12)
    assert spectral_norm(np.diag([3.0, -4.0])) == pytest.approx(4.0, rel=1e-10)
    assert spectral_norm(np.zeros((4, 4))) == 0.0


@pytest.mark.parametrize("seed", range(5))
def test_spectral_matches_svd(seed):
    m = np.random.default_rng(seed).standard_normal((20, 20))
    oracle = np.linalg.svd(m, compute_uv=False)[0]
    assert spectral_norm(m) == pytest.approx(oracle, rel=1e-6)


def test_estimate_is_lower_bound():
    m = np.random.default_rng(3).standard_normal((30, 30))
    oracle = np.linalg.svd(m, compute_uv=False)[0]
    for it in (1, 2, 5, 50):
        est = power_iteration(m, PowerIterationConfig(max_iterations=it)).value
        assert est <= oracle * (1 + 1e-14)


def test_non_convergence_is_flagged():
    m = np.random.default_rng(0).standard_normal((30, 30))
    cfg = PowerIterationConfig(max_iterations=2, tolerance=1e-15)
    res = power_iteration(m, cfg)
    assert not res.converged and res.iterations == 2
    with pytest.warns(NonConvergenceWarning):
        est = spectral_norm(m, cfg)
    assert est == res.value


def test_default_budget_scales_with_n():
    assert PowerIterationConfig().iterations_for(7) == 170
    assert PowerIterationConfig(max_iterations=3).iterations_for(7) == 3


def test_config_validation():
    with pytest.raises(ValueError):
        PowerIterationConfig(max_iterations=0)
    with pytest.raises(ValueError):
        PowerIterationConfig(tolerance=0)
    with pytest.raises(ValueError):
        PowerIterationConfig(seed=-1)


@settings(max_examples=60)
@given(square)
def test_spectral_dominated_by_frobenius(m):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NonConvergenceWarning)
        assert spectral_norm(m) <= frobenius_norm(m) + 1e-9


@pytest.mark.parametrize("c", [-3.0, 0.5, 2.0, 1e3, 7.25])
def test_spectral_scale_equivariance(c):
    m = np.random.default_rng(11).standard_normal((12, 12))
    assert spectral_norm(c * m) == pytest.approx(abs(c) * spectral_norm(m), rel=1e-9)


def test_stable_rank_examples():
    u = np.array([1.0, -2.0, 0.5])
    v = np.array([3.0, 1.0, 4.0])
    assert stable_rank(np.outer(u, v)) == pytest.approx(1.0, rel=1e-12)
    assert stable_rank(np.eye(5)) == pytest.approx(5.0, rel=1e-12)
    assert stable_rank(np.diag([2.0, 1.0, 1.0])) == pytest.approx(1.5, rel=1e-9)


def test_stable_rank_zero_matrix():
    with pytest.raises(ValueError, match="undefined"):
        stable_rank(np.zeros((3, 3)))


@settings(max_examples=60)
@given(square.filter(lambda m: np.any(m)))
def test_stable_rank_between_one_and_rank(m):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NonConvergenceWarning)
        sr = stable_rank(m)
    assert sr >= 1 - 1e-9
    assert sr <= np.linalg.matrix_rank(m) * (1 + 1e-6)


def test_block_iteration_handles_clustered_top_singular_values():
    # sigma_2 / sigma_1 ~ 0.994 here; single-vector iteration stalls within the default budget
    m = np.random.default_rng(1004).standard_normal((20, 20))
    oracle = np.linalg.svd(m, compute_uv=False)[0]
    single = power_iteration(m, PowerIterationConfig(block_size=1))
    block = power_iteration(m)
    assert not single.converged and abs(single.value - oracle) / oracle > 1e-6
    assert block.converged and block.value == pytest.approx(oracle, rel=1e-10)
