from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gvcsr.pursuit import PursuitStop, omp, omp_batch

from conftest import random_dictionary


def best_support_residual(s, d, size):
    best = np.inf
    for sup in combinations(range(d.shape[1]), size):
        ds = d[:, sup]
        x, *_ = np.linalg.lstsq(ds, s, rcond=None)
        best = min(best, float(np.linalg.norm(s - ds @ x)))
    return best


def test_stop_validation():
    with pytest.raises(ValueError):
        PursuitStop()
    with pytest.raises(ValueError):
        PursuitStop(sparsity=2, error=0.1)
    with pytest.raises(ValueError):
        PursuitStop.L(0)
    with pytest.raises(ValueError):
        PursuitStop.E(0.0)
    assert str(PursuitStop.L(3)) == "omp-l:3"
    assert str(PursuitStop.E(0.5)) == "omp-e:0.5"


def test_exact_atom_recovered_in_one_step():
    d = np.eye(4)
    res = omp(3 * d[:, 2], d, PursuitStop.L(2))
    assert res.support == [2]
    np.testing.assert_allclose(res.coef, [0, 0, 3, 0])


def test_tie_goes_to_lowest_index():
    d = np.eye(3)
    res = omp([1.0, 1.0, 1.0], d, PursuitStop.L(1))
    assert res.support == [0]


def test_zero_signal_gives_zero_code():
    res = omp(np.zeros(5), random_dictionary(np.random.default_rng(0), 5, 9), PursuitStop.L(3))
    assert res.support == [] and not res.coef.any()


def test_error_stop_unreachable_flag():
    d = np.eye(3)[:, :1]
    res = omp([0.0, 1.0, 0.0], d, PursuitStop.E(1e-3))
    assert res.unreachable


def test_error_stop_reaches_target(rng):
    d = random_dictionary(rng, 8, 20)
    s = rng.standard_normal(8)
    res = omp(s, d, PursuitStop.E(1e-2))
    assert res.residual_norms[-1] ** 2 < 1e-2 and not res.unreachable


def test_no_atom_reselected_and_residual_orthogonal(rng):
    d = random_dictionary(rng, 10, 30)
    s = rng.standard_normal(10)
    res = omp(s, d, PursuitStop.L(6))
    assert len(set(res.support)) == len(res.support) == 6
    r = s - d @ res.coef
    np.testing.assert_allclose(d[:, res.support].T @ r, 0, atol=1e-10)
    assert all(b <= a + 1e-12 for a, b in zip(res.residual_norms, res.residual_norms[1:]))


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        omp(np.ones(3), np.eye(4), PursuitStop.L(1))


def test_l1_matches_exhaustive_single_atom():
    rng = np.random.default_rng(101)
    for _ in range(200):
        d = random_dictionary(rng, 6, 10)
        s = rng.standard_normal(6)
        res = omp(s, d, PursuitStop.L(1))
        got = np.linalg.norm(s - d @ res.coef)
        assert got == pytest.approx(best_support_residual(s, d, 1), abs=1e-10)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**31), st.integers(3, 8))
def test_l2_never_beats_exhaustive(seed, m):
    rng = np.random.default_rng(seed)
    d = random_dictionary(rng, 5, m)
    s = rng.standard_normal((5, 4))
    a, _ = omp_batch(s, d, PursuitStop.L(2))
    for k in range(s.shape[1]):
        got = np.linalg.norm(s[:, k] - d @ a[:, k])
        assert got >= best_support_residual(s[:, k], d, 2) - 1e-10


def test_batch_matches_single(rng):
    d = random_dictionary(rng, 8, 16)
    s = rng.standard_normal((8, 12))
    a, flags = omp_batch(s, d, PursuitStop.L(3))
    for k in range(12):
        np.testing.assert_array_equal(a[:, k], omp(s[:, k], d, PursuitStop.L(3)).coef)
    assert not flags.any()
