import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gvcsr.admm import (
    AdmmState,
    DictionaryFactors,
    SolveReport,
    SparseCodingParams,
    hard_threshold,
    objective_value,
    pinv_init,
    sparse_code,
    update_a,
    update_g,
    update_j,
    update_multipliers,
    update_penalty,
)
from gvcsr.rate_model import centering_matrix, coefficient_variance

from conftest import random_dictionary


def dense_g(w, beta, mu):
    k = w.shape[1]
    # G (beta Z + mu I) = W, solved directly
    return np.linalg.solve((beta * centering_matrix(k) + mu * np.eye(k)).T, w.T).T


def random_state(rng, m, k, mu):
    arrs = [rng.standard_normal((m, k)) for _ in range(5)]
    return AdmmState(*arrs, mu=mu)


def sweep_cases(seed=11, trials=100):
    rng = np.random.default_rng(seed)
    for _ in range(trials):
        m = int(rng.integers(1, 9))
        k = int(rng.integers(2, 17))
        yield rng, m, k, float(10 ** rng.uniform(-2, 2)), float(10 ** rng.uniform(-3, 1))


def test_params_validation():
    with pytest.raises(ValueError):
        SparseCodingParams(alpha=-1)
    with pytest.raises(ValueError):
        SparseCodingParams(rho=0.9)
    with pytest.raises(ValueError):
        SparseCodingParams(eps=0)


def test_hard_threshold_tie_goes_to_zero():
    np.testing.assert_array_equal(hard_threshold([0.5, -0.5, 0.51, -0.2], 0.5), [0, 0, 0.51, 0])


def test_update_a_example():
    st_ = AdmmState(*(np.zeros((1, 1)) for _ in range(5)), mu=1.0)
    st_.j[:] = 2.0
    st_.g[:] = 2.0
    assert update_a(st_, SparseCodingParams(alpha=1.0))[0, 0] == 2.0
    assert update_a(st_, SparseCodingParams(alpha=4.0))[0, 0] == 0.0


def test_update_g_matches_dense_solve():
    for rng, m, k, mu, beta in sweep_cases():
        state = random_state(rng, m, k, mu)
        expected = dense_g(mu * state.a + state.r1, beta, mu)
        assert np.abs(update_g(state, beta) - expected).max() <= 1e-9


def test_update_g_beta_zero_is_plain_average_step():
    rng = np.random.default_rng(3)
    state = random_state(rng, 3, 5, 2.0)
    np.testing.assert_allclose(update_g(state, 0.0), state.a + state.r1 / 2.0, atol=1e-14)


def test_update_j_matches_dense_ridge():
    for rng, m, k, mu, _ in sweep_cases(seed=12):
        n = int(rng.integers(1, 9))
        d = rng.standard_normal((n, m))
        s = rng.standard_normal((n, k))
        state = random_state(rng, m, k, mu)
        expected = np.linalg.solve(d.T @ d + mu * np.eye(m), d.T @ s + mu * state.a + state.r0)
        got = update_j(state, DictionaryFactors.from_dictionary(d), s=s)
        assert np.abs(got - expected).max() <= 1e-9


def test_update_multipliers_examples():
    z = np.zeros((1, 1))
    state = AdmmState(np.ones((1, 1)), z.copy(), np.ones((1, 1)), z.copy(), z.copy(), mu=2.0)
    r0, r1 = update_multipliers(state)
    assert r0[0, 0] == 2.0 and r1[0, 0] == 0.0
    same = AdmmState(np.ones((2, 2)), np.ones((2, 2)), np.ones((2, 2)), np.full((2, 2), 3.0),
                     np.full((2, 2), -1.0), mu=5.0)
    r0, r1 = update_multipliers(same)
    np.testing.assert_array_equal(r0, same.r0)
    np.testing.assert_array_equal(r1, same.r1)


def test_update_penalty():
    p = SparseCodingParams()
    assert update_penalty(1e-2, p) == pytest.approx(1.2e-2)
    assert update_penalty(p.mu_max, p) == p.mu_max
    assert update_penalty(3.0, SparseCodingParams(rho=1.0)) == 3.0


def test_objective_value_terms(rng):
    d = random_dictionary(rng, 6, 10)
    s = rng.standard_normal((6, 7))
    a = rng.standard_normal((10, 7)) * (rng.random((10, 7)) < 0.3)
    assert objective_value(s, d, np.zeros_like(a), 3.0, 2.0) == pytest.approx(0.5 * np.sum(s ** 2))
    assert objective_value(s, d, a, 0, 0) == pytest.approx(0.5 * np.sum((s - d @ a) ** 2))
    z = centering_matrix(7)
    expected = 0.5 * np.sum((s - d @ a) ** 2) + 0.7 * np.count_nonzero(a) + 0.5 * 0.3 * np.trace(a @ z @ a.T)
    assert objective_value(s, d, a, 0.7, 0.3) == pytest.approx(expected)


def test_pinv_init_drops_tiny_singular_values():
    d = np.array([[1.0, 1.0], [0.0, 1e-14]])
    a = pinv_init(d, np.array([[1.0], [0.0]]))
    np.testing.assert_allclose(a, [[0.5], [0.5]], atol=1e-12)


def test_zero_signal_converges_immediately(rng):
    d = random_dictionary(rng, 8, 16)
    a, rep = sparse_code(np.zeros((8, 5)), d, SparseCodingParams(alpha=0.1))
    assert rep.converged and rep.iterations == 1
    assert not a.any()


def test_identity_dictionary_example():
    a, rep = sparse_code(np.array([[1.2], [0.3]]), np.eye(2), SparseCodingParams(alpha=0.5))
    assert rep.converged
    assert a[1, 0] == 0.0
    assert a[0, 0] != 0.0


def test_nonconvergence_is_reported(rng):
    d = random_dictionary(rng, 16, 64)
    s = rng.standard_normal((16, 32))
    a, rep = sparse_code(s, d, SparseCodingParams(alpha=0.2, max_iters=3))
    assert rep.iterations == 3 and not rep.converged
    assert a.shape == (64, 32)


def test_beta_trades_variance_for_fidelity(rng):
    d = random_dictionary(rng, 16, 32)
    s = rng.standard_normal((16, 64)) + 2.0 * rng.standard_normal((16, 1))
    a0, _ = sparse_code(s, d, SparseCodingParams(alpha=0.1, beta=0.0))
    a1, _ = sparse_code(s, d, SparseCodingParams(alpha=0.1, beta=1.0))
    assert coefficient_variance(a1) <= coefficient_variance(a0)
    assert np.sum((s - d @ a1) ** 2) >= np.sum((s - d @ a0) ** 2)


def test_deterministic(rng):
    d = random_dictionary(rng, 8, 16)
    s = rng.standard_normal((8, 20))
    a1, _ = sparse_code(s, d, SparseCodingParams(alpha=0.1, beta=0.1))
    a2, _ = sparse_code(s, d, SparseCodingParams(alpha=0.1, beta=0.1))
    assert a1.tobytes() == a2.tobytes()


def test_report_text_round_trip(rng):
    d = random_dictionary(rng, 8, 16)
    _, rep = sparse_code(rng.standard_normal((8, 10)), d, SparseCodingParams(alpha=0.1), record=True)
    back = SolveReport.from_text(rep.to_text())
    assert back.iterations == rep.iterations and back.converged == rep.converged
    assert len(back.trajectory) == rep.iterations
    np.testing.assert_allclose(np.array(back.trajectory), np.array(rep.trajectory), rtol=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31), st.floats(0.01, 1.0), st.sampled_from([0.0, 0.1, 1.0]))
def test_surviving_coefficients_clear_threshold(seed, alpha, beta):
    rng = np.random.default_rng(seed)
    d = random_dictionary(rng, 6, 12)
    s = rng.standard_normal((6, 8))
    a, rep = sparse_code(s, d, SparseCodingParams(alpha=alpha, beta=beta))
    assert np.all(np.isfinite(a))
    nz = np.abs(a[a != 0])
    # the last threshold used sqrt(alpha / mu) with mu <= final_mu
    assert np.all(nz > np.sqrt(alpha / rep.final_mu))
