import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from netprobe.learners import (LearnerModel, append_sample, htr_fit, init_theta, k_from_policy,
                               nol_update, pinv, predict, pseudo_solve)


def gauss_solve(A, b):
    """Plain Gaussian elimination with partial pivoting on Python lists."""
    n = len(A)
    M = [list(map(float, row)) + [float(v)] for row, v in zip(A, b)]
    for col in range(n):
        piv = max(range(col, n), key=lambda r: abs(M[r][col]))
        M[col], M[piv] = M[piv], M[col]
        for r in range(col + 1, n):
            f = M[r][col] / M[col][col]
            for c in range(col, n + 1):
                M[r][c] -= f * M[col][c]
    x = [0.0] * n
    for r in range(n - 1, -1, -1):
        x[r] = (M[r][n] - sum(M[r][c] * x[c] for c in range(r + 1, n))) / M[r][r]
    return np.array(x)


def ridge_oracle(X, Y, lam):
    d = X.shape[1]
    A = [[sum(X[i, a] * X[i, b] for i in range(len(X))) + (lam if a == b else 0.0)
          for b in range(d)] for a in range(d)]
    rhs = [sum(X[i, a] * Y[i] for i in range(len(X))) for a in range(d)]
    return gauss_solve(A, rhs)


# --- prediction and gradient updates -------------------------------------------

def test_predict_identities():
    rng = np.random.default_rng(0)
    assert predict(LearnerModel(np.zeros(5)), rng.random(5)) == 0.0
    assert predict(LearnerModel(np.eye(5)[0]), [0.7, 0.1, 0.2, 0.3, 0.4]) == 0.7
    theta, phi = rng.random(5), rng.random(5)
    assert predict(LearnerModel(theta), phi) == pytest.approx(sum(a * b for a, b in zip(theta, phi)))
    with pytest.raises(ValueError):
        predict(LearnerModel(theta), np.ones(4))


def test_nol_update_arithmetic():
    m = LearnerModel(np.zeros(5), alpha=0.1)
    nol_update(m, [1, 0, 0, 0, 0], 1.0)
    np.testing.assert_allclose(m.theta, [0.2, 0, 0, 0, 0])

    theta = np.array([0.5, -1.0, 2.0, 0.0, 0.3])
    phi = np.array([0.1, 0.2, 0.3, 0.4, 0.5])
    m = LearnerModel(theta)
    nol_update(m, phi, float(theta @ phi))
    np.testing.assert_allclose(m.theta, theta)


def test_nol_update_rejects_non_finite():
    m = LearnerModel(np.zeros(5))
    with pytest.raises(ValueError):
        nol_update(m, [np.nan, 0, 0, 0, 0], 1.0)
    with pytest.raises(ValueError):
        nol_update(m, np.zeros(5), math.inf)


def test_nol_converges_on_noise_free_data():
    rng = np.random.default_rng(3)
    true = rng.random(5)
    X = rng.random((500, 5))
    Y = X @ true
    m = LearnerModel(np.zeros(5), alpha=0.05)
    loss0 = np.mean((X @ m.theta - Y) ** 2)
    for x, y in zip(X, Y):
        nol_update(m, x, y)
    assert np.mean((X @ m.theta - Y) ** 2) < loss0


def test_init_theta_modes():
    rng = np.random.default_rng(0)
    t = init_theta(rng, "random")
    assert t.shape == (5,) and np.all((t >= 0) & (t < 1))
    assert np.array_equal(init_theta(rng, "zero"), np.zeros(5))
    assert np.array_equal(init_theta(rng, "degree"), np.eye(5)[0])
    with pytest.raises(ValueError):
        init_theta(rng, "other")


# --- linear algebra -------------------------------------------------------------

def test_pseudo_solve_identity_design():
    y = np.array([3.0, -1.0, 2.5, 0.0, 7.0])
    np.testing.assert_allclose(pseudo_solve(np.eye(5), y), y)


def test_pseudo_solve_matches_gaussian_elimination_ridge():
    rng = np.random.default_rng(11)
    for _ in range(20):
        X = rng.standard_normal((20, 5))
        Y = rng.standard_normal(20)
        np.testing.assert_allclose(pseudo_solve(X, Y, 0.1), ridge_oracle(X, Y, 0.1), atol=1e-8)


def test_pseudo_solve_rank_one_penrose():
    rng = np.random.default_rng(5)
    X = np.outer(rng.standard_normal(8), rng.standard_normal(5))
    assert np.max(np.abs(X @ pinv(X) @ X - X)) <= 1e-8
    # minimum-norm least squares on a rank-one design lies in the row space
    w = pseudo_solve(X, rng.standard_normal(8))
    row = X[0] / np.linalg.norm(X[0])
    np.testing.assert_allclose(w, (w @ row) * row, atol=1e-10)


def test_pseudo_solve_errors():
    with pytest.raises(ValueError):
        pseudo_solve(np.zeros((0, 5)), np.zeros(0))
    with pytest.raises(ValueError):
        pseudo_solve(np.full((2, 2), np.nan), np.zeros(2))


@settings(max_examples=100, deadline=None)
@given(X=arrays(np.float64, st.tuples(st.integers(1, 8), st.integers(1, 8)),
                elements=st.integers(-4, 4).map(float)))
def test_pinv_penrose_conditions(X):
    """All four Penrose identities; small integer entries make rank deficiency common."""
    P = pinv(X)
    tol = 1e-8 * max(1.0, np.linalg.norm(X, 2) * np.linalg.norm(P, 2)) ** 2
    assert np.allclose(X @ P @ X, X, atol=tol)
    assert np.allclose(P @ X @ P, P, atol=tol)
    assert np.allclose((X @ P).T, X @ P, atol=tol)
    assert np.allclose((P @ X).T, P @ X, atol=tol)


# --- subsample count and buffer ---------------------------------------------------

@pytest.mark.parametrize("rule,n,expected", [
    ("ln", 1, 1), ("ln", 1000, 7), ("log2", 1000, 10), ("log10", 1000, 3),
    (128, 50, 50), (3, 50, 3), (0, 10, 1),
])
def test_k_from_policy(rule, n, expected):
    assert k_from_policy(rule, n) == expected


def test_k_from_policy_unknown_rule():
    with pytest.raises(ValueError):
        k_from_policy("sqrt", 10)


def test_buffer_keeps_history_then_evicts_oldest():
    m = LearnerModel(np.zeros(5), buffer_cap=2000)
    append_sample(m, np.full(5, 0.0), 0.0)
    assert m.n_samples == 1
    rows = [np.full(5, float(i)) for i in range(1, 2001)]
    for i, x in enumerate(rows, start=1):
        append_sample(m, x, float(i))
    X, Y = m.arrays()
    assert m.n_samples == 2000 and len(X) == 2000
    assert Y[0] == 1.0 and Y[-1] == 2000.0


def test_buffer_equals_history_before_cap():
    rng = np.random.default_rng(2)
    m = LearnerModel(np.zeros(5))
    hist = [(rng.random(5), float(rng.integers(10))) for _ in range(30)]
    for x, r in hist:
        append_sample(m, x, r)
    X, Y = m.arrays()
    np.testing.assert_array_equal(X, np.array([h[0] for h in hist]))
    np.testing.assert_array_equal(Y, [h[1] for h in hist])


# --- median-of-means regression -------------------------------------------------

def test_htr_k1_is_pseudo_solve():
    rng = np.random.default_rng(4)
    X, Y = rng.standard_normal((30, 5)), rng.standard_normal(30)
    np.testing.assert_array_equal(htr_fit(X, Y, 1, 0.0), pseudo_solve(X, Y, 0.0))


def test_htr_selection_matches_explicit_covariance_oracle():
    rng = np.random.default_rng(9)
    X = rng.standard_normal((60, 5))
    Y = X @ rng.standard_normal(5) + rng.standard_cauchy(60)
    lam = 0.05
    w, info = htr_fit(X, Y, 6, lam, np.random.default_rng(1), return_details=True)
    omegas, groups = info["omegas"], info["groups"]
    k = len(groups)
    assert sorted(np.concatenate(groups).tolist()) == list(range(60))
    dist = np.zeros((k, k))
    for i in range(k):
        for j in range(k):
            S = X[groups[j]].T @ X[groups[j]] / len(groups[j]) + lam * np.eye(5)
            delta = omegas[i] - omegas[j]
            dist[i, j] = delta @ S @ delta
    medians = [np.median([dist[i, j] for j in range(k) if j != i]) for i in range(k)]
    np.testing.assert_allclose(info["medians"], medians, rtol=1e-9, atol=1e-12)
    np.testing.assert_array_equal(w, omegas[int(np.argmin(medians))])


def test_htr_argument_errors():
    X, Y = np.ones((4, 5)), np.ones(4)
    with pytest.raises(ValueError):
        htr_fit(X, Y, 5)
    with pytest.raises(ValueError):
        htr_fit(np.zeros((0, 5)), np.zeros(0), 1)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(60, 400), k=st.integers(1, 6))
def test_htr_recovers_planted_parameters(seed, n, k):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, 5))
    theta = rng.uniform(-3, 3, 5)
    w = htr_fit(X, X @ theta, k, 0.0, rng)
    assert np.max(np.abs(w - theta)) <= 1e-6
