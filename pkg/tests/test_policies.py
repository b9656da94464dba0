import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from netprobe.graph import ObservedState, OracleGraph, probe
from netprobe.learners import LearnerModel
from netprobe.policies import (KnnHistory, NoCandidatesError, PolicyConfig, argmax_random_tie,
                               epsilon_at, explore_pick, knn_features, knn_ucb_score,
                               knn_ucb_scores, policy_epsilon, select_next)


def test_epsilon_schedule():
    assert epsilon_at(0.3, False, 250, 500) == 0.3
    assert epsilon_at(0.3, True, 500, 500) == pytest.approx(0.3 / math.e)
    assert round(epsilon_at(0.3, True, 500, 500), 4) == 0.1104
    assert all(epsilon_at(0.0, True, t, 100) == 0.0 for t in range(100))


def test_heuristic_jump_rates():
    assert policy_epsilon(PolicyConfig(kind="HIGH_DEGREE_JUMP"), 10, 100) == 0.3
    assert policy_epsilon(PolicyConfig(kind="RANDOM"), 10, 100) == 1.0
    assert policy_epsilon(PolicyConfig(kind="HIGH_DEGREE"), 10, 100) == 0.0


def test_policy_config_validation():
    with pytest.raises(ValueError):
        PolicyConfig(kind="GREEDY").validate()
    with pytest.raises(ValueError):
        PolicyConfig(epsilon0=1.5).validate()


def test_explore_prefers_initial_nodes_then_falls_back():
    g = OracleGraph(4, [(0, 1), (0, 2), (0, 3)])
    s = ObservedState.from_sample(4, [0, 1], [])
    rng = np.random.default_rng(0)
    probe(g, s, 0)
    assert {explore_pick(s, rng) for _ in range(50)} == {1}
    probe(g, s, 1)
    assert {explore_pick(s, rng) for _ in range(200)} == {2, 3}
    probe(g, s, 2)
    probe(g, s, 3)
    with pytest.raises(NoCandidatesError):
        explore_pick(s, rng)


def test_explore_pick_is_uniform():
    s = ObservedState.from_sample(10, range(10), [])
    rng = np.random.default_rng(123)
    counts = np.bincount([explore_pick(s, rng) for _ in range(10_000)], minlength=10)
    assert stats.chisquare(counts).pvalue > 0.001


def test_argmax_ties_are_uniform():
    rng = np.random.default_rng(5)
    scores = np.array([1.0, 3.0, 3.0, 0.0, 3.0])
    counts = np.bincount([argmax_random_tie(scores, rng) for _ in range(6000)], minlength=5)
    assert counts[0] == counts[3] == 0
    assert stats.chisquare(counts[[1, 2, 4]]).pvalue > 0.001


def state_with_degrees():
    # a = 0 has degree 3, b = 1 has degree 5, c = 2 has degree 1; leaves 3..9 probed away
    edges = [(0, 3), (0, 4), (0, 5), (1, 3), (1, 4), (1, 5), (1, 6), (1, 7), (2, 8)]
    s = ObservedState.from_sample(10, range(10), edges)
    s.probed[3:] = True
    return s


@pytest.mark.parametrize("kind,expected", [("HIGH_DEGREE", 1), ("LOW_DEGREE", 2)])
def test_degree_heuristics(kind, expected):
    s = state_with_degrees()
    c = select_next(PolicyConfig(kind=kind), s, None, 0, 10, np.random.default_rng(0))
    assert c.node == expected and not c.explored


def test_single_candidate_always_chosen():
    s = ObservedState.from_sample(3, [0, 1, 2], [(0, 1)])
    s.probed[[0, 1]] = True
    for kind in ("NOL", "NOL_HTR", "HIGH_DEGREE", "HIGH_DEGREE_JUMP", "LOW_DEGREE", "RANDOM", "KNN_UCB"):
        model = LearnerModel(np.ones(5)) if kind.startswith("NOL") else KnnHistory() if kind == "KNN_UCB" else None
        assert select_next(PolicyConfig(kind=kind), s, model, 0, 5, np.random.default_rng(1)).node == 2


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_nol_with_degree_weights_matches_high_degree(seed):
    rng = np.random.default_rng(seed)
    n = 30
    iu, ju = np.triu_indices(n, 1)
    keep = rng.random(len(iu)) < 0.15
    s = ObservedState.from_sample(n, range(n), np.column_stack([iu[keep], ju[keep]]).tolist())
    deg = s.degree[s.candidates()]
    if (deg == deg.max()).sum() != 1:
        return
    nol = select_next(PolicyConfig(kind="NOL", epsilon0=0.0), s, LearnerModel(np.eye(5)[0]), 0, 10, rng)
    hd = select_next(PolicyConfig(kind="HIGH_DEGREE"), s, None, 0, 10, rng)
    assert nol.node == hd.node


def test_random_policy_always_explores():
    s = ObservedState.from_sample(20, range(20), [])
    rng = np.random.default_rng(0)
    picks = [select_next(PolicyConfig(kind="RANDOM"), s, None, t, 20, rng) for t in range(50)]
    assert all(p.explored for p in picks)


def test_no_candidates_error():
    s = ObservedState.from_sample(2, [0], [])
    s.probed[0] = True
    with pytest.raises(NoCandidatesError):
        select_next(PolicyConfig(), s, LearnerModel(np.zeros(5)), 0, 1, np.random.default_rng(0))


# --- KNN-UCB -----------------------------------------------------------------------

def test_knn_degenerate_neighbourhoods():
    h = KnnHistory()
    x = np.array([2.0, 3.0, 3.0, 0.5])
    for _ in range(5):
        h.add(x, 4.0)
    assert knn_ucb_scores(x[None, :], h)[0] == pytest.approx(4.0)

    one = KnnHistory()
    one.add([0.0, 0.0, 0.0, 0.0], 7.0)
    q = np.array([[3.0, 4.0, 0.0, 0.0]])
    assert knn_ucb_scores(q, one, alpha=1.0)[0] == pytest.approx(7.0 + 5.0)
    assert np.isinf(knn_ucb_scores(q, KnnHistory())[0])


def test_knn_matches_brute_force_oracle():
    rng = np.random.default_rng(17)
    h = KnnHistory()
    pts = rng.random((30, 4)) * [10, 5, 5, 1]
    rewards = rng.integers(0, 20, 30).astype(float)
    for p, r in zip(pts, rewards):
        h.add(p, r)
    queries = rng.random((15, 4)) * [10, 5, 5, 1]
    got = knn_ucb_scores(queries, h, k=7, alpha=2.0)
    for q, g in zip(queries, got):
        dists = sorted((math.dist(q, p), r) for p, r in zip(pts, rewards))[:7]
        w = [1.0 / (d + 1e-12) for d, _ in dists]
        f = sum(wi * r for wi, (_, r) in zip(w, dists)) / sum(w)
        sigma = sum(d for d, _ in dists) / 7
        assert g == pytest.approx(f + 2.0 * sigma, rel=1e-9)


def test_knn_features_and_single_score():
    s = ObservedState.from_sample(5, range(5), [(0, 1), (0, 2), (0, 3), (3, 4)])
    s.probed[3] = True
    s.probed_neighbors[0] = 1
    f = knn_features(s, [0, 4])
    np.testing.assert_allclose(f[0], [3, (1 + 1 + 2) / 3, 1.0, 1 / 3])
    np.testing.assert_allclose(f[1], [1, 2, 2, 0])
    h = KnnHistory()
    h.add(f[1], 3.0)
    assert knn_ucb_score(s, 4, h) == pytest.approx(3.0)
