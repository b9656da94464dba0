"""Node-selection policies: epsilon-greedy learners, degree heuristics, KNN-UCB."""

from __future__ import annotations

import math
from itertools import chain
from dataclasses import dataclass, asdict
from typing import NamedTuple

import numpy as np

from .features import feature_matrix
from .graph import ObservedState

KINDS = ("NOL", "NOL_HTR", "HIGH_DEGREE", "HIGH_DEGREE_JUMP", "LOW_DEGREE", "RANDOM", "KNN_UCB")
LEARNED = ("NOL", "NOL_HTR")
HIGH_DEGREE_JUMP_EPSILON = 0.3


class NoCandidatesError(RuntimeError):
    pass


@dataclass
class PolicyConfig:
    kind: str = "NOL_HTR"
    epsilon0: float = 0.3
    decay: bool = True
    knn_k: int = 20
    ucb_alpha: float = 2.0

    def validate(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown policy {self.kind!r}; choose from {', '.join(KINDS)}")
        if not 0.0 <= self.epsilon0 <= 1.0:
            raise ValueError(f"epsilon0={self.epsilon0} outside [0, 1]")
        if self.knn_k < 1:
            raise ValueError("knn_k must be >= 1")

    @property
    def learned(self) -> bool:
        return self.kind in LEARNED

    def to_dict(self) -> dict:
        return asdict(self)


class Choice(NamedTuple):
    node: int
    explored: bool
    epsilon: float
    phi: np.ndarray | None      # learner features of the chosen node
    x: np.ndarray | None        # KNN-UCB features of the chosen node


def epsilon_at(epsilon0: float, decay: bool, t: int, b: int) -> float:
    """Jump rate at step ``t`` of a budget ``b``: constant or ``eps0 * exp(-t/b)``."""
    if not decay:
        return epsilon0
    return epsilon0 * math.exp(-t / b)


def policy_epsilon(cfg: PolicyConfig, t: int, b: int) -> float:
    """Effective jump rate; heuristics run at fixed rates."""
    if cfg.kind in LEARNED:
        return epsilon_at(cfg.epsilon0, cfg.decay, t, b)
    if cfg.kind == "HIGH_DEGREE_JUMP":
        return HIGH_DEGREE_JUMP_EPSILON
    if cfg.kind == "RANDOM":
        return 1.0
    return 0.0


def explore_pick(state: ObservedState, rng: np.random.Generator, initial_first: bool = True) -> int:
    """Uniform pick from unprobed initial nodes, or from all unprobed nodes once those run out."""
    pool = state.candidates()
    if len(pool) == 0:
        raise NoCandidatesError("no unprobed observed nodes")
    if initial_first:
        init = pool[state.initial[pool]]
        if len(init):
            pool = init
    return int(pool[rng.integers(len(pool))])


def argmax_random_tie(scores: np.ndarray, rng: np.random.Generator) -> int:
    best = np.flatnonzero(scores == scores.max())
    if len(best) == 1:
        return int(best[0])
    return int(best[rng.integers(len(best))])


# --- KNN-UCB -----------------------------------------------------------------

class KnnHistory:
    """Features and rewards of already probed nodes."""

    def __init__(self, dim: int = 4):
        self.X = np.zeros((0, dim))
        self.Y = np.zeros(0)

    def __len__(self) -> int:
        return len(self.Y)

    def add(self, x, r: float) -> None:
        self.X = np.vstack([self.X, np.asarray(x, dtype=float)[None, :]])
        self.Y = np.append(self.Y, float(r))


def knn_features(state: ObservedState, nodes) -> np.ndarray:
    """Degree, mean and median neighbour degree, fraction of probed neighbours."""
    nodes = np.asarray(nodes, dtype=np.int64)
    out = np.zeros((len(nodes), 4))
    if len(nodes) == 0:
        return out
    deg = state.degree[nodes]
    total = int(deg.sum())
    out[:, 0] = deg
    if total == 0:
        return out
    flat = np.fromiter(chain.from_iterable(state.adj[u] for u in nodes.tolist()),
                       dtype=np.int64, count=total)
    row = np.repeat(np.arange(len(nodes)), deg)
    nd = state.degree[flat].astype(float)
    has = deg > 0
    out[:, 1] = np.bincount(row, weights=nd, minlength=len(nodes)) / np.maximum(deg, 1)
    # sort neighbour degrees within each row, then average the middle pair
    nd_sorted = nd[np.lexsort((nd, row))]
    start = np.concatenate([[0], np.cumsum(deg)[:-1]])
    lo = start + (deg - 1) // 2
    hi = start + deg // 2
    out[has, 2] = 0.5 * (nd_sorted[lo[has]] + nd_sorted[hi[has]])
    out[has, 3] = state.probed_neighbors[nodes[has]] / deg[has]
    return out


def knn_ucb_scores(X: np.ndarray, history: KnnHistory, k: int = 20, alpha: float = 2.0) -> np.ndarray:
    """``f_hat + alpha * sigma`` for each row of ``X``.

    ``f_hat`` is the inverse-distance weighted mean reward of the ``k`` nearest
    probed points, ``sigma`` their mean distance. Empty history scores +inf.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if len(history) == 0:
        return np.full(len(X), np.inf)
    H, R = history.X, history.Y
    d2 = (np.sum(X * X, axis=1)[:, None] + np.sum(H * H, axis=1)[None, :] - 2.0 * X @ H.T)
    dist = np.sqrt(np.maximum(d2, 0.0))
    kk = min(k, len(history))
    if kk < len(history):
        idx = np.argpartition(dist, kk - 1, axis=1)[:, :kk]
    else:
        idx = np.broadcast_to(np.arange(kk), (len(X), kk))
    nd = np.take_along_axis(dist, idx, axis=1)
    w = 1.0 / (nd + 1e-12)
    f_hat = np.sum(w * R[idx], axis=1) / np.sum(w, axis=1)
    sigma = nd.mean(axis=1)
    return f_hat + alpha * sigma


def knn_ucb_score(state: ObservedState, u: int, history: KnnHistory, k: int = 20, alpha: float = 2.0) -> float:
    return float(knn_ucb_scores(knn_features(state, [u]), history, k, alpha)[0])


# --- selection ----------------------------------------------------------------

def score_candidates(cfg: PolicyConfig, state: ObservedState, model, cands: np.ndarray):
    """Scores for ``cands`` plus any per-candidate feature matrices computed on the way."""
    phi = x = None
    kind = cfg.kind
    if kind in LEARNED:
        phi = feature_matrix(state, cands)
        if kind == "NOL_HTR" and model.n_samples < model.dim:
            scores = state.degree[cands].astype(float)
        else:
            scores = phi @ model.theta
    elif kind == "LOW_DEGREE":
        scores = -state.degree[cands].astype(float)
    elif kind == "KNN_UCB":
        x = knn_features(state, cands)
        scores = knn_ucb_scores(x, model, cfg.knn_k, cfg.ucb_alpha)
    else:
        scores = state.degree[cands].astype(float)
    return scores, phi, x


def select_next(cfg: PolicyConfig, state: ObservedState, model, t: int, b: int,
                rng: np.random.Generator, tie_rng: np.random.Generator | None = None) -> Choice:
    """Pick the next node to probe.

    With probability epsilon the pick is uniform (learned policies draw from
    the initial sample first); otherwise it is the score argmax with ties broken
    uniformly by ``tie_rng``.
    """
    cands = state.candidates()
    if len(cands) == 0:
        raise NoCandidatesError("no unprobed observed nodes")
    tie_rng = tie_rng if tie_rng is not None else rng
    eps = policy_epsilon(cfg, t, b)
    explored = bool(rng.random() < eps)

    if explored and cfg.kind not in LEARNED and cfg.kind != "KNN_UCB":
        node = explore_pick(state, rng, initial_first=False)
        return Choice(node, True, eps, None, None)

    scores, phi, x = score_candidates(cfg, state, model, cands)
    if explored:
        node = explore_pick(state, rng, initial_first=cfg.kind in LEARNED)
        pos = int(np.searchsorted(cands, node))
    else:
        pos = argmax_random_tie(scores, tie_rng)
        node = int(cands[pos])
    return Choice(node, explored, eps,
                  None if phi is None else phi[pos].copy(),
                  None if x is None else x[pos].copy())
