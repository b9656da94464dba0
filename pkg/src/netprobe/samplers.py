"""Initial partial observations of an oracle graph."""

from __future__ import annotations

from dataclasses import dataclass, asdict

import numpy as np

from .graph import ObservedState, OracleGraph

METHODS = ("node_induction", "random_walk_jump")


class SamplingError(RuntimeError):
    pass


@dataclass
class SampleConfig:
    method: str = "node_induction"
    edge_fraction: float = 0.05
    jump_prob: float = 0.15
    tolerance: float = 0.02
    max_iter: int = 50
    seed: int = 0

    def validate(self) -> None:
        if self.method not in METHODS:
            raise ValueError(f"unknown sampling method {self.method!r}")
        if not 0.0 < self.edge_fraction < 1.0:
            raise ValueError(f"edge_fraction={self.edge_fraction} outside (0, 1)")
        if not 0.0 <= self.jump_prob <= 1.0:
            raise ValueError(f"jump_prob={self.jump_prob} outside [0, 1]")

    def to_dict(self) -> dict:
        return asdict(self)


def induced_edges(oracle: OracleGraph, nodes) -> np.ndarray:
    mask = np.zeros(oracle.node_count, dtype=bool)
    mask[np.asarray(nodes, dtype=np.int64)] = True
    e = oracle.edges
    return e[mask[e[:, 0]] & mask[e[:, 1]]]


def induced_state(oracle: OracleGraph, nodes) -> ObservedState:
    nodes = np.asarray(nodes, dtype=np.int64)
    return ObservedState.from_sample(oracle.node_count, nodes.tolist(),
                                     induced_edges(oracle, nodes).tolist())


def node_sample_induction(oracle: OracleGraph, cfg: SampleConfig,
                          rng: np.random.Generator | None = None) -> ObservedState:
    """Uniform node sample whose induced subgraph holds the target edge share.

    Nodes are taken in a random order; along that order the induced edge
    count only grows, so every prefix length is scanned at once and the
    prefix closest to the target is kept if it lies within tolerance. A miss
    draws a fresh order, up to ``max_iter`` times.
    """
    if oracle.edge_count < 1:
        raise SamplingError("oracle has no edges")
    rng = rng if rng is not None else np.random.default_rng(cfg.seed)
    N = oracle.node_count
    target = cfg.edge_fraction * oracle.edge_count
    slack = cfg.tolerance * target
    best = None
    for _ in range(cfg.max_iter):
        order = rng.permutation(N)
        pos = np.empty(N, dtype=np.int64)
        pos[order] = np.arange(N)
        # an edge is induced once the later of its endpoints is included
        joins = np.maximum(pos[oracle.edges[:, 0]], pos[oracle.edges[:, 1]])
        counts = np.cumsum(np.bincount(joins, minlength=N))   # counts[s-1]: edges among first s nodes
        miss = np.abs(counts - target)
        size = int(np.argmin(miss)) + 1
        if miss[size - 1] <= slack:
            return induced_state(oracle, np.sort(order[:size]))
        if best is None or miss[size - 1] < best:
            best = miss[size - 1]
    raise SamplingError(
        f"induced sample missed {target:.1f} +/- {slack:.1f} edges after {cfg.max_iter} tries "
        f"(closest miss: {best:.1f})")


def random_walk_jump(oracle: OracleGraph, cfg: SampleConfig,
                     rng: np.random.Generator | None = None,
                     max_steps: int | None = None) -> ObservedState:
    """Crawl by random walk with uniform teleports until the edge share is reached.

    Only traversed edges are recorded. A node without neighbours forces a
    teleport.
    """
    if oracle.edge_count < 1:
        raise SamplingError("oracle has no edges")
    rng = rng if rng is not None else np.random.default_rng(cfg.seed)
    N = oracle.node_count
    target = cfg.edge_fraction * oracle.edge_count
    if max_steps is None:
        max_steps = 100 * oracle.edge_count + 10_000
    cur = int(rng.integers(N))
    nodes = {cur}
    edges: set[tuple[int, int]] = set()
    for _ in range(max_steps):
        if len(edges) >= target:
            break
        nbrs = oracle.neighbors(cur)
        if rng.random() < cfg.jump_prob or len(nbrs) == 0:
            cur = int(rng.integers(N))
        else:
            nxt = int(nbrs[rng.integers(len(nbrs))])
            edges.add((min(cur, nxt), max(cur, nxt)))
            cur = nxt
        nodes.add(cur)
    else:
        if len(edges) < target:
            raise SamplingError(f"walk budget of {max_steps} steps exhausted "
                                f"with {len(edges)}/{target:.1f} edges")
    return ObservedState.from_sample(N, sorted(nodes), sorted(edges))


def sample(oracle: OracleGraph, cfg: SampleConfig, rng: np.random.Generator | None = None) -> ObservedState:
    cfg.validate()
    if cfg.method == "node_induction":
        return node_sample_induction(oracle, cfg, rng)
    return random_walk_jump(oracle, cfg, rng)
