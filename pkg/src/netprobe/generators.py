"""Synthetic oracle graphs.

All generators are pure functions of their parameters and ``seed``.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field, asdict
from typing import Optional

import numpy as np
from scipy import sparse

from .graph import OracleGraph, load_edge_list

MODELS = ("ER", "BA", "BTER", "KREGULAR", "FILE")


class GeneratorError(ValueError):
    pass


@dataclass
class GeneratorConfig:
    model: str = "BA"
    N: int = 10000
    p: float = 0.001
    m: int = 5
    m0: int = 5
    k_reg: int = 6
    bter_avg_degree: float = 10.0
    bter_max_cc: float = 0.95
    bter_global_cc: float = 0.15
    bter_degree_max: int = 0
    seed: int = 0
    path: Optional[str] = None
    # recorded for ingested LFR graphs only
    meta: dict = field(default_factory=dict)

    def validate(self) -> None:
        model = self.model.upper()
        if model not in MODELS:
            raise GeneratorError(f"unknown model {self.model!r}")
        if model == "FILE":
            if not self.path:
                raise GeneratorError("FILE model needs a path")
            return
        if self.N < 1:
            raise GeneratorError("N must be >= 1")
        if model == "ER" and not 0.0 <= self.p <= 1.0:
            raise GeneratorError(f"p={self.p} outside [0, 1]")
        if model == "BA" and not 1 <= self.m <= self.m0 <= self.N:
            raise GeneratorError(f"need 1 <= m <= m0 <= N, got m={self.m} m0={self.m0} N={self.N}")
        if model == "KREGULAR":
            if self.k_reg >= self.N or self.k_reg < 0:
                raise GeneratorError(f"k_reg={self.k_reg} must be in [0, N)")
            if (self.N * self.k_reg) % 2:
                raise GeneratorError("N * k_reg must be even")

    def to_dict(self) -> dict:
        return asdict(self)


def build_oracle(cfg: GeneratorConfig) -> OracleGraph:
    cfg.validate()
    model = cfg.model.upper()
    if model == "ER":
        return gen_er(cfg.N, cfg.p, cfg.seed)
    if model == "BA":
        return gen_ba(cfg.N, cfg.m, cfg.m0, cfg.seed)
    if model == "KREGULAR":
        return gen_kregular(cfg.N, cfg.k_reg, cfg.seed)
    if model == "BTER":
        return gen_bter(cfg.N, cfg.bter_avg_degree, cfg.bter_max_cc, cfg.bter_global_cc, cfg.seed,
                        degree_max=cfg.bter_degree_max or None)
    return load_edge_list(cfg.path)


def gen_er(N: int, p: float, seed: int) -> OracleGraph:
    """G(N, p): each unordered pair is an edge independently with probability p."""
    if not 0.0 <= p <= 1.0:
        raise GeneratorError(f"p={p} outside [0, 1]")
    rng = np.random.default_rng(seed)
    chunks = []
    for i in range(N - 1):
        js = np.flatnonzero(rng.random(N - i - 1) < p) + i + 1
        if len(js):
            chunks.append(np.column_stack([np.full(len(js), i), js]))
    edges = np.concatenate(chunks) if chunks else np.zeros((0, 2), np.int64)
    return OracleGraph(N, edges)


def gen_ba(N: int, m: int, m0: int, seed: int) -> OracleGraph:
    """Preferential attachment grown from a complete graph on ``m0`` nodes."""
    if not 1 <= m <= m0 <= N:
        raise GeneratorError(f"need 1 <= m <= m0 <= N, got m={m} m0={m0} N={N}")
    rng = np.random.default_rng(seed)
    edges = [(i, j) for i in range(m0) for j in range(i + 1, m0)]
    # every edge endpoint appears once per incident edge: uniform draws are degree-proportional
    ends = [x for e in edges for x in e]
    for new in range(m0, N):
        targets: set[int] = set()
        while len(targets) < m:
            if ends:
                targets.add(ends[int(rng.integers(len(ends)))])
            else:
                targets.add(int(rng.integers(new)))
        for t in sorted(targets):
            edges.append((t, new))
            ends.extend((t, new))
    return OracleGraph(N, np.array(edges, dtype=np.int64).reshape(-1, 2))


def gen_kregular(N: int, k_reg: int, seed: int, max_tries: int = 100) -> OracleGraph:
    """Uniform-ish random simple k-regular graph by stub pairing with repair.

    Conflicting stubs (self-loops, repeated pairs) are re-paired among
    themselves; an attempt is abandoned when no valid pairing is left.
    """
    if k_reg >= N or k_reg < 0:
        raise GeneratorError(f"k_reg={k_reg} must be in [0, N)")
    if (N * k_reg) % 2:
        raise GeneratorError("N * k_reg must be even")
    if k_reg == 0:
        return OracleGraph(N, np.zeros((0, 2), np.int64))
    rng = np.random.default_rng(seed)

    def suitable(edges, potential):
        if not potential:
            return True
        nodes = list(potential)
        for i, a in enumerate(nodes):
            for b in nodes[i + 1:]:
                if (min(a, b), max(a, b)) not in edges:
                    return True
        return False

    def attempt():
        edges: set[tuple[int, int]] = set()
        stubs = np.repeat(np.arange(N), k_reg)
        while len(stubs):
            potential: dict[int, int] = defaultdict(int)
            rng.shuffle(stubs)
            for a, b in zip(stubs[0::2].tolist(), stubs[1::2].tolist()):
                if a > b:
                    a, b = b, a
                if a != b and (a, b) not in edges:
                    edges.add((a, b))
                else:
                    potential[a] += 1
                    potential[b] += 1
            if not suitable(edges, potential):
                return None
            stubs = np.array([u for u, c in potential.items() for _ in range(c)], dtype=np.int64)
        return edges

    for _ in range(max_tries):
        edges = attempt()
        if edges is not None:
            return OracleGraph(N, np.array(sorted(edges), dtype=np.int64))
    raise GeneratorError(f"no simple {k_reg}-regular pairing found in {max_tries} tries")


# --- BTER -------------------------------------------------------------------

def _power_law_exponent(avg_degree, d_min, d_max):
    """Exponent of a discrete power law on [d_min, d_max] with the given mean."""
    support = np.arange(d_min, d_max + 1, dtype=float)
    lo, hi = -4.0, 12.0
    for _ in range(100):
        g = (lo + hi) / 2
        w = support ** -g
        if (support * w).sum() / w.sum() > avg_degree:
            lo = g
        else:
            hi = g
    return (lo + hi) / 2


def _blocks(degrees, community_sizes=None):
    """Consecutive blocks over ascending degrees: a block opened at degree d holds d + 1 nodes."""
    n = len(degrees)
    if community_sizes is not None:
        sizes = [int(s) for s in community_sizes]
        if sum(sizes) != n or min(sizes) < 1:
            raise GeneratorError("community sizes must be positive and sum to N")
        return sizes
    sizes, i = [], 0
    while i < n:
        s = min(int(degrees[i]) + 1, n - i)
        sizes.append(s)
        i += s
    return sizes


def _block_density(block_degree, max_cc, xi):
    return (max_cc * math.exp(-(block_degree - 1) * xi)) ** (1.0 / 3.0)


def _bter_plan(degrees, sizes, max_cc, xi):
    """Per-block densities and per-node excess degree for decay rate ``xi``."""
    starts = np.concatenate([[0], np.cumsum(sizes)[:-1]]).astype(int)
    rho = np.array([_block_density(degrees[a], max_cc, xi) for a in starts])
    node_rho = np.repeat(rho, sizes)
    node_s = np.repeat(np.asarray(sizes, dtype=float), sizes)
    excess = np.maximum(degrees - node_rho * (node_s - 1), 0.0)
    return rho, excess


def _bter_edges(sizes, rho, excess, rng, max_rounds=50):
    N = int(sum(sizes))
    parts = []
    start = 0
    for s, r in zip(sizes, rho):
        if s > 1:
            iu, ju = np.triu_indices(s, k=1)
            keep = rng.random(len(iu)) < r
            parts.append(np.column_stack([iu[keep], ju[keep]]) + start)
        start += s

    block = np.repeat(np.arange(len(sizes)), sizes)
    wanted = int(round(excess.sum() / 2))
    cross = np.zeros((0, 2), np.int64)
    if len(sizes) > 1 and wanted > 0:
        p = excess / excess.sum()
        for _ in range(max_rounds):
            need = wanted - len(cross)
            if need <= 0:
                break
            a = rng.choice(N, size=need, p=p)
            b = rng.choice(N, size=need, p=p)
            pairs = np.sort(np.column_stack([a, b])[block[a] != block[b]], axis=1)
            merged = np.concatenate([cross, pairs])
            _, first = np.unique(merged, axis=0, return_index=True)
            cross = merged[np.sort(first)]
        cross = cross[:wanted]
    parts.append(cross)
    return np.concatenate(parts)


def gen_bter(N: int, avg_degree: float, max_cc: float, global_cc: float, seed: int,
             degree_max: int | None = None, community_sizes=None) -> OracleGraph:
    """Block two-level ER graph.

    Target degrees follow a discrete power law on ``[2, degree_max]`` whose
    exponent is solved to give mean ``avg_degree``; ``degree_max`` defaults to
    the structural cutoff ``ceil(sqrt(N * avg_degree))``. Phase one sorts
    nodes by degree and cuts them into blocks of ``d + 1`` nodes, each an ER
    graph of density ``(max_cc * exp(-(d - 1) * xi)) ** (1/3)``. Phase two
    wires each node's leftover degree to other blocks Chung-Lu style. The
    decay ``xi`` is bisected until the realised global clustering matches
    ``global_cc`` (every trial graph reuses one seed, so the search is
    deterministic).
    """
    if not 2 <= avg_degree < N - 1:
        raise GeneratorError(f"average degree {avg_degree} infeasible for N={N}")
    if not 0 < max_cc <= 1 or not 0 <= global_cc <= max_cc:
        raise GeneratorError("clustering targets must satisfy 0 <= global_cc <= max_cc <= 1")
    ss = np.random.SeedSequence(seed)
    deg_seed, wire_seed, perm_seed = ss.spawn(3)
    d_max = min(degree_max or int(math.ceil(math.sqrt(N * avg_degree))), N - 1)
    if d_max <= avg_degree:
        raise GeneratorError(f"maximum degree {d_max} must exceed the average {avg_degree}")
    support = np.arange(2, d_max + 1)
    probs = support.astype(float) ** -_power_law_exponent(avg_degree, 2, d_max)
    degrees = np.sort(np.random.default_rng(deg_seed).choice(
        support, size=N, p=probs / probs.sum())).astype(float)
    sizes = _blocks(degrees, community_sizes)

    def realise(xi):
        rho, excess = _bter_plan(degrees, sizes, max_cc, xi)
        return _bter_edges(sizes, rho, excess, np.random.default_rng(wire_seed))

    lo, hi = 0.0, 5.0
    if transitivity(OracleGraph(N, realise(lo))) > global_cc:
        for _ in range(30):
            mid = (lo + hi) / 2
            if transitivity(OracleGraph(N, realise(mid))) > global_cc:
                lo = mid
            else:
                hi = mid
        lo = (lo + hi) / 2
    edges = realise(lo)
    perm = np.random.default_rng(perm_seed).permutation(N)
    return OracleGraph(N, perm[edges] if len(edges) else edges)


def transitivity(graph: OracleGraph) -> float:
    """Global clustering coefficient: 3 * triangles / connected triples."""
    n = graph.node_count
    if graph.edge_count == 0:
        return 0.0
    A = sparse.csr_matrix((np.ones(len(graph.indices)), graph.indices, graph.indptr), shape=(n, n))
    closed = (A @ A).multiply(A).sum()          # 6 * triangles
    d = graph.degree.astype(float)
    triples = np.sum(d * (d - 1)) / 2
    return float(closed / 2.0 / triples) if triples else 0.0
