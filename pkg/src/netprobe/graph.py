"""Hidden oracle graph and the incrementally maintained observed graph."""

from __future__ import annotations

from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .features import update_lost_reward


class GraphFormatError(ValueError):
    """Raised for unreadable or malformed edge-list input."""


class ProbeError(ValueError):
    """Raised when a probe violates the query discipline."""


def _canonical_edges(edges: np.ndarray) -> np.ndarray:
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    edges = edges[edges[:, 0] != edges[:, 1]]
    edges = np.sort(edges, axis=1)
    if len(edges) == 0:
        return edges
    return np.unique(edges, axis=0)


class OracleGraph:
    """Undirected simple graph stored in CSR form.

    Node ids are ``0 .. node_count - 1``. ``labels[i]`` is the original label
    of node ``i`` when the graph came from a file.
    """

    def __init__(self, node_count: int, edges, labels: Sequence[str] | None = None):
        self.node_count = int(node_count)
        edges = _canonical_edges(edges)
        if len(edges) and (edges.min() < 0 or edges.max() >= self.node_count):
            raise ValueError("edge endpoint outside node range")
        self.edges = edges
        self.edge_count = len(edges)
        both = np.concatenate([edges, edges[:, ::-1]]) if len(edges) else edges
        order = np.lexsort((both[:, 1], both[:, 0])) if len(both) else np.arange(0)
        both = both[order]
        self.indices = both[:, 1].astype(np.int64) if len(both) else np.zeros(0, np.int64)
        counts = np.bincount(both[:, 0], minlength=self.node_count) if len(both) else \
            np.zeros(self.node_count, np.int64)
        self.indptr = np.zeros(self.node_count + 1, dtype=np.int64)
        np.cumsum(counts, out=self.indptr[1:])
        self.degree = counts.astype(np.int64)
        self.labels = list(labels) if labels is not None else None

    def neighbors(self, u: int) -> np.ndarray:
        """Sorted array of oracle neighbours of ``u``."""
        return self.indices[self.indptr[u]:self.indptr[u + 1]]

    def has_edge(self, u: int, v: int) -> bool:
        nbrs = self.neighbors(u)
        i = np.searchsorted(nbrs, v)
        return bool(i < len(nbrs) and nbrs[i] == v)

    def label(self, u: int) -> str:
        return self.labels[u] if self.labels is not None else str(u)

    def __repr__(self) -> str:
        return f"OracleGraph(node_count={self.node_count}, edge_count={self.edge_count})"


def load_edge_list(path) -> OracleGraph:
    """Read a whitespace-separated edge list.

    Lines starting with ``#`` and blank lines are skipped. Labels are mapped to
    contiguous ids in order of first appearance; self-loops and duplicate
    edges are dropped. A file with no data lines yields the empty graph, while
    data lines that reduce to zero usable edges are an error.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise GraphFormatError(f"cannot read edge list {path}: {exc}") from exc

    ids: dict[str, int] = {}
    pairs: list[tuple[int, int]] = []
    data_lines = 0
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        data_lines += 1
        tokens = line.split()
        if len(tokens) != 2:
            raise GraphFormatError(f"{path}:{lineno}: expected 2 labels, got {len(tokens)}")
        a, b = tokens
        if a == b:
            continue
        pairs.append((ids.setdefault(a, len(ids)), ids.setdefault(b, len(ids))))

    if data_lines and not pairs:
        raise GraphFormatError(f"{path}: no usable edges")
    labels = [None] * len(ids)
    for lab, i in ids.items():
        labels[i] = lab
    return OracleGraph(len(ids), np.array(pairs, dtype=np.int64).reshape(-1, 2), labels)


def write_edge_list(graph: OracleGraph, path, use_labels: bool = False) -> None:
    with open(path, "w") as fh:
        for u, v in graph.edges:
            if use_labels:
                fh.write(f"{graph.label(u)} {graph.label(v)}\n")
            else:
                fh.write(f"{u} {v}\n")


def write_label_map(graph: OracleGraph, path) -> None:
    """Write ``original_label<TAB>integer_id`` per node."""
    with open(path, "w") as fh:
        for u in range(graph.node_count):
            fh.write(f"{graph.label(u)}\t{u}\n")


class DisjointSet:
    """Union-find with path compression and union by size."""

    def __init__(self, n: int):
        self.parent = np.arange(n, dtype=np.int64)
        self.size = np.ones(n, dtype=np.int64)

    def find(self, x: int) -> int:
        parent = self.parent
        root = x
        while parent[root] != root:
            root = parent[root]
        while parent[x] != root:
            parent[x], x = root, parent[x]
        return int(root)

    def union(self, a: int, b: int) -> int:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return ra
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]
        return ra

    def roots(self, nodes: np.ndarray) -> np.ndarray:
        """Vectorised find by pointer jumping; compresses the visited paths."""
        nodes = np.asarray(nodes, dtype=np.int64)
        r = self.parent[nodes]
        while True:
            nxt = self.parent[r]
            if np.array_equal(nxt, r):
                break
            r = nxt
        self.parent[nodes] = r
        return r

    def component_size(self, x: int) -> int:
        return int(self.size[self.find(x)])


class ObservedState:
    """The partially observed graph together with the probe bookkeeping.

    Per-node arrays are indexed by oracle node id and cover every oracle node;
    entries for unobserved nodes stay at zero. Triangle counts are maintained
    edge by edge so clustering never needs a full recount.
    """

    def __init__(self, node_count: int):
        n = int(node_count)
        self.node_count = n
        self.observed = np.zeros(n, dtype=bool)
        self.probed = np.zeros(n, dtype=bool)
        self.initial = np.zeros(n, dtype=bool)
        self.adj: list[set[int]] = [set() for _ in range(n)]
        self.degree = np.zeros(n, dtype=np.int64)
        self.triangles = np.zeros(n, dtype=np.int64)
        self.lost_reward = np.zeros(n, dtype=np.int64)
        self.probed_neighbors = np.zeros(n, dtype=np.int64)
        self.components = DisjointSet(n)
        self.probe_order: list[int] = []
        self.n_observed = 0
        self.n_edges = 0
        self.time_step = 0

    @classmethod
    def from_sample(cls, node_count: int, nodes: Iterable[int], edges: Iterable) -> "ObservedState":
        """Build the initial observation and freeze it as the initial node set."""
        state = cls(node_count)
        for u in nodes:
            state.add_node(int(u))
        for u, v in edges:
            state.add_node(int(u))
            state.add_node(int(v))
            state.add_edge(int(u), int(v))
        state.initial = state.observed.copy()
        return state

    # mutation --------------------------------------------------------------

    def add_node(self, u: int) -> bool:
        if self.observed[u]:
            return False
        self.observed[u] = True
        self.n_observed += 1
        return True

    def add_edge(self, u: int, v: int) -> bool:
        if u == v:
            raise ValueError("self-loop")
        au, av = self.adj[u], self.adj[v]
        if v in au:
            return False
        common = au & av if len(au) < len(av) else av & au
        if common:
            c = len(common)
            self.triangles[u] += c
            self.triangles[v] += c
            self.triangles[list(common)] += 1
        au.add(v)
        av.add(u)
        self.degree[u] += 1
        self.degree[v] += 1
        self.n_edges += 1
        self.components.union(u, v)
        return True

    # queries ---------------------------------------------------------------

    @property
    def observed_nodes(self) -> np.ndarray:
        return np.flatnonzero(self.observed)

    @property
    def initial_nodes(self) -> np.ndarray:
        return np.flatnonzero(self.initial)

    @property
    def observed_edges(self) -> set[tuple[int, int]]:
        return {(u, v) for u in range(self.node_count) for v in self.adj[u] if u < v}

    def candidates(self) -> np.ndarray:
        """Observed but unprobed nodes, ascending."""
        return np.flatnonzero(self.observed & ~self.probed)

    def _check_node(self, u: int) -> None:
        if not (0 <= u < self.node_count) or not self.observed[u]:
            raise KeyError(f"node {u} is not observed")


def probe(oracle: OracleGraph, state: ObservedState, u: int) -> int:
    """Query ``u`` for its neighbours and merge them into ``state``.

    Returns the number of previously unobserved nodes revealed.
    """
    u = int(u)
    if not (0 <= u < state.node_count) or not state.observed[u]:
        raise ProbeError(f"cannot probe unobserved node {u}")
    if state.probed[u]:
        raise ProbeError(f"node {u} was already probed")

    before = state.n_observed
    revealed = []
    for w in oracle.neighbors(u):
        w = int(w)
        state.add_node(w)
        if state.add_edge(u, w):
            revealed.append((u, w))
    nbrs = oracle.neighbors(u)
    state.probed_neighbors[nbrs] += 1
    update_lost_reward(state, u, revealed)

    state.probed[u] = True
    state.probe_order.append(u)
    state.time_step += 1
    return state.n_observed - before


def local_clustering(state: ObservedState, u: int) -> float:
    """Clustering coefficient of ``u`` over observed edges (0 below degree 2)."""
    state._check_node(u)
    d = int(state.degree[u])
    if d < 2:
        return 0.0
    return 2.0 * int(state.triangles[u]) / (d * (d - 1))


def component_size(state: ObservedState, u: int) -> int:
    """Size of the observed connected component containing ``u``."""
    state._check_node(u)
    return state.components.component_size(u)
