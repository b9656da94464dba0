"""Per-node features of the observed graph.

Every feature is derived from counters kept up to date by ``probe``: observed
degree, triangle count, component membership, number of probed neighbours and
the lost-reward counter. Normalisations are taken at query time because they
depend on global maxima.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterable

import numpy as np

if TYPE_CHECKING:
    from .graph import ObservedState

FEATURE_NAMES = ("norm_degree", "clustering", "comp_size", "probed_frac", "lost_reward_norm")
N_FEATURES = len(FEATURE_NAMES)


@dataclass(frozen=True)
class FeatureVector:
    norm_degree: float
    clustering: float
    comp_size: float
    probed_frac: float
    lost_reward_norm: float

    def as_array(self) -> np.ndarray:
        return np.array([self.norm_degree, self.clustering, self.comp_size,
                         self.probed_frac, self.lost_reward_norm])


def update_lost_reward(state: "ObservedState", probed_node: int,
                       revealed_edges: Iterable[tuple[int, int]]) -> None:
    """Credit every endpoint that first became connected through this probe.

    ``revealed_edges`` must contain only edges that were absent from the
    observed graph before the probe; call once per probe.
    """
    for a, b in revealed_edges:
        w = b if a == probed_node else a
        state.lost_reward[w] += 1


def feature_matrix(state: "ObservedState", nodes) -> np.ndarray:
    """Feature rows for ``nodes`` (shape ``len(nodes) x 5``)."""
    nodes = np.asarray(nodes, dtype=np.int64)
    out = np.zeros((len(nodes), N_FEATURES))
    if len(nodes) == 0:
        return out
    observed = state.observed
    deg = state.degree[nodes].astype(float)

    max_deg = state.degree[observed].max() if state.n_observed else 0
    if max_deg > 0:
        out[:, 0] = deg / max_deg

    tri = state.triangles[nodes].astype(float)
    pairs = deg * (deg - 1.0)
    np.divide(2.0 * tri, pairs, out=out[:, 1], where=deg >= 2)

    roots = state.components.roots(nodes)
    out[:, 2] = state.components.size[roots] / state.n_observed

    np.divide(state.probed_neighbors[nodes].astype(float), deg, out=out[:, 3], where=deg > 0)

    unprobed = observed & ~state.probed
    max_lost = state.lost_reward[unprobed].max() if unprobed.any() else 0
    out[:, 4] = state.lost_reward[nodes] / max(1, max_lost)
    return out


def compute_features(state: "ObservedState", u: int) -> FeatureVector:
    """Feature vector of a single observed, unprobed node."""
    state._check_node(u)
    if state.probed[u]:
        raise ValueError(f"node {u} is already probed")
    return FeatureVector(*feature_matrix(state, [u])[0].tolist())
