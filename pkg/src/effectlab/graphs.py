"""Production-line-shaped causal graphs.

Graphs are DAGs over nodes ``0..n-1`` whose edges always point forward in
the (identity) topological order, with a single sink at index ``n-1``
representing the end of the line. Edge density decays exponentially with
the index gap between two process stations, and the number of direct
inputs per station is capped.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .errors import ConfigurationError, ContractError
from .rng import ensure_rng


@dataclass(frozen=True)
class GraphConfig:
    """Sampling configuration for process graphs.

    Parameters
    ----------
    node_range : (int, int)
        Inclusive range for the node count; each draw samples the count
        uniformly from this range.
    base_edge_prob : float
        Probability of an edge between adjacent nodes (index gap 0).
    distance_decay : float
        Exponential decay rate of the edge probability per unit of extra
        index gap.
    max_in_degree : int
        Upper bound on the number of parents of any non-sink node. The sink
        is exempt because it absorbs rewired edges.
    """

    node_range: tuple[int, int] = (4, 8)
    base_edge_prob: float = 0.7
    distance_decay: float = 0.5
    max_in_degree: int = 3

    def __post_init__(self):
        lo, hi = self.node_range
        if lo < 2 or hi < lo:
            raise ConfigurationError(f"node_range must satisfy 2 <= lo <= hi, got {self.node_range}")
        if not (0.0 < self.base_edge_prob <= 1.0):
            raise ConfigurationError(f"base_edge_prob must be in (0, 1], got {self.base_edge_prob}")
        if self.distance_decay < 0.0:
            raise ConfigurationError(f"distance_decay must be >= 0, got {self.distance_decay}")
        if self.max_in_degree < 1:
            raise ConfigurationError(f"max_in_degree must be >= 1, got {self.max_in_degree}")


class CausalProcessGraph:
    """DAG in topological order with a single sink at the last index."""

    def __init__(self, node_count: int, edges: Iterable[tuple[int, int]]):
        if node_count < 2:
            raise ConfigurationError("graph needs at least 2 nodes")
        edges = tuple(sorted((int(a), int(b)) for a, b in edges))
        for a, b in edges:
            if not (0 <= a < b < node_count):
                raise ContractError(f"edge ({a}, {b}) violates topological order")
        if len(set(edges)) != len(edges):
            raise ContractError("duplicate edges")
        self.node_count = int(node_count)
        self.edges = edges
        self._parents: list[list[int]] = [[] for _ in range(node_count)]
        self._children: list[list[int]] = [[] for _ in range(node_count)]
        for a, b in edges:
            self._parents[b].append(a)
            self._children[a].append(b)

    @property
    def sink_index(self) -> int:
        return self.node_count - 1

    def parents(self, node: int) -> list[int]:
        return list(self._parents[node])

    def children(self, node: int) -> list[int]:
        return list(self._children[node])

    def in_degree(self, node: int) -> int:
        return len(self._parents[node])

    def out_degree(self, node: int) -> int:
        return len(self._children[node])

    def descendants(self, node: int) -> set[int]:
        """All nodes reachable from ``node`` by directed paths (excluding it)."""
        seen: set[int] = set()
        stack = list(self._children[node])
        while stack:
            k = stack.pop()
            if k not in seen:
                seen.add(k)
                stack.extend(self._children[k])
        return seen

    def has_path(self, source: int, target: int) -> bool:
        return target in self.descendants(source)

    def is_single_sink(self) -> bool:
        return all(
            self.out_degree(i) >= 1 for i in range(self.node_count - 1)
        ) and self.out_degree(self.sink_index) == 0

    def respects_in_degree(self, max_in_degree: int) -> bool:
        """In-degree cap over non-sink nodes; the sink is exempt."""
        return all(
            self.in_degree(i) <= max_in_degree
            for i in range(self.node_count)
            if i != self.sink_index
        )

    def without_incoming(self, node: int) -> "CausalProcessGraph":
        """Copy with all edges into ``node`` removed (do-operator surgery).

        The result may violate the single-sink property; callers dealing
        with mutilated graphs must not re-check it.
        """
        return CausalProcessGraph(
            self.node_count, [e for e in self.edges if e[1] != node]
        )

    def __eq__(self, other):
        return (
            isinstance(other, CausalProcessGraph)
            and self.node_count == other.node_count
            and self.edges == other.edges
        )

    def __repr__(self):
        return f"CausalProcessGraph(node_count={self.node_count}, edges={list(self.edges)})"


def edge_probability(gap: int, config: GraphConfig) -> float:
    """Inclusion probability for an edge whose endpoints are ``gap`` nodes
    apart beyond adjacency (adjacent nodes have gap 0)."""
    return config.base_edge_prob * float(np.exp(-config.distance_decay * gap))


def sample_edge_candidates(node_count: int, config: GraphConfig, rng) -> np.ndarray:
    """Raw distance-decayed edge draw, before capping and sink rewiring.

    Returns a boolean (node_count, node_count) adjacency matrix with
    entries only above the diagonal. Exposed separately so the decay law
    can be measured directly.
    """
    rng = ensure_rng(rng)
    n = node_count
    i, j = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    gap = j - i - 1
    prob = np.where(j > i, config.base_edge_prob * np.exp(-config.distance_decay * np.maximum(gap, 0)), 0.0)
    return rng.random((n, n)) < prob


def _cap_in_degree(adj: np.ndarray, max_in_degree: int, rng) -> np.ndarray:
    """Subsample parents uniformly where the cap is exceeded (sink exempt)."""
    n = adj.shape[0]
    adj = adj.copy()
    for j in range(n - 1):
        parents = np.flatnonzero(adj[:, j])
        if parents.size > max_in_degree:
            keep = rng.choice(parents, size=max_in_degree, replace=False)
            adj[:, j] = False
            adj[keep, j] = True
    return adj


def _rewire_single_sink(adj: np.ndarray) -> np.ndarray:
    """Give every dead-end node except the last an edge to the last node."""
    n = adj.shape[0]
    adj = adj.copy()
    for i in range(n - 1):
        if not adj[i].any():
            adj[i, n - 1] = True
    return adj


def sample_cpg(config: GraphConfig, rng) -> CausalProcessGraph:
    """Draw one causal process graph.

    The node count is sampled from ``config.node_range``; edges are drawn
    independently with exponentially distance-decayed probability; parent
    sets above the in-degree cap are uniformly subsampled; finally every
    dead-end node is rewired into the last node so the graph has exactly
    one sink. Deterministic given the generator state.
    """
    rng = ensure_rng(rng)
    lo, hi = config.node_range
    n = int(rng.integers(lo, hi + 1))
    adj = sample_edge_candidates(n, config, rng)
    adj = _cap_in_degree(adj, config.max_in_degree, rng)
    adj = _rewire_single_sink(adj)
    edges = [(int(a), int(b)) for a, b in zip(*np.nonzero(adj))]
    return CausalProcessGraph(n, edges)
