"""Location interaction graphs and random-walk (current-flow) betweenness.

The interaction graph aggregates mentions, replies and retweets between
locations. Centrality follows the electrical-network formulation: for every
source-target pair a unit current is injected and extracted, node potentials
solve the graph Laplacian system, and a node's throughput is half the sum of
absolute currents on its incident edges (endpoints carry the full unit).
Scores are averaged over the source-target pairs of each connected component
of the symmetrized graph; self-loops are stored but excluded from the flow.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .errors import CentralityError
from .model import MicroPost, PopulationTable


@dataclass
class LocationInteractionGraph:
    nodes: tuple[str, ...]
    weights: dict[tuple[str, str], float] = field(default_factory=dict)
    dropped_targets: int = 0

    def add_edge(self, source: str, target: str, weight: float = 1.0) -> None:
        self.weights[(source, target)] = self.weights.get((source, target), 0.0) + weight

    def weight(self, source: str, target: str) -> float:
        return self.weights.get((source, target), 0.0)

    def total_weight(self) -> float:
        return sum(self.weights.values())

    def symmetrized(self, include_self_loops: bool = False) -> np.ndarray:
        """Dense symmetric weight matrix in node order (w_uv + w_vu)."""
        index = {c: i for i, c in enumerate(self.nodes)}
        mat = np.zeros((len(self.nodes), len(self.nodes)))
        for (u, v), w in self.weights.items():
            i, j = index[u], index[v]
            if i == j:
                if include_self_loops:
                    mat[i, i] += w
                continue
            mat[i, j] += w
            mat[j, i] += w
        return mat


@dataclass(frozen=True)
class CentralityReport:
    observed: dict[str, float]
    expected: dict[str, float]
    delta: dict[str, float]


def build_interaction_graph(
    posts: Iterable[MicroPost],
    author_locations: Mapping[str, str],
    nodes: Optional[Iterable[str]] = None,
) -> LocationInteractionGraph:
    """Aggregate mention/reply/retweet edges between post locations.

    Each interaction contributes one unit from the post author's location to
    the target author's location; targets without a known location are
    dropped and counted.
    """
    posts = list(posts)
    if nodes is None:
        nodes = sorted({p.location for p in posts if p.location} | set(author_locations.values()))
    graph = LocationInteractionGraph(nodes=tuple(nodes))
    known = set(graph.nodes)
    for post in posts:
        source = post.location
        if source is None or source not in known:
            graph.dropped_targets += 1
            continue
        targets = list(post.mentions)
        if post.reply_to:
            targets.append(post.reply_to)
        if post.retweet_of:
            targets.append(post.retweet_of[1])
        for author_id in targets:
            dest = author_locations.get(author_id)
            if dest is None or dest not in known:
                graph.dropped_targets += 1
                continue
            graph.add_edge(source, dest)
    return graph


def expected_graph(population: PopulationTable, total_weight: float,
                   nodes: Optional[Sequence[str]] = None) -> LocationInteractionGraph:
    """Null graph under proportional mixing: w(u,v) = W * share(u) * share(v)."""
    if total_weight <= 0:
        raise CentralityError("BAD_WEIGHT", "total weight must be positive")
    if nodes is None:
        nodes = tuple(sorted(code for code, _ in population.items()))
    graph = LocationInteractionGraph(nodes=tuple(nodes))
    for u in graph.nodes:
        for v in graph.nodes:
            graph.weights[(u, v)] = total_weight * population.share(u) * population.share(v)
    return graph


def _components(mat: np.ndarray) -> list[list[int]]:
    n = mat.shape[0]
    seen = [False] * n
    comps = []
    for start in range(n):
        if seen[start]:
            continue
        stack, comp = [start], []
        seen[start] = True
        while stack:
            i = stack.pop()
            comp.append(i)
            for j in np.flatnonzero(mat[i] > 0):
                if not seen[j]:
                    seen[j] = True
                    stack.append(int(j))
        comps.append(sorted(comp))
    return comps


def rw_betweenness(graph: LocationInteractionGraph) -> dict[str, float]:
    """Current-flow betweenness per node, averaged over source-target pairs.

    Computed per connected component of the symmetrized graph; nodes in
    singleton components score 0. Invariant under uniform weight scaling.
    """
    mat = graph.symmetrized()
    scores = np.zeros(len(graph.nodes))
    for comp in _components(mat):
        if len(comp) < 2:
            continue
        idx = np.array(comp)
        w = mat[np.ix_(idx, idx)]
        scores[idx] = _component_flow_scores(w)
    return {code: float(s) for code, s in zip(graph.nodes, scores)}


def _component_flow_scores(w: np.ndarray) -> np.ndarray:
    """Average unit-current throughput per node of one connected component."""
    k = w.shape[0]
    laplacian = np.diag(w.sum(axis=1)) - w
    # Ground the last node; potentials are defined up to an additive constant.
    try:
        inv = np.linalg.inv(laplacian[:-1, :-1])
    except np.linalg.LinAlgError as exc:
        raise CentralityError("DEGENERATE_COMPONENT", f"{k}-node component") from exc
    greens = np.zeros((k, k))
    greens[:-1, :-1] = inv
    scores = np.zeros(k)
    for s in range(k):
        for t in range(s + 1, k):
            potential = greens[:, s] - greens[:, t]
            drop = potential[:, None] - potential[None, :]
            throughput = 0.5 * np.abs(w * drop).sum(axis=1)
            throughput[s] = 1.0
            throughput[t] = 1.0
            scores += throughput
    return scores / (k * (k - 1) / 2)


def compare_centralities(observed: LocationInteractionGraph,
                         expected: LocationInteractionGraph) -> CentralityReport:
    """Observed minus expected centrality per location."""
    if set(observed.nodes) != set(expected.nodes):
        raise CentralityError("NODE_MISMATCH",
                              f"{sorted(observed.nodes)} vs {sorted(expected.nodes)}")
    obs = rw_betweenness(observed)
    exp = rw_betweenness(expected)
    delta = {code: obs[code] - exp[code] for code in observed.nodes}
    return CentralityReport(observed=obs, expected=exp, delta=delta)


def permutation_test(observed: LocationInteractionGraph,
                     expected: LocationInteractionGraph,
                     rounds: int = 1000, seed: int = 0) -> dict[str, float]:
    """Permutation p-values for per-node centrality deltas.

    Null model: the observed off-diagonal edge weights are shuffled across
    the same edge slots. One-sided in the observed direction: p is the
    (add-one smoothed) fraction of shuffles whose signed delta is at least
    as extreme as the observed one.
    """
    report = compare_centralities(observed, expected)
    rng = random.Random(seed)
    slots = sorted((u, v) for (u, v) in observed.weights if u != v)
    values = [observed.weights[s] for s in slots]
    exp_scores = report.expected
    exceed = {code: 0 for code in observed.nodes}
    for _ in range(rounds):
        shuffled = values[:]
        rng.shuffle(shuffled)
        null_graph = LocationInteractionGraph(nodes=observed.nodes,
                                              weights=dict(zip(slots, shuffled)))
        null_scores = rw_betweenness(null_graph)
        for code in observed.nodes:
            null_delta = null_scores[code] - exp_scores[code]
            if report.delta[code] >= 0:
                if null_delta >= report.delta[code]:
                    exceed[code] += 1
            elif null_delta <= report.delta[code]:
                exceed[code] += 1
    return {code: (1 + exceed[code]) / (1 + rounds) for code in observed.nodes}
