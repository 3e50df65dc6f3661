"""Directed graphs, random ground-truth generators, and structural metrics.

Graphs are immutable value objects: a node count `d` and a frozen set of
ordered edges over 0-indexed nodes. Ground truths are always DAGs; predicted
and expected graphs may contain cycles.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np

from .constraints import EdgeConstraint, Kind, check_consistent
from .errors import IngestionError, ParameterError
from .rng import make_rng

Edge = tuple[int, int]


@dataclass(frozen=True)
class DirectedGraph:
    """Binary directed graph over nodes 0..d-1 with no self-loops."""

    d: int
    edges: frozenset[Edge] = field(default_factory=frozenset)

    def __post_init__(self):
        if self.d < 1:
            raise ParameterError(f"node count must be positive, got {self.d}")
        object.__setattr__(self, "edges", frozenset((int(i), int(j)) for i, j in self.edges))
        for i, j in self.edges:
            if i == j:
                raise ParameterError(f"self-loop ({i}, {i}) not allowed")
            if not (0 <= i < self.d and 0 <= j < self.d):
                raise ParameterError(f"edge ({i}, {j}) out of range for d={self.d}")

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def has_edge(self, i: int, j: int) -> bool:
        return (i, j) in self.edges

    def is_dag(self) -> bool:
        """Kahn topological-sort existence check."""
        indeg = [0] * self.d
        children: list[list[int]] = [[] for _ in range(self.d)]
        for i, j in self.edges:
            indeg[j] += 1
            children[i].append(j)
        queue = [v for v in range(self.d) if indeg[v] == 0]
        seen = 0
        while queue:
            v = queue.pop()
            seen += 1
            for c in children[v]:
                indeg[c] -= 1
                if indeg[c] == 0:
                    queue.append(c)
        return seen == self.d

    def topological_order(self) -> list[int]:
        """A topological order of the nodes; raises on cyclic graphs."""
        indeg = [0] * self.d
        children: list[list[int]] = [[] for _ in range(self.d)]
        for i, j in sorted(self.edges):
            indeg[j] += 1
            children[i].append(j)
        queue = sorted(v for v in range(self.d) if indeg[v] == 0)
        order = []
        while queue:
            v = queue.pop(0)
            order.append(v)
            for c in children[v]:
                indeg[c] -= 1
                if indeg[c] == 0:
                    queue.append(c)
        if len(order) != self.d:
            raise ParameterError("graph is not acyclic")
        return order

    def parents(self, j: int) -> list[int]:
        return sorted(i for i, k in self.edges if k == j)

    def to_adjacency(self) -> np.ndarray:
        """0/1 adjacency matrix, entry [i, j] = 1 iff edge i -> j."""
        adj = np.zeros((self.d, self.d), dtype=int)
        for i, j in self.edges:
            adj[i, j] = 1
        return adj

    @classmethod
    def from_adjacency(cls, adj: np.ndarray) -> "DirectedGraph":
        adj = np.asarray(adj)
        if adj.ndim != 2 or adj.shape[0] != adj.shape[1]:
            raise ParameterError(f"adjacency must be square, got shape {adj.shape}")
        edges = frozenset((int(i), int(j)) for i, j in zip(*np.nonzero(adj)))
        return cls(adj.shape[0], edges)


def generate_er_dag(d: int, s0: int, seed: int) -> DirectedGraph:
    """Random Erdos-Renyi DAG with expected edge count `s0`.

    Undirected pairs are sampled with probability p = 2*s0 / (d*(d-1)), then
    oriented from low to high rank of a uniformly random node permutation.
    """
    if d < 1:
        raise ParameterError(f"d must be >= 1, got {d}")
    max_edges = d * (d - 1) // 2
    if s0 < 0 or s0 > max_edges:
        raise ParameterError(f"s0 must be in [0, {max_edges}] for d={d}, got {s0}")
    rng = make_rng(seed, 0)
    edges = set()
    if d > 1 and s0 > 0:
        p = 2.0 * s0 / (d * (d - 1))
        perm = rng.permutation(d)
        rank = np.empty(d, dtype=int)
        rank[perm] = np.arange(d)
        draws = rng.random(max_edges)
        k = 0
        for i in range(d):
            for j in range(i + 1, d):
                if draws[k] < p:
                    if rank[i] < rank[j]:
                        edges.add((i, j))
                    else:
                        edges.add((j, i))
                k += 1
    return DirectedGraph(d, frozenset(edges))


def generate_sf_dag(d: int, s0: int, seed: int) -> DirectedGraph:
    """Random scale-free DAG via preferential attachment.

    Each new node attaches to m = round(s0/d) distinct existing nodes chosen
    with probability proportional to degree; edges point from the
    earlier-attached node to the later-attached one, so the result is acyclic.
    """
    if d < 2:
        raise ParameterError(f"d must be >= 2, got {d}")
    m = int(round(s0 / d))
    if m < 1:
        raise ParameterError(f"s0={s0} gives attachment count {m} < 1 (need s0 >= d)")
    if m >= d:
        raise ParameterError(f"attachment count {m} must be < d={d}")
    rng = make_rng(seed, 0)
    edges = set()
    # Repeated-nodes preferential attachment: each endpoint of an edge is
    # appended once, so sampling the list is degree-proportional sampling.
    repeated: list[int] = []
    for new in range(m, d):
        if not repeated:
            targets = set(range(new))
        else:
            targets = set()
            while len(targets) < m:
                targets.add(repeated[int(rng.integers(len(repeated)))])
        for t in sorted(targets):
            edges.add((t, new))
            repeated.append(t)
            repeated.append(new)
    return DirectedGraph(d, frozenset(edges))


@dataclass(frozen=True)
class MetricReport:
    """Edge-accuracy metrics of a predicted graph against a ground truth.

    Rates follow the directed-edge accounting where a predicted edge whose
    reverse is the true edge counts as a discovery in error. SHD is skeleton
    mismatches plus reversals, each counted once, and is reported per node.
    """

    fdr: float
    tpr: float
    fpr: float
    shd: int
    shd_per_node: float
    tp: int
    reversed: int
    fp: int
    missing: int

    def value(self, metric: str) -> float:
        """Look up one of 'fdr', 'tpr', 'fpr', 'shd' (shd is per node)."""
        if metric == "shd":
            return self.shd_per_node
        if metric in ("fdr", "tpr", "fpr"):
            return getattr(self, metric)
        raise ParameterError(f"unknown metric {metric!r}")


METRIC_NAMES = ("fdr", "tpr", "fpr", "shd")

# Desirability of each delta metric in reports: -1 means lower is better.
METRIC_DIRECTIONS = {"fdr": -1, "tpr": +1, "fpr": -1, "shd": -1}


def structural_metrics(pred: DirectedGraph, truth: DirectedGraph) -> MetricReport:
    """Compare predicted directed edges against the true edge set.

    tp: predicted edges that are true edges.
    reversed: predicted edges whose reverse (and only the reverse) is true.
    fp: predicted edges true in neither direction.
    missing: true edges predicted in neither direction.
    """
    if pred.d != truth.d:
        raise ParameterError(f"node count mismatch: pred d={pred.d}, truth d={truth.d}")
    d = pred.d
    t, p = truth.edges, pred.edges
    tp = len(p & t)
    n_reversed = sum(1 for (i, j) in p if (j, i) in t and (i, j) not in t)
    fp = len(p) - tp - n_reversed
    missing = sum(1 for (i, j) in t if (i, j) not in p and (j, i) not in p)

    skel_p = {frozenset(e) for e in p}
    skel_t = {frozenset(e) for e in t}
    shd = len(skel_p - skel_t) + len(skel_t - skel_p) + n_reversed

    neg = d * (d - 1) / 2 - len(t)
    return MetricReport(
        fdr=(n_reversed + fp) / max(len(p), 1),
        tpr=tp / max(len(t), 1),
        fpr=(n_reversed + fp) / max(neg, 1),
        shd=shd,
        shd_per_node=shd / d,
        tp=tp,
        reversed=n_reversed,
        fp=fp,
        missing=missing,
    )


def expected_graph(pred: DirectedGraph, knowledge: Iterable[EdgeConstraint]) -> DirectedGraph:
    """Predicted graph with every knowledge item applied and nothing else changed.

    A known-active (i, j) adds the edge and, when it corrects a reversed
    prediction, drops (j, i); a known-inactive (i, j) removes the edge. The
    result need not be acyclic.
    """
    knowledge = list(knowledge)
    check_consistent(knowledge)
    edges = set(pred.edges)
    active_pairs = {(c.i, c.j) for c in knowledge if c.kind is Kind.ACTIVE}
    for c in knowledge:
        if not (0 <= c.i < pred.d and 0 <= c.j < pred.d):
            raise ParameterError(f"constraint ({c.i}, {c.j}) out of range for d={pred.d}")
        if c.kind is Kind.ACTIVE:
            edges.add((c.i, c.j))
            if (c.j, c.i) in edges and (c.j, c.i) not in active_pairs:
                edges.discard((c.j, c.i))
        else:
            edges.discard((c.i, c.j))
    return DirectedGraph(pred.d, frozenset(edges))


# --- file formats ---------------------------------------------------------


def write_edge_list(graph: DirectedGraph, path: str | Path) -> None:
    """Plain-text edge list: header line `d=<n>`, then one `i j` pair per line."""
    lines = [f"d={graph.d}"]
    lines += [f"{i} {j}" for i, j in sorted(graph.edges)]
    Path(path).write_text("\n".join(lines) + "\n")


def read_edge_list(path: str | Path) -> DirectedGraph:
    text = Path(path).read_text()
    d = None
    edges = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("d="):
            d = int(line[2:])
            continue
        parts = line.split()
        if len(parts) != 2:
            raise IngestionError(f"{path}: line {lineno}: expected 'i j', got {raw!r}")
        edges.add((int(parts[0]), int(parts[1])))
    if d is None:
        raise IngestionError(f"{path}: missing 'd=<n>' header line")
    return DirectedGraph(d, frozenset(edges))


def write_adjacency_csv(graph: DirectedGraph, path: str | Path) -> None:
    """d x d 0/1 adjacency matrix, one row per line."""
    adj = graph.to_adjacency()
    Path(path).write_text("\n".join(",".join(str(v) for v in row) for row in adj) + "\n")


def read_adjacency_csv(path: str | Path) -> DirectedGraph:
    rows = []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        if not raw.strip():
            continue
        cells = raw.split(",")
        try:
            rows.append([int(c.strip()) for c in cells])
        except ValueError as exc:
            raise IngestionError(f"{path}: line {lineno}: non-integer cell") from exc
    if not rows:
        raise IngestionError(f"{path}: empty adjacency file")
    d = len(rows)
    for lineno, row in enumerate(rows, start=1):
        if len(row) != d:
            raise IngestionError(f"{path}: row {lineno}: expected {d} columns, got {len(row)}")
        if any(v not in (0, 1) for v in row):
            raise IngestionError(f"{path}: row {lineno}: entries must be 0 or 1")
    return DirectedGraph.from_adjacency(np.array(rows))
