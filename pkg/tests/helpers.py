"""Shared test oracles, deliberately written as naive re-implementations."""

import numpy as np

from knowdag.graphs import DirectedGraph


def random_digraph(d, p, rng) -> DirectedGraph:
    edges = {
        (i, j)
        for i in range(d)
        for j in range(d)
        if i != j and rng.random() < p
    }
    return DirectedGraph(d, frozenset(edges))


def naive_metrics(pred: DirectedGraph, truth: DirectedGraph) -> dict:
    """Per-pair loop oracle for the structural metrics."""
    d = pred.d
    p, t = pred.edges, truth.edges
    tp = rev = fp = missing = 0
    for i in range(d):
        for j in range(d):
            if i == j:
                continue
            e = (i, j)
            if e in p:
                if e in t:
                    tp += 1
                elif (j, i) in t:
                    rev += 1
                else:
                    fp += 1
            elif e in t and (j, i) not in p:
                missing += 1
    skel_p = {frozenset(e) for e in p}
    skel_t = {frozenset(e) for e in t}
    shd = len(skel_p ^ skel_t) + rev
    neg = d * (d - 1) / 2 - len(t)
    return {
        "tp": tp, "reversed": rev, "fp": fp, "missing": missing, "shd": shd,
        "fdr": (rev + fp) / max(len(p), 1),
        "tpr": tp / max(len(t), 1),
        "fpr": (rev + fp) / max(neg, 1),
    }


def series_trace_exp(m: np.ndarray, terms: int = 30) -> float:
    """Truncated power-series oracle for tr(exp(M))."""
    d = m.shape[0]
    total = float(d)
    power = np.eye(d)
    fact = 1.0
    for k in range(1, terms + 1):
        power = power @ m
        fact *= k
        total += np.trace(power) / fact
    return total
