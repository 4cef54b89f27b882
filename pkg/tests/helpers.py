"""Small graph utilities shared by the planner tests."""

import itertools
import math

import numpy as np

from quasistat import Edge, Stability, TopGraph, TopNode


def bare_graph(n, edges):
    nodes = [TopNode(i, i, np.zeros(1), np.zeros(2), 0.0, Stability.STABLE) for i in range(n)]
    pairs = {(a, b) for a, b, _ in edges}
    return TopGraph(nodes, [Edge(a, b, w, (b, a) not in pairs) for a, b, w in sorted(edges)])


def brute_force(n, edges, s, t):
    w = {(a, b): c for a, b, c in edges}
    best = math.inf
    others = [v for v in range(n) if v not in (s, t)]
    for k in range(len(others) + 1):
        for mid in itertools.permutations(others, k):
            seq = (s, *mid, t)
            if all(p in w for p in zip(seq[:-1], seq[1:])):
                best = min(best, sum(w[p] for p in zip(seq[:-1], seq[1:])))
    return best
