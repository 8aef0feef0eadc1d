"""Small graph builders and statistics helpers shared by the tests."""

from __future__ import annotations

import numpy as np

from cyberepi.graph import Graph


def star_graph(k: int) -> Graph:
    """Center node 0 with k leaves 1..k."""
    return Graph.from_edges(k + 1, [(0, i + 1) for i in range(k)])


def path_graph(n: int) -> Graph:
    return Graph.from_edges(n, [(i, i + 1) for i in range(n - 1)])


def complete_graph(n: int) -> Graph:
    return Graph.from_edges(n, [(i, j) for i in range(n) for j in range(i + 1, n)])


def empty_graph(n: int) -> Graph:
    return Graph.from_edges(n, [])


def binomial_3se(p: float, trials: int) -> float:
    """Three binomial standard errors for a frequency estimate."""
    return 3.0 * np.sqrt(max(p * (1.0 - p), 1e-300) / trials)


def assert_simple_symmetric(g: Graph) -> None:
    """Graph invariants: no self loops, no duplicates, symmetric, sorted."""
    seen = set()
    for v in range(g.n):
        row = g.neighbors(v)
        assert np.all(row[1:] > row[:-1]) if row.size > 1 else True, "unsorted row"
        assert not np.any(row == v), "self loop"
        for u in row:
            seen.add((v, int(u)))
    for v, u in seen:
        assert (u, v) in seen, f"asymmetric edge ({v}, {u})"
    assert len(seen) == 2 * g.edge_count
