"""Contact-network generation: connected Erdős–Rényi and Barabási–Albert.

Graphs are undirected, simple, with dense integer node ids 0..n-1, stored
in compressed sparse row form (``indptr``/``indices``) with each
neighbor list sorted.  Generation is fully deterministic given the
``GraphSpec`` (including its seed) and is safe to call concurrently.

Conventions:

* ER samples G(n, p) with p = mean_degree / (n - 1) and resamples from
  the continuing random stream until the graph is connected (capped at
  ``ER_MAX_ATTEMPTS``).
* BA grows from a complete seed clique on m + 1 nodes (m = mean_degree/2
  attachment edges per new node); duplicate targets are rejected and
  redrawn within a node's m draws.  The result is connected by
  construction with exactly C(m+1, 2) + (n - m - 1) * m edges.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from numba import njit

from ._rng import _GOLDEN, PURPOSE_GRAPH, key_for, mix64
from .errors import GraphGenerationError, ParameterError

ER_MAX_ATTEMPTS = 1000

_INV_2_53 = 1.1102230246251565e-16


class GraphFamily(enum.Enum):
    ERDOS_RENYI = "er"
    BARABASI_ALBERT = "ba"


@dataclass(frozen=True)
class GraphSpec:
    """Recipe for one contact network."""

    family: GraphFamily
    n: int
    mean_degree: float
    seed: int

    def __post_init__(self):
        if self.n < 2:
            raise ParameterError("n", self.n, "[2, inf)")
        if self.family is GraphFamily.ERDOS_RENYI:
            # achievable target: edge probability mean_degree/(n-1) in (0, 1]
            if not 0 < self.mean_degree <= self.n - 1:
                raise ParameterError(
                    "mean_degree", self.mean_degree, f"(0, {self.n - 1}] for er"
                )
        else:
            # target 2m encodes m attachment edges; n=m+1 is the bare clique
            k = self.mean_degree
            if k != int(k) or int(k) % 2 != 0 or int(k) < 2:
                raise ParameterError(
                    "mean_degree", self.mean_degree, "positive even integer for ba"
                )
            m = int(k) // 2
            if self.n <= m:
                raise ParameterError("n", self.n, f"({m}, inf) for ba with m={m}")


@dataclass
class Graph:
    """Undirected simple graph in CSR form; immutable after construction."""

    n: int
    indptr: np.ndarray  # int64, length n+1
    indices: np.ndarray  # int32, length 2*edge_count, sorted per node
    edge_count: int

    def neighbors(self, v: int) -> np.ndarray:
        return self.indices[self.indptr[v] : self.indptr[v + 1]]

    def degree(self, v: int) -> int:
        return int(self.indptr[v + 1] - self.indptr[v])

    @property
    def mean_degree(self) -> float:
        return 2.0 * self.edge_count / self.n

    def adjacency(self) -> list[np.ndarray]:
        return [self.neighbors(v) for v in range(self.n)]

    @classmethod
    def from_edges(cls, n: int, edges) -> "Graph":
        """Build a graph from an iterable of (u, v) pairs; validates simplicity."""
        us, vs = [], []
        for u, v in edges:
            if u == v:
                raise ValueError(f"self-loop at node {u}")
            if not (0 <= u < n and 0 <= v < n):
                raise ValueError(f"edge ({u}, {v}) outside node range [0, {n})")
            us.append(u)
            vs.append(v)
        ua = np.asarray(us, dtype=np.int32)
        va = np.asarray(vs, dtype=np.int32)
        indptr, indices = _build_csr(n, ua, va)
        for v in range(n):
            row = indices[indptr[v] : indptr[v + 1]]
            if row.size > 1 and np.any(row[1:] == row[:-1]):
                raise ValueError(f"duplicate edge at node {v}")
        return cls(n=n, indptr=indptr, indices=indices, edge_count=len(us))


@njit(cache=True, nogil=True)
def _build_csr(n, us, vs):
    deg = np.zeros(n, np.int64)
    m = us.shape[0]
    for e in range(m):
        deg[us[e]] += 1
        deg[vs[e]] += 1
    indptr = np.zeros(n + 1, np.int64)
    for i in range(n):
        indptr[i + 1] = indptr[i] + deg[i]
    fill = indptr[:n].copy()
    indices = np.empty(2 * m, np.int32)
    for e in range(m):
        u = us[e]
        v = vs[e]
        indices[fill[u]] = v
        fill[u] += 1
        indices[fill[v]] = u
        fill[v] += 1
    for i in range(n):
        indices[indptr[i] : indptr[i + 1]].sort()
    return indptr, indices


@njit(cache=True, nogil=True)
def _bfs_reaches_all(n, indptr, indices):
    visited = np.zeros(n, np.bool_)
    stack = np.empty(n, np.int32)
    visited[0] = True
    stack[0] = 0
    top = 1
    seen = 1
    while top > 0:
        top -= 1
        v = stack[top]
        for k in range(indptr[v], indptr[v + 1]):
            u = indices[k]
            if not visited[u]:
                visited[u] = True
                stack[top] = u
                top += 1
                seen += 1
    return seen == n


@njit(cache=True, nogil=True)
def _sample_er_edges(n, p, state):
    """One G(n, p) sample via geometric edge skipping; O(n + edges)."""
    cap = int(p * n * (n - 1) / 2 + 10.0 * np.sqrt(p * n * (n - 1) / 2 + 1.0)) + 64
    us = np.empty(cap, np.int32)
    vs = np.empty(cap, np.int32)
    m = 0
    lp = np.log(1.0 - p)
    v = 1
    w = -1
    while v < n:
        state = state + _GOLDEN
        r = (mix64(state) >> np.uint64(11)) * _INV_2_53
        w += 1 + int(np.log(1.0 - r) / lp)
        while w >= v and v < n:
            w -= v
            v += 1
        if v < n:
            if m == cap:
                cap *= 2
                nus = np.empty(cap, np.int32)
                nvs = np.empty(cap, np.int32)
                nus[:m] = us[:m]
                nvs[:m] = vs[:m]
                us = nus
                vs = nvs
            us[m] = w
            vs[m] = v
            m += 1
    return us[:m], vs[:m], state


@njit(cache=True, nogil=True)
def _generate_er_csr(n, p, key, max_attempts):
    """Sample until connected; returns (indptr, indices, attempts_used).

    attempts_used == 0 signals that the retry cap was exhausted.
    """
    state = key
    for attempt in range(max_attempts):
        us, vs, state = _sample_er_edges(n, p, state)
        indptr, indices = _build_csr(n, us, vs)
        if _bfs_reaches_all(n, indptr, indices):
            return indptr, indices, attempt + 1
    return np.zeros(1, np.int64), np.empty(0, np.int32), 0


@njit(cache=True, nogil=True)
def _sample_ba_edges(n, m, key):
    """Preferential attachment from a complete clique on m+1 nodes."""
    n_edges = (m + 1) * m // 2 + (n - m - 1) * m
    us = np.empty(n_edges, np.int32)
    vs = np.empty(n_edges, np.int32)
    # one slot per edge endpoint: node id repeated once per adjacent edge
    repeated = np.empty(2 * n_edges, np.int32)
    e = 0
    rlen = 0
    for i in range(m + 1):
        for j in range(i + 1, m + 1):
            us[e] = i
            vs[e] = j
            e += 1
    for i in range(m + 1):
        for _ in range(m):
            repeated[rlen] = i
            rlen += 1
    state = np.uint64(key)
    targets = np.empty(m, np.int32)
    for src in range(m + 1, n):
        cnt = 0
        while cnt < m:
            state = state + _GOLDEN
            t = repeated[int(mix64(state) % np.uint64(rlen))]
            dup = False
            for q in range(cnt):
                if targets[q] == t:
                    dup = True
                    break
            if not dup:
                targets[cnt] = t
                cnt += 1
        for q in range(m):
            us[e] = targets[q]
            vs[e] = src
            e += 1
            repeated[rlen] = targets[q]
            rlen += 1
        for q in range(m):
            repeated[rlen] = src
            rlen += 1
    return us, vs


def _complete_graph(n: int) -> Graph:
    iu, ju = np.triu_indices(n, k=1)
    indptr, indices = _build_csr(n, iu.astype(np.int32), ju.astype(np.int32))
    return Graph(n=n, indptr=indptr, indices=indices, edge_count=len(iu))


def generate_er(spec: GraphSpec) -> Graph:
    """Sample a connected G(n, p); deterministic given spec.seed."""
    if spec.family is not GraphFamily.ERDOS_RENYI:
        raise ParameterError("family", spec.family.value, "er")
    n = spec.n
    p = spec.mean_degree / (n - 1)
    if p >= 1.0:
        return _complete_graph(n)
    key = np.uint64(key_for(spec.seed, PURPOSE_GRAPH, 0))
    indptr, indices, attempts = _generate_er_csr(n, p, key, ER_MAX_ATTEMPTS)
    if attempts == 0:
        raise GraphGenerationError(
            f"no connected G({n}, p={p:.6g}) sample in {ER_MAX_ATTEMPTS} attempts; "
            "parameters are in the disconnected regime"
        )
    return Graph(n=n, indptr=indptr, indices=indices, edge_count=len(indices) // 2)


def generate_ba(spec: GraphSpec) -> Graph:
    """Grow a Barabási–Albert graph; deterministic given spec.seed."""
    if spec.family is not GraphFamily.BARABASI_ALBERT:
        raise ParameterError("family", spec.family.value, "ba")
    m = int(spec.mean_degree) // 2
    key = np.uint64(key_for(spec.seed, PURPOSE_GRAPH, 1))
    us, vs = _sample_ba_edges(spec.n, m, key)
    indptr, indices = _build_csr(spec.n, us, vs)
    return Graph(n=spec.n, indptr=indptr, indices=indices, edge_count=len(us))


def generate(spec: GraphSpec) -> Graph:
    if spec.family is GraphFamily.ERDOS_RENYI:
        return generate_er(spec)
    return generate_ba(spec)


def is_connected(g: Graph) -> bool:
    """True iff a traversal from node 0 reaches all n nodes."""
    if g.n == 0:
        return True
    return bool(_bfs_reaches_all(g.n, g.indptr, g.indices))


def save_edge_list(g: Graph, path) -> None:
    """Write ``n <n>`` then one ``u v`` line per edge, u < v, ascending."""
    with open(path, "w", encoding="ascii", newline="\n") as f:
        f.write(f"n {g.n}\n")
        for u in range(g.n):
            for v in g.neighbors(u):
                if v > u:
                    f.write(f"{u} {v}\n")


def load_edge_list(path) -> Graph:
    with open(path, "r", encoding="ascii") as f:
        header = f.readline().split()
        if len(header) != 2 or header[0] != "n":
            raise ValueError(f"{path}: expected header 'n <count>'")
        n = int(header[1])
        edges = []
        for line in f:
            line = line.strip()
            if line:
                u, v = line.split()
                edges.append((int(u), int(v)))
    return Graph.from_edges(n, edges)
