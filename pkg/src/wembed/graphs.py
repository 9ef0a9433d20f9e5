"""Random network generators, real-network fragments and hop-distance metrics."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from itertools import combinations
from pathlib import Path

import numpy as np

from .errors import DisconnectedGraphError, EdgeListParseError

MAX_RETRIES = 50
FRAGMENT_ATTEMPTS = 100


@dataclass
class Graph:
    n: int
    edges: list  # sorted (u, v) tuples with u < v

    def __post_init__(self):
        self.edges = _canonical_edges(self.edges)
        for u, v in self.edges:
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise ValueError(f"edge ({u}, {v}) outside vertex range [0, {self.n})")

    @property
    def n_edges(self):
        return len(self.edges)

    def adjacency(self):
        adj = [[] for _ in range(self.n)]
        for u, v in self.edges:
            adj[u].append(v)
            adj[v].append(u)
        for nbrs in adj:
            nbrs.sort()
        return adj

    def degrees(self):
        deg = np.zeros(self.n, dtype=np.int64)
        for u, v in self.edges:
            deg[u] += 1
            deg[v] += 1
        return deg

    def is_connected(self):
        if self.n <= 1:
            return True
        return len(_bfs_order(self.adjacency(), 0)) == self.n


def _canonical_edges(edges):
    out = set()
    for u, v in edges:
        u, v = int(u), int(v)
        if u == v:
            continue
        out.add((u, v) if u < v else (v, u))
    return sorted(out)


def _bfs_order(adj, start):
    seen = {start}
    order = [start]
    queue = deque([start])
    while queue:
        u = queue.popleft()
        for w in adj[u]:
            if w not in seen:
                seen.add(w)
                order.append(w)
                queue.append(w)
    return order


def _retry_connected(build, seed, ensure_connected):
    for attempt in range(MAX_RETRIES + 1):
        g = build(seed + attempt)
        if not ensure_connected or g.is_connected():
            return g
    adj = g.adjacency()
    reached = set(_bfs_order(adj, 0))
    missing = next(v for v in range(g.n) if v not in reached)
    raise DisconnectedGraphError(0, missing)


def gen_barabasi_albert(n, attach=2, seed=0):
    """Preferential attachment grown from a clique on ``attach + 1`` vertices."""
    if not (1 <= attach < n):
        raise ValueError(f"need 1 <= attach < n, got attach={attach}, n={n}")
    rng = np.random.default_rng(seed)
    edges = list(combinations(range(attach + 1), 2))
    # each vertex appears once per incident edge, so uniform draws are degree-proportional
    stubs = [v for e in edges for v in e]
    for new in range(attach + 1, n):
        targets = set()
        while len(targets) < attach:
            targets.add(stubs[rng.integers(len(stubs))])
        for t in sorted(targets):
            edges.append((t, new))
            stubs.extend((t, new))
    return Graph(n, edges)


def gen_watts_strogatz(n, ring_k=4, beta=0.3, seed=0, ensure_connected=True):
    """Ring lattice with ``ring_k`` nearest neighbours, edges rewired w.p. ``beta``.

    Disconnected draws are regenerated with ``seed + 1``, ``seed + 2``, ...
    unless ``ensure_connected`` is False.
    """
    if ring_k % 2 or ring_k < 2 or ring_k >= n:
        raise ValueError(f"ring_k must be even with 2 <= ring_k < n, got {ring_k}")
    if not 0.0 <= beta <= 1.0:
        raise ValueError(f"beta must lie in [0, 1], got {beta}")

    def build(s):
        rng = np.random.default_rng(s)
        nbrs = [set() for _ in range(n)]
        for u in range(n):
            for j in range(1, ring_k // 2 + 1):
                v = (u + j) % n
                nbrs[u].add(v)
                nbrs[v].add(u)
        for j in range(1, ring_k // 2 + 1):
            for u in range(n):
                v = (u + j) % n
                if v not in nbrs[u] or rng.random() >= beta:
                    continue
                if len(nbrs[u]) >= n - 1:
                    continue
                w = int(rng.integers(n))
                while w == u or w in nbrs[u]:
                    w = int(rng.integers(n))
                nbrs[u].discard(v)
                nbrs[v].discard(u)
                nbrs[u].add(w)
                nbrs[w].add(u)
        return Graph(n, [(u, v) for u in range(n) for v in nbrs[u] if u < v])

    return _retry_connected(build, seed, ensure_connected)


def gen_sbm(n, blocks=4, p_in=0.5, p_out=0.02, seed=0, ensure_connected=True):
    if not (0 <= p_out <= 1 and 0 <= p_in <= 1):
        raise ValueError("edge probabilities must lie in [0, 1]")
    if p_in < p_out:
        raise ValueError(f"need p_in >= p_out, got p_in={p_in}, p_out={p_out}")
    if not 1 <= blocks <= n:
        raise ValueError(f"need 1 <= blocks <= n, got {blocks}")
    membership = block_membership(n, blocks)

    def build(s):
        rng = np.random.default_rng(s)
        iu, ju = np.triu_indices(n, k=1)
        prob = np.where(membership[iu] == membership[ju], p_in, p_out)
        keep = rng.random(iu.size) < prob
        return Graph(n, list(zip(iu[keep].tolist(), ju[keep].tolist())))

    return _retry_connected(build, seed, ensure_connected)


def block_membership(n, blocks):
    return np.concatenate([np.full(len(part), b) for b, part in enumerate(np.array_split(np.arange(n), blocks))])


def gen_random_tree(n, seed=0):
    """Breadth-first random tree; each expanded node gets 2, 3 or 4 children."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    edges = []
    queue = deque([0])
    count = 1
    while count < n:
        parent = queue.popleft()
        kids = min(int(rng.integers(2, 5)), n - count)
        for _ in range(kids):
            edges.append((parent, count))
            queue.append(count)
            count += 1
    return Graph(n, edges)


def apsp(g):
    """All-pairs hop distances by BFS from every vertex."""
    adj = g.adjacency()
    d = np.full((g.n, g.n), -1.0)
    for s in range(g.n):
        d[s, s] = 0.0
        queue = deque([s])
        while queue:
            u = queue.popleft()
            for w in adj[u]:
                if d[s, w] < 0:
                    d[s, w] = d[s, u] + 1.0
                    queue.append(w)
        if (d[s] < 0).any():
            raise DisconnectedGraphError(s, int(np.flatnonzero(d[s] < 0)[0]))
    return d


def bfs_fragment(edges, size, seed=0):
    """Induced subgraph on the first ``size`` vertices of a BFS from a random start."""
    edges = _canonical_edges(edges)
    if size < 1:
        raise ValueError("size must be positive")
    vertices = sorted({v for e in edges for v in e})
    if len(vertices) < size:
        raise ValueError(f"graph has {len(vertices)} vertices, fewer than requested {size}")
    adj = {v: [] for v in vertices}
    for u, v in edges:
        adj[u].append(v)
        adj[v].append(u)
    for nbrs in adj.values():
        nbrs.sort()
    rng = np.random.default_rng(seed)
    for _ in range(FRAGMENT_ATTEMPTS):
        start = vertices[int(rng.integers(len(vertices)))]
        order = _bfs_order(adj, start)
        if len(order) >= size:
            break
    else:
        raise ValueError(f"no component with at least {size} vertices found in {FRAGMENT_ATTEMPTS} attempts")
    keep = {v: i for i, v in enumerate(order[:size])}
    sub = [(keep[u], keep[v]) for u, v in edges if u in keep and v in keep]
    return Graph(size, sub)


def load_edge_list(path):
    edges = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            parts = text.split()
            if len(parts) < 2:
                raise EdgeListParseError(lineno, text)
            try:
                u, v = int(parts[0]), int(parts[1])
            except ValueError:
                raise EdgeListParseError(lineno, text) from None
            edges.append((u, v))
    return _canonical_edges(edges)


def write_edge_list(g, path, comment=None):
    lines = []
    if comment:
        lines.append(f"# {comment}")
    lines.append(f"# vertices={g.n} edges={g.n_edges}")
    lines.extend(f"{u} {v}" for u, v in g.edges)
    Path(path).write_text("\n".join(lines) + "\n")


def graph_from_edge_list(edges):
    """Graph on vertices relabelled 0..n-1 in ascending original id."""
    vertices = sorted({v for e in edges for v in e})
    relabel = {v: i for i, v in enumerate(vertices)}
    return Graph(len(vertices), [(relabel[u], relabel[v]) for u, v in edges])


def write_metric_csv(d, path):
    with open(path, "w") as fh:
        for row in np.asarray(d):
            fh.write(",".join(repr(float(x)) for x in row) + "\n")


def read_metric_csv(path):
    return np.loadtxt(path, delimiter=",", ndmin=2)


def generate(model, n, seed=0, **params):
    """Dispatch by family name: ``ba``, ``ws``, ``sbm`` or ``tree``."""
    if model == "ba":
        return gen_barabasi_albert(n, params.get("attach", 2), seed)
    if model == "ws":
        return gen_watts_strogatz(n, params.get("ring_k", 4), params.get("beta", 0.3), seed)
    if model == "sbm":
        return gen_sbm(n, params.get("blocks", 4), params.get("p_in", 0.5), params.get("p_out", 0.02), seed)
    if model == "tree":
        return gen_random_tree(n, seed)
    raise ValueError(f"unknown graph model {model!r}")
