"""Network graphs: hybrid Erdos-Renyi + preferential-attachment generation,
inspection helpers, node capacities and the edge-list file format."""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from propnet import kernels
from propnet.errors import DomainError
from propnet.seeding import as_generator, substream


class NetworkGraph:
    """Static undirected graph on nodes ``0..n_nodes-1`` with capacities.

    Edges are stored once as ``(u, v)`` with ``u < v``, sorted.  A CSR view
    (``indptr``, ``indices``) with sorted neighbour lists backs the kernels.
    """

    def __init__(self, n_nodes: int, edges: Iterable[tuple[int, int]], capacity=None, *,
                 check_connected: bool = False):
        if n_nodes < 1:
            raise DomainError("a graph needs at least one node")
        arr = np.asarray(list(edges) if not isinstance(edges, np.ndarray) else edges, dtype=np.int64)
        arr = arr.reshape(-1, 2)
        if arr.size and (arr.min() < 0 or arr.max() >= n_nodes):
            raise DomainError("edge endpoint out of range")
        if np.any(arr[:, 0] == arr[:, 1]):
            raise DomainError("self-loops are not allowed")
        arr = np.sort(arr, axis=1)
        uniq = np.unique(arr, axis=0)
        if len(uniq) != len(arr):
            raise DomainError("duplicate edges are not allowed")
        self.n_nodes = int(n_nodes)
        self.edges = uniq
        both = np.concatenate([uniq, uniq[:, ::-1]]) if len(uniq) else np.zeros((0, 2), dtype=np.int64)
        order = np.lexsort((both[:, 1], both[:, 0]))
        both = both[order]
        counts = np.bincount(both[:, 0], minlength=n_nodes)
        self.indptr = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)
        self.indices = np.ascontiguousarray(both[:, 1], dtype=np.int64)
        if capacity is None:
            capacity = np.full(n_nodes, 1.0 / n_nodes)
        capacity = np.asarray(capacity, dtype=float)
        if capacity.shape != (n_nodes,):
            raise DomainError("need one capacity per node")
        if np.any(capacity < 0) or not np.any(capacity > 0):
            raise DomainError("capacities must be non-negative with at least one positive")
        self.capacity = capacity
        if check_connected and not is_connected(self):
            raise DomainError("graph is not connected")

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def neighbors(self, u: int) -> np.ndarray:
        return self.indices[self.indptr[u]:self.indptr[u + 1]]

    def degree(self) -> np.ndarray:
        return np.diff(self.indptr)

    def adjacency_lists(self) -> list[list[int]]:
        ptr = self.indptr.tolist()
        idx = self.indices.tolist()
        return [idx[ptr[u]:ptr[u + 1]] for u in range(self.n_nodes)]

    def with_capacity(self, capacity) -> "NetworkGraph":
        return NetworkGraph(self.n_nodes, self.edges, capacity)

    def __eq__(self, other):
        return (isinstance(other, NetworkGraph) and self.n_nodes == other.n_nodes
                and np.array_equal(self.edges, other.edges) and np.array_equal(self.capacity, other.capacity))

    def __repr__(self):
        return f"NetworkGraph(n_nodes={self.n_nodes}, n_edges={self.n_edges})"


@dataclass(frozen=True)
class GenParams:
    n_total: int
    n_con: int
    er_seed_size: int = 50
    er_edge_prob: float = 0.5
    rng_seed: int = 0

    def __post_init__(self):
        if self.er_seed_size < 1 or self.n_total < self.er_seed_size:
            raise DomainError(f"n_total ({self.n_total}) must be >= er_seed_size ({self.er_seed_size})")
        if not 0 < self.er_edge_prob <= 1:
            raise DomainError("er_edge_prob must lie in (0, 1]")
        if self.n_con < 1:
            raise DomainError("n_con must be positive")
        if self.n_con > self.er_seed_size:
            raise DomainError(f"n_con ({self.n_con}) exceeds the {self.er_seed_size} seed nodes")


def _er_edges(n: int, p: float, rng: np.random.Generator) -> np.ndarray:
    iu, ju = np.triu_indices(n, k=1)
    keep = rng.random(len(iu)) < p
    return np.stack([iu[keep], ju[keep]], axis=1)


def _connected_edges(n: int, edges: np.ndarray) -> bool:
    return is_connected(NetworkGraph(n, edges))


def generate_hybrid(params: GenParams) -> NetworkGraph:
    """ER(p) seed graph, regenerated until connected, grown by preferential
    attachment.  Each new node links to ``n_con`` distinct existing nodes
    drawn with probability proportional to degree; degrees are refreshed
    after the whole batch of picks for a node."""
    m0, m = params.er_seed_size, params.n_con
    attempt = 0
    while True:
        er = _er_edges(m0, params.er_edge_prob, substream(params.rng_seed, 0, attempt))
        if m0 == 1 or _connected_edges(m0, er):
            break
        attempt += 1
    rng = substream(params.rng_seed, 1)
    edges = [tuple(e) for e in er.tolist()]
    # each node appears once per incident edge
    repeated = [u for e in edges for u in e]
    if not repeated:
        repeated = list(range(m0))
    for new in range(m0, params.n_total):
        if m > new:
            raise DomainError(f"n_con ({m}) exceeds the {new} existing nodes")
        targets: list[int] = []
        chosen = set()
        while len(targets) < m:
            for pick in rng.integers(0, len(repeated), size=2 * m).tolist():
                t = repeated[pick]
                if t not in chosen:
                    chosen.add(t)
                    targets.append(t)
                    if len(targets) == m:
                        break
        for t in targets:
            edges.append((t, new))
            repeated.append(t)
            repeated.append(new)
    return NetworkGraph(params.n_total, edges)


def is_connected(g: NetworkGraph, removed: Iterable[int] = ()) -> bool:
    removed = set(removed)
    alive = [u for u in range(g.n_nodes) if u not in removed]
    if len(alive) <= 1:
        return True
    adj = g.adjacency_lists()
    start = alive[0]
    seen = {start} | removed
    stack = [start]
    while stack:
        u = stack.pop()
        for v in adj[u]:
            if v not in seen:
                seen.add(v)
                stack.append(v)
    return len(seen) == g.n_nodes


def articulation_points(g: NetworkGraph) -> set[int]:
    """Cut vertices via an iterative low-link DFS."""
    adj = g.adjacency_lists()
    n = g.n_nodes
    disc = [-1] * n
    low = [0] * n
    cut = set()
    timer = 0
    for root in range(n):
        if disc[root] >= 0:
            continue
        disc[root] = low[root] = timer
        timer += 1
        root_children = 0
        stack = [(root, -1, iter(adj[root]))]
        while stack:
            u, par, it = stack[-1]
            advanced = False
            for v in it:
                if disc[v] < 0:
                    disc[v] = low[v] = timer
                    timer += 1
                    if u == root:
                        root_children += 1
                    stack.append((v, u, iter(adj[v])))
                    advanced = True
                    break
                if v != par:
                    low[u] = min(low[u], disc[v])
            if advanced:
                continue
            stack.pop()
            if stack:
                p = stack[-1][0]
                low[p] = min(low[p], low[u])
                if p != root and low[u] >= disc[p]:
                    cut.add(p)
        if root_children > 1:
            cut.add(root)
    return cut


def is_k_connected(g: NetworkGraph, k: int) -> bool:
    """True iff no set of fewer than ``k`` vertices disconnects ``g`` (and
    ``g`` has more than ``k`` nodes, so complete graphs behave)."""
    if k < 1:
        raise DomainError("k must be positive")
    if g.n_nodes <= k:
        return False
    if not is_connected(g):
        return False
    if k == 1:
        return True
    if k == 2:
        return not articulation_points(g)
    if k == 3:
        for u in range(g.n_nodes):
            sub, _ = _remove_node(g, u)
            if articulation_points(sub):
                return False
        return True
    import networkx as nx

    nxg = nx.Graph()
    nxg.add_nodes_from(range(g.n_nodes))
    nxg.add_edges_from(g.edges.tolist())
    return nx.node_connectivity(nxg) >= k


def _remove_node(g: NetworkGraph, u: int) -> tuple[NetworkGraph, np.ndarray]:
    keep = np.array([x for x in range(g.n_nodes) if x != u], dtype=np.int64)
    relabel = np.full(g.n_nodes, -1, dtype=np.int64)
    relabel[keep] = np.arange(len(keep))
    mask = (g.edges[:, 0] != u) & (g.edges[:, 1] != u)
    return NetworkGraph(len(keep), relabel[g.edges[mask]]), keep


def bfs_distances(g: NetworkGraph, source: int) -> np.ndarray:
    """Hop distances from ``source``; -1 marks unreachable nodes."""
    if not 0 <= source < g.n_nodes:
        raise DomainError(f"source {source} out of range")
    return kernels.bfs(g.indptr, g.indices, int(source))


def avg_shortest_path(g: NetworkGraph, sample_pairs: int = 0, rng_seed=0) -> float:
    """Mean hop distance over sampled ordered pairs; all pairs when
    ``sample_pairs`` is 0."""
    n = g.n_nodes
    if n < 2:
        raise DomainError("need at least two nodes")
    if sample_pairs < 0:
        raise DomainError("sample_pairs must be >= 0")
    if sample_pairs == 0:
        total, count = kernels.distance_sum(g.indptr, g.indices, np.arange(n, dtype=np.int64))
        return total / count
    rng = as_generator(rng_seed)
    src = rng.integers(0, n, size=sample_pairs)
    dst = (src + rng.integers(1, n, size=sample_pairs)) % n
    total = 0
    for s in np.unique(src):
        d = kernels.bfs(g.indptr, g.indices, int(s))
        total += int(d[dst[src == s]].sum())
    return total / sample_pairs


def assign_capacities(g: NetworkGraph, scheme: str = "uniform", rng_seed=0, *, alpha: float = 1.5) -> NetworkGraph:
    """Return a copy of ``g`` with positive capacities summing to one.

    ``scheme`` is ``uniform``, ``degree`` (proportional to degree) or
    ``pareto`` (classical Pareto with shape ``alpha``, minimum 1); a string
    ``"pareto(2.0)"`` sets the shape inline.
    """
    name = scheme.strip().lower()
    if name.startswith("pareto(") and name.endswith(")"):
        alpha = float(name[len("pareto("):-1])
        name = "pareto"
    n = g.n_nodes
    if name == "uniform":
        cap = np.full(n, 1.0 / n)
    elif name in ("degree", "degree-proportional"):
        deg = g.degree().astype(float)
        if np.any(deg == 0):
            raise DomainError("degree-proportional capacities need every node to have an edge")
        cap = deg / deg.sum()
    elif name == "pareto":
        if alpha <= 0:
            raise DomainError("pareto shape must be positive")
        raw = as_generator(rng_seed).pareto(alpha, size=n) + 1.0
        cap = raw / raw.sum()
    else:
        raise DomainError(f"unknown capacity scheme {scheme!r}")
    return g.with_capacity(cap)


def capacities_path(graph_path) -> Path:
    p = Path(graph_path)
    return p.with_name(p.stem + ".capacities.json")


def write_graph(g: NetworkGraph, path, meta: Optional[dict] = None) -> Path:
    """Write ``N <n>`` then one ``u v`` line per edge; capacities go to the
    sibling ``<stem>.capacities.json``."""
    path = Path(path)
    lines = [f"N {g.n_nodes}"] + [f"{u} {v}" for u, v in g.edges.tolist()]
    path.write_text("\n".join(lines) + "\n")
    doc = {"capacities": g.capacity.tolist()}
    if meta:
        doc["meta"] = meta
    cpath = capacities_path(path)
    cpath.write_text(json.dumps(doc, sort_keys=True) + "\n")
    return cpath


def read_graph(path) -> tuple[NetworkGraph, dict]:
    """Load a graph file and, when present, its capacities sibling.

    Returns the graph and the ``meta`` mapping (empty when absent).
    """
    path = Path(path)
    lines = [ln.split() for ln in path.read_text().splitlines() if ln.strip() and not ln.startswith("#")]
    if not lines or lines[0][0] != "N" or len(lines[0]) != 2:
        raise DomainError(f"{path}: first line must be 'N <n_nodes>'")
    n = int(lines[0][1])
    try:
        edges = [(int(a), int(b)) for a, b in lines[1:]]
    except ValueError as exc:
        raise DomainError(f"{path}: malformed edge line") from exc
    cap, meta = None, {}
    cpath = capacities_path(path)
    if cpath.exists():
        doc = json.loads(cpath.read_text())
        cap = doc["capacities"]
        meta = doc.get("meta", {})
    return NetworkGraph(n, edges, cap, check_connected=True), meta


def path_graph(n: int) -> NetworkGraph:
    return NetworkGraph(n, [(i, i + 1) for i in range(n - 1)])


def cycle_graph(n: int) -> NetworkGraph:
    return NetworkGraph(n, [(i, (i + 1) % n) for i in range(n)])


def star_graph(n: int) -> NetworkGraph:
    """Centre 0 joined to leaves ``1..n-1``."""
    return NetworkGraph(n, [(0, i) for i in range(1, n)])


def complete_graph(n: int) -> NetworkGraph:
    return NetworkGraph(n, list(itertools.combinations(range(n), 2)))


def ba_path_length_scale(n: int) -> float:
    """``ln N / ln ln N``, the growth order of mean path length."""
    if n < 3:
        raise DomainError("need n >= 3 for the double logarithm")
    return math.log(n) / math.log(math.log(n))
