from collections import deque

import networkx as nx
import pytest

from propnet.topology import GenParams, generate_hybrid


def oracle_bfs(n, edges, source):
    adj = [[] for _ in range(n)]
    for u, v in edges:
        adj[u].append(v)
        adj[v].append(u)
    dist = [-1] * n
    dist[source] = 0
    q = deque([source])
    while q:
        u = q.popleft()
        for v in adj[u]:
            if dist[v] < 0:
                dist[v] = dist[u] + 1
                q.append(v)
    return dist


def to_nx(g):
    G = nx.Graph()
    G.add_nodes_from(range(g.n_nodes))
    G.add_edges_from(g.edges.tolist())
    return G


@pytest.fixture(scope="session")
def hybrid_1000():
    return generate_hybrid(GenParams(1000, 8, rng_seed=7))


@pytest.fixture(scope="session")
def hybrid_200():
    return generate_hybrid(GenParams(200, 4, rng_seed=3))


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
