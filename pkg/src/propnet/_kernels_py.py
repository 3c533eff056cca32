"""Pure-Python versions of the graph kernels in ``_kernels.pyx``.

Used when the extension is not built, or when ``PROPNET_PURE_PYTHON=1``.
Inputs are the same CSR int64 arrays; outputs are identical.
"""

from collections import deque

import numpy as np


def bfs(indptr, indices, source):
    ptr = indptr.tolist()
    idx = indices.tolist()
    n = len(ptr) - 1
    dist = [-1] * n
    dist[source] = 0
    queue = deque([source])
    while queue:
        u = queue.popleft()
        du = dist[u] + 1
        for v in idx[ptr[u]:ptr[u + 1]]:
            if dist[v] < 0:
                dist[v] = du
                queue.append(v)
    return np.asarray(dist, dtype=np.int64)


def distance_sum(indptr, indices, sources):
    total = count = 0
    for s in np.asarray(sources).tolist():
        d = bfs(indptr, indices, s)
        reached = d > 0
        total += int(d[reached].sum())
        count += int(reached.sum())
    return total, count


def gradient_tree(indptr, indices, leader, priority):
    depth = bfs(indptr, indices, leader)
    ptr = indptr.tolist()
    idx = indices.tolist()
    dep = depth.tolist()
    pri = np.asarray(priority).tolist()
    parent = [-1] * len(dep)
    for v, dv in enumerate(dep):
        if v == leader or dv < 0:
            continue
        senders = [u for u in idx[ptr[v]:ptr[v + 1]] if dep[u] == dv - 1]
        parent[v] = min(senders, key=pri.__getitem__)
    return np.asarray(parent, dtype=np.int64), depth


def entry_points(indptr, indices, depth, priority, client, out_degree):
    nbrs = indices[indptr[client]:indptr[client + 1]]
    order = np.lexsort((np.asarray(priority)[nbrs], np.asarray(depth)[nbrs]))
    return nbrs[order[:out_degree]]


def forward_transaction(indptr, indices, parent, depth, priority, client, leader, out_degree, failed):
    entries = entry_points(indptr, indices, depth, priority, client, out_degree).tolist()
    seen = {client}
    visited, messages, path_len = 1, len(entries), -1
    delivered = False
    current = [(e, e) for e in entries]
    while current:
        nxt = []
        for node, origin in current:
            if node in seen:
                continue
            seen.add(node)
            visited += 1
            if node == leader:
                if not delivered:
                    delivered = True
                    path_len = int(depth[origin]) + 1
                continue
            if failed[node]:
                continue
            messages += 1
            nxt.append((int(parent[node]), origin))
        current = nxt
    return visited, messages, delivered, path_len
