# cython: language_level=3, boundscheck=False, wraparound=False, initializedcheck=False, cdivision=True
"""Compiled graph kernels.  Signatures mirror ``propnet._kernels_py``."""

import numpy as np
cimport numpy as cnp

cnp.import_array()

ctypedef cnp.int64_t i64


def bfs(const i64[::1] indptr, const i64[::1] indices, i64 source):
    cdef i64 n = indptr.shape[0] - 1
    dist_arr = np.full(n, -1, dtype=np.int64)
    cdef i64[::1] dist = dist_arr
    cdef i64[::1] queue = np.empty(n, dtype=np.int64)
    cdef i64 head = 0, tail = 0, u, v, j
    dist[source] = 0
    queue[tail] = source
    tail += 1
    while head < tail:
        u = queue[head]
        head += 1
        for j in range(indptr[u], indptr[u + 1]):
            v = indices[j]
            if dist[v] < 0:
                dist[v] = dist[u] + 1
                queue[tail] = v
                tail += 1
    return dist_arr


def distance_sum(const i64[::1] indptr, const i64[::1] indices, const i64[::1] sources):
    """Sum and count of finite distances from each source to every node."""
    cdef i64 n = indptr.shape[0] - 1
    cdef i64[::1] dist = np.empty(n, dtype=np.int64)
    cdef i64[::1] queue = np.empty(n, dtype=np.int64)
    cdef i64 head, tail, u, v, j, s, idx
    cdef i64 total = 0, count = 0
    for idx in range(sources.shape[0]):
        s = sources[idx]
        for j in range(n):
            dist[j] = -1
        dist[s] = 0
        head = 0
        tail = 1
        queue[0] = s
        while head < tail:
            u = queue[head]
            head += 1
            for j in range(indptr[u], indptr[u + 1]):
                v = indices[j]
                if dist[v] < 0:
                    dist[v] = dist[u] + 1
                    total += dist[v]
                    count += 1
                    queue[tail] = v
                    tail += 1
    return total, count


def gradient_tree(const i64[::1] indptr, const i64[::1] indices, i64 leader, const i64[::1] priority):
    """First-arrival parents under unit hop delay.

    Every node at depth d sends at time d + 1; a node hearing several
    senders at once keeps the one with the lowest priority value.
    """
    cdef i64 n = indptr.shape[0] - 1
    depth_arr = bfs(indptr, indices, leader)
    cdef i64[::1] depth = depth_arr
    parent_arr = np.full(n, -1, dtype=np.int64)
    cdef i64[::1] parent = parent_arr
    cdef i64 v, u, j, best
    for v in range(n):
        if v == leader or depth[v] < 0:
            continue
        best = -1
        for j in range(indptr[v], indptr[v + 1]):
            u = indices[j]
            if depth[u] == depth[v] - 1 and (best < 0 or priority[u] < priority[best]):
                best = u
        parent[v] = best
    return parent_arr, depth_arr


cdef inline bint _before(i64 a, i64 b, const i64[::1] depth, const i64[::1] priority):
    return depth[a] < depth[b] or (depth[a] == depth[b] and priority[a] < priority[b])


cdef i64 _select_entries(const i64[::1] indptr, const i64[::1] indices, const i64[::1] depth,
                         const i64[::1] priority, i64 client, i64 out_degree, i64[::1] out):
    # partial selection sort: out_degree is small next to the degree
    cdef i64 lo = indptr[client], deg = indptr[client + 1] - indptr[client]
    cdef i64 m = out_degree if out_degree < deg else deg
    cdef i64 j, t, best, tmp
    for j in range(deg):
        out[j] = indices[lo + j]
    for j in range(m):
        best = j
        for t in range(j + 1, deg):
            if _before(out[t], out[best], depth, priority):
                best = t
        tmp = out[j]
        out[j] = out[best]
        out[best] = tmp
    return m


def entry_points(const i64[::1] indptr, const i64[::1] indices, const i64[::1] depth,
                 const i64[::1] priority, i64 client, i64 out_degree):
    cdef i64[::1] buf = np.empty(indptr[client + 1] - indptr[client], dtype=np.int64)
    cdef i64 m = _select_entries(indptr, indices, depth, priority, client, out_degree, buf)
    return np.asarray(buf[:m]).copy()


def forward_transaction(const i64[::1] indptr, const i64[::1] indices, const i64[::1] parent,
                        const i64[::1] depth, const i64[::1] priority, i64 client, i64 leader,
                        i64 out_degree, const cnp.uint8_t[::1] failed):
    """Walk copies of one transaction towards the leader, one hop per tick.

    Returns (nodes_visited, messages_sent, delivered, path_len); path_len is
    -1 when nothing reached the leader.
    """
    cdef i64 n = indptr.shape[0] - 1
    cdef i64 deg = indptr[client + 1] - indptr[client]
    # copies never multiply, so m slots per tick suffice
    cdef i64[::1] work = np.empty(deg + 3 * (out_degree if out_degree < deg else deg) + 1, dtype=np.int64)
    cdef i64 m = _select_entries(indptr, indices, depth, priority, client, out_degree, work)
    cdef i64[::1] cur = work[deg:deg + m]
    cdef i64[::1] cur_origin = work[deg + m:deg + 2 * m]
    cdef i64[::1] nxt = work[deg + 2 * m:deg + 3 * m]
    cdef i64[::1] tmp
    cdef cnp.uint8_t[::1] seen = np.zeros(n, dtype=np.uint8)
    cdef i64 ncur = 0, nnxt, idx, node, origin
    cdef i64 visited = 1, messages = m, path_len = -1
    cdef bint delivered = False
    seen[client] = 1
    for idx in range(m):
        cur[idx] = work[idx]
        cur_origin[idx] = work[idx]
    ncur = m
    while ncur > 0:
        nnxt = 0
        for idx in range(ncur):
            node = cur[idx]
            if seen[node]:
                continue
            seen[node] = 1
            visited += 1
            if node == leader:
                if not delivered:
                    delivered = True
                    path_len = depth[cur_origin[idx]] + 1
                continue
            if failed[node]:
                continue
            messages += 1
            nxt[nnxt] = parent[node]
            cur_origin[nnxt] = cur_origin[idx]
            nnxt += 1
        tmp = cur
        cur = nxt
        nxt = tmp
        ncur = nnxt
    return visited, messages, delivered, path_len
