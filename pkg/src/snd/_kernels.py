"""Compiled inner loops: binary-heap Dijkstra and cost-scaling push-relabel.

Everything here works on plain int64 numpy arrays so the kernels can be
jitted by numba. Callers in ``grounddist`` and ``transport`` own validation.
"""
import numpy as np
from numba import njit

UNREACHED = -1


@njit(cache=True, nogil=True)
def _heap_push(hd, hv, size, d, v):
    i = size
    while i > 0:
        parent = (i - 1) >> 1
        pd = hd[parent]
        if pd < d or (pd == d and hv[parent] <= v):
            break
        hd[i] = pd
        hv[i] = hv[parent]
        i = parent
    hd[i] = d
    hv[i] = v
    return size + 1


@njit(cache=True, nogil=True)
def _heap_pop(hd, hv, size):
    # caller reads hd[0], hv[0] before popping
    size -= 1
    d = hd[size]
    v = hv[size]
    i = 0
    while True:
        c = 2 * i + 1
        if c >= size:
            break
        if c + 1 < size and (hd[c + 1] < hd[c] or (hd[c + 1] == hd[c] and hv[c + 1] < hv[c])):
            c += 1
        if d < hd[c] or (d == hd[c] and v <= hv[c]):
            break
        hd[i] = hd[c]
        hv[i] = hv[c]
        i = c
    hd[i] = d
    hv[i] = v
    return size


@njit(cache=True, nogil=True)
def _dijkstra(indptr, indices, weights, source, dist, done, hd, hv, target_mask, n_targets):
    """Single-source run; ``dist`` must be UNREACHED everywhere on entry.

    Stops early once ``n_targets`` nodes flagged in ``target_mask`` are settled
    (pass n_targets <= 0 to settle everything reachable).
    """
    size = _heap_push(hd, hv, 0, 0, source)
    dist[source] = 0
    remaining = n_targets
    while size > 0:
        d = hd[0]
        u = hv[0]
        size = _heap_pop(hd, hv, size)
        if done[u]:
            continue
        done[u] = True
        if n_targets > 0 and target_mask[u]:
            remaining -= 1
            if remaining == 0:
                break
        for e in range(indptr[u], indptr[u + 1]):
            v = indices[e]
            if done[v]:
                continue
            nd = d + weights[e]
            if dist[v] == UNREACHED or nd < dist[v]:
                dist[v] = nd
                size = _heap_push(hd, hv, size, nd, v)


@njit(cache=True, nogil=True)
def sssp(indptr, indices, weights, source):
    n = indptr.shape[0] - 1
    m = indices.shape[0]
    dist = np.full(n, UNREACHED, np.int64)
    done = np.zeros(n, np.bool_)
    hd = np.empty(m + 1, np.int64)
    hv = np.empty(m + 1, np.int64)
    mask = np.zeros(n, np.bool_)
    _dijkstra(indptr, indices, weights, source, dist, done, hd, hv, mask, 0)
    return dist


@njit(cache=True, nogil=True)
def sssp_rows(indptr, indices, weights, sources, targets, sentinel):
    """Distances from each of ``sources`` to each of ``targets`` (k x t)."""
    n = indptr.shape[0] - 1
    m = indices.shape[0]
    k = sources.shape[0]
    t = targets.shape[0]
    out = np.empty((k, t), np.int64)
    dist = np.full(n, UNREACHED, np.int64)
    done = np.zeros(n, np.bool_)
    hd = np.empty(m + 1, np.int64)
    hv = np.empty(m + 1, np.int64)
    mask = np.zeros(n, np.bool_)
    n_unique = 0
    for j in range(t):
        if not mask[targets[j]]:
            mask[targets[j]] = True
            n_unique += 1
    for r in range(k):
        _dijkstra(indptr, indices, weights, sources[r], dist, done, hd, hv, mask, n_unique)
        for j in range(t):
            dj = dist[targets[j]]
            out[r, j] = sentinel if (dj == UNREACHED or not done[targets[j]]) else dj
        dist[:] = UNREACHED
        done[:] = False
    return out


@njit(cache=True, nogil=True)
def multi_source_float(indptr, indices, weights, sources):
    """Nearest-source distances with float weights; inf where unreachable."""
    n = indptr.shape[0] - 1
    dist = np.full(n, np.inf)
    done = np.zeros(n, np.bool_)
    # simple O(n^2)-free variant: float keys in a separate heap
    m = indices.shape[0]
    hd = np.empty(m + sources.shape[0] + 1, np.float64)
    hv = np.empty(m + sources.shape[0] + 1, np.int64)
    size = 0
    for s in sources:
        if dist[s] > 0.0:
            dist[s] = 0.0
            size = _fheap_push(hd, hv, size, 0.0, s)
    while size > 0:
        d = hd[0]
        u = hv[0]
        size = _fheap_pop(hd, hv, size)
        if done[u]:
            continue
        done[u] = True
        for e in range(indptr[u], indptr[u + 1]):
            v = indices[e]
            nd = d + weights[e]
            if nd < dist[v]:
                dist[v] = nd
                size = _fheap_push(hd, hv, size, nd, v)
    return dist


@njit(cache=True, nogil=True)
def _fheap_push(hd, hv, size, d, v):
    i = size
    while i > 0:
        parent = (i - 1) >> 1
        if hd[parent] <= d:
            break
        hd[i] = hd[parent]
        hv[i] = hv[parent]
        i = parent
    hd[i] = d
    hv[i] = v
    return size + 1


@njit(cache=True, nogil=True)
def _fheap_pop(hd, hv, size):
    size -= 1
    d = hd[size]
    v = hv[size]
    i = 0
    while True:
        c = 2 * i + 1
        if c >= size:
            break
        if c + 1 < size and hd[c + 1] < hd[c]:
            c += 1
        if d <= hd[c]:
            break
        hd[i] = hd[c]
        hv[i] = hv[c]
        i = c
    hd[i] = d
    hv[i] = v
    return size


# ---------------------------------------------------------------------------
# Transportation problem: Goldberg-Tarjan cost scaling on a dense bipartite
# network. Suppliers are nodes 0..k-1, consumers k..k+N-1. Arc i->j has
# capacity min(supply_i, demand_j); reduced cost c'(i,j) + p_i - p_j.


@njit(cache=True, nogil=True)
def _refine(supply, demand, cost, scale, cap, flow, ps, pc, es, ec, eps, queue, inq, cur_s, cur_c):
    k, N = cost.shape
    nn = k + N
    for i in range(k):
        for j in range(N):
            rc = cost[i, j] * scale + ps[i] - pc[j]
            if rc < 0:
                flow[i, j] = cap[i, j]
            elif rc > 0:
                flow[i, j] = 0
    for j in range(N):
        ec[j] = -demand[j]
    for i in range(k):
        s = 0
        for j in range(N):
            f = flow[i, j]
            s += f
            ec[j] += f
        es[i] = supply[i] - s

    head = 0
    tail = 0
    qcap = queue.shape[0]
    for i in range(k):
        cur_s[i] = 0
        inq[i] = False
        if es[i] > 0:
            queue[tail] = i
            tail = (tail + 1) % qcap
            inq[i] = True
    for j in range(N):
        cur_c[j] = 0
        inq[k + j] = False
        if ec[j] > 0:
            queue[tail] = k + j
            tail = (tail + 1) % qcap
            inq[k + j] = True

    while head != tail:
        v = queue[head]
        head = (head + 1) % qcap
        inq[v] = False
        if v < k:
            i = v
            while es[i] > 0:
                j = cur_s[i]
                while j < N:
                    if flow[i, j] < cap[i, j] and cost[i, j] * scale + ps[i] - pc[j] < 0:
                        delta = cap[i, j] - flow[i, j]
                        if es[i] < delta:
                            delta = es[i]
                        flow[i, j] += delta
                        es[i] -= delta
                        before = ec[j]
                        ec[j] += delta
                        if before <= 0 and ec[j] > 0 and not inq[k + j]:
                            queue[tail] = k + j
                            tail = (tail + 1) % qcap
                            inq[k + j] = True
                        if es[i] == 0:
                            break
                    j += 1
                if es[i] == 0:
                    cur_s[i] = j
                    break
                # relabel: largest price keeping every residual arc eps-optimal
                best = np.iinfo(np.int64).min
                for jj in range(N):
                    if flow[i, jj] < cap[i, jj]:
                        cand = pc[jj] - cost[i, jj] * scale
                        if cand > best:
                            best = cand
                ps[i] = best - eps
                cur_s[i] = 0
        else:
            j = v - k
            while ec[j] > 0:
                i = cur_c[j]
                while i < k:
                    if flow[i, j] > 0 and -cost[i, j] * scale + pc[j] - ps[i] < 0:
                        delta = flow[i, j]
                        if ec[j] < delta:
                            delta = ec[j]
                        flow[i, j] -= delta
                        ec[j] -= delta
                        before = es[i]
                        es[i] += delta
                        if before <= 0 and es[i] > 0 and not inq[i]:
                            queue[tail] = i
                            tail = (tail + 1) % qcap
                            inq[i] = True
                        if ec[j] == 0:
                            break
                    i += 1
                if ec[j] == 0:
                    cur_c[j] = i
                    break
                best = np.iinfo(np.int64).min
                for ii in range(k):
                    if flow[ii, j] > 0:
                        cand = ps[ii] + cost[ii, j] * scale
                        if cand > best:
                            best = cand
                pc[j] = best - eps
                cur_c[j] = 0
    return nn


@njit(cache=True, nogil=True)
def cost_scaling_transport(supply, demand, cost, alpha):
    """Exact min-cost flow for a balanced transportation problem.

    ``supply`` (k,), ``demand`` (N,) and ``cost`` (k, N) are nonnegative
    int64 with ``supply.sum() == demand.sum()``. Returns the (k, N) flow.
    """
    k, N = cost.shape
    scale = k + N + 1
    cap = np.empty((k, N), np.int64)
    cmax = 0
    for i in range(k):
        for j in range(N):
            cap[i, j] = supply[i] if supply[i] < demand[j] else demand[j]
            if cost[i, j] > cmax:
                cmax = cost[i, j]
    flow = np.zeros((k, N), np.int64)
    ps = np.zeros(k, np.int64)
    pc = np.zeros(N, np.int64)
    es = np.zeros(k, np.int64)
    ec = np.zeros(N, np.int64)
    queue = np.empty(k + N + 1, np.int64)
    inq = np.zeros(k + N, np.bool_)
    cur_s = np.zeros(k, np.int64)
    cur_c = np.zeros(N, np.int64)
    eps = cmax * scale
    if eps < 1:
        eps = 1
    while True:
        eps = eps // alpha
        if eps < 1:
            eps = 1
        _refine(supply, demand, cost, scale, cap, flow, ps, pc, es, ec, eps, queue, inq, cur_s, cur_c)
        if eps == 1:
            break
    return flow
