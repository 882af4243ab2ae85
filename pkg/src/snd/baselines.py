"""Competing distances and prediction baselines."""
from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .netcore import Network, NetworkState, ValidationError


def _ops(x) -> np.ndarray:
    return x.opinions if isinstance(x, NetworkState) else np.asarray(x)


def hamming(P, Q) -> int:
    a, b = _ops(P), _ops(Q)
    if a.shape != b.shape:
        raise ValidationError("states differ in length")
    return int(np.count_nonzero(a != b))


def _sym_adjacency(network: Network) -> sp.csr_matrix:
    n = network.n
    a = sp.coo_matrix((np.ones(network.m), (network.src, network.dst)), shape=(n, n)).tocsr()
    a = ((a + a.T) > 0).astype(np.float64)
    return a.tocsr()


def laplacian(network: Network) -> sp.csr_matrix:
    """Unweighted Laplacian of the symmetrized network."""
    a = _sym_adjacency(network)
    return (sp.diags(np.asarray(a.sum(axis=1)).ravel()) - a).tocsr()


def quad_form(P, Q, L) -> float:
    x = (_ops(P) - _ops(Q)).astype(np.float64)
    val = float(x @ (L @ x))
    return float(np.sqrt(max(val, 0.0)))


def contention(state, network: Network) -> np.ndarray:
    """Opinion minus the mean opinion of active in-neighbours (0 if none)."""
    ops = _ops(state).astype(np.float64)
    src, dst = network.src, network.dst
    active = ops[src] != 0
    cnt = np.bincount(dst[active], minlength=network.n).astype(np.float64)
    tot = np.bincount(dst[active], weights=ops[src][active], minlength=network.n)
    out = np.zeros(network.n)
    has = cnt > 0
    out[has] = ops[has] - tot[has] / cnt[has]
    return out


def walk_dist(P, Q, network: Network) -> float:
    return float(np.abs(contention(P, network) - contention(Q, network)).sum() / network.n)


# ---------------------------------------------------------------------------
# prediction baselines; targets are given as node ids whose opinion is hidden


def nhood_voting_predict(state, targets, network: Network, rng_seed) -> NetworkState:
    """Each target copies the opinion of a random active in-neighbour."""
    rng = np.random.default_rng(rng_seed)
    ops = np.array(_ops(state), dtype=np.int8)
    targets = np.asarray(targets, np.int64)
    ops[targets] = 0
    csr = network.in_csr
    for t in targets:
        nb = csr.indices[csr.indptr[t] : csr.indptr[t + 1]]
        votes = ops[nb]
        votes = votes[votes != 0]
        if votes.size == 0:
            ops[t] = rng.choice((-1, 1))
        else:
            pos = np.count_nonzero(votes == 1)
            ops[t] = 1 if rng.random() < pos / votes.size else -1
    return NetworkState(ops)


def label_propagation(network: Network, max_rounds: int = 100) -> np.ndarray:
    """Synchronous label propagation on the symmetrized graph.

    Each node adopts the most frequent label among its neighbours; ties keep
    the current label when it is among the winners, otherwise the smallest.
    """
    a = _sym_adjacency(network).tocsr()
    n = network.n
    labels = np.arange(n)
    indptr, indices = a.indptr, a.indices
    for _ in range(max_rounds):
        new = labels.copy()
        for v in range(n):
            nb = labels[indices[indptr[v] : indptr[v + 1]]]
            if nb.size == 0:
                continue
            vals, counts = np.unique(nb, return_counts=True)
            winners = vals[counts == counts.max()]
            new[v] = labels[v] if labels[v] in winners else winners.min()
        if np.array_equal(new, labels):
            break
        labels = new
    _, labels = np.unique(labels, return_inverse=True)
    return labels


def community_lp_predict(state, targets, network: Network, rng_seed, communities=None) -> NetworkState:
    rng = np.random.default_rng(rng_seed)
    ops = np.array(_ops(state), dtype=np.int8)
    targets = np.asarray(targets, np.int64)
    ops[targets] = 0
    comm = label_propagation(network) if communities is None else np.asarray(communities)
    k = int(comm.max()) + 1
    pos = np.bincount(comm, weights=(ops == 1), minlength=k)
    neg = np.bincount(comm, weights=(ops == -1), minlength=k)
    for t in targets:
        c = comm[t]
        if pos[c] > neg[c]:
            ops[t] = 1
        elif neg[c] > pos[c]:
            ops[t] = -1
        else:
            ops[t] = rng.choice((-1, 1))
    return NetworkState(ops)
