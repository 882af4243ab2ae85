"""Social Network Distance between two opinion states.

SND is half the sum of four EMD-star terms: positive and negative opinion
parts, transported forward with the earlier state's ground distance and
backward with the later state's.

Two evaluation paths are provided. The dense path materializes the full
ground distance and the extended problem; it is the reference. The fast path
cancels unchanged bins, keeps only nonempty ones, and runs shortest paths
from the smaller side of the reduced problem only, using one bank per bin.
Both return exact rationals, so they can be compared with ``==``.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .grounddist import CostGraph, ModelConfig, build_cost_graph, dense_ground_distance, distance_rows
from .netcore import Network, NetworkState, ValidationError, opinion_part
from .transport import BankConfig, bank_capacities, emd_star_exact, integerize, solve_balanced_int

DEFAULT_BANK_GAMMA = 1


@dataclass(frozen=True)
class SndConfig:
    model: ModelConfig = field(default_factory=ModelConfig)
    bank_gamma: int = DEFAULT_BANK_GAMMA
    symmetric: bool = True
    # dense path only: cluster labels per node, None for one bank per bin
    clusters: np.ndarray | None = None
    banks_per_cluster: int = 1

    def __post_init__(self):
        if int(self.bank_gamma) != self.bank_gamma or self.bank_gamma < 0:
            raise ValueError("bank_gamma must be a nonnegative integer")

    def bank_config(self, n: int) -> BankConfig:
        if self.clusters is None:
            return BankConfig.per_bin(n, self.bank_gamma)
        labels = np.asarray(self.clusters)
        n_c = int(labels.max()) + 1
        return BankConfig(labels, self.banks_per_cluster, np.full((n_c, self.banks_per_cluster), self.bank_gamma))


@dataclass(frozen=True, eq=False)
class ReducedProblem:
    """Transportation problem left after cancelling shared mass.

    Supplier and consumer entries refer to node ids; ``*_bank`` flags mark
    entries that are bank bins attached to that node.
    """

    supplier_nodes: np.ndarray
    supplier_bank: np.ndarray
    supplies: np.ndarray
    consumer_nodes: np.ndarray
    consumer_bank: np.ndarray
    demands: np.ndarray
    scale: int
    n_delta: int

    @property
    def empty(self) -> bool:
        return self.supplies.size == 0


def reduce(P, Q) -> ReducedProblem:
    """Cancel ``min(P_i, Q_i)`` at every bin, drop empty bins, attach per-bin banks."""
    (p, q), scale = integerize(P, Q)
    if p.size != q.size:
        raise ValueError("histograms differ in length")
    n = p.size
    bp, bq, factor = bank_capacities(p, q, np.arange(n), n, 1)
    p = p * factor
    q = q * factor
    common = np.minimum(p, q)
    p = p - common
    q = q - common
    sup = np.flatnonzero(p)
    con = np.flatnonzero(q)
    bsup = np.flatnonzero(bp)
    bcon = np.flatnonzero(bq)
    return ReducedProblem(
        supplier_nodes=np.concatenate([sup, bsup]),
        supplier_bank=np.concatenate([np.zeros(sup.size, bool), np.ones(bsup.size, bool)]),
        supplies=np.concatenate([p[sup], bp[bsup]]),
        consumer_nodes=np.concatenate([con, bcon]),
        consumer_bank=np.concatenate([np.zeros(con.size, bool), np.ones(bcon.size, bool)]),
        demands=np.concatenate([q[con], bq[bcon]]),
        scale=scale * factor,
        n_delta=int(sup.size + con.size),
    )


def _reduced_costs(red: ReducedProblem, cg: CostGraph, gamma: int) -> np.ndarray:
    su, cu = np.unique(red.supplier_nodes), np.unique(red.consumer_nodes)
    if su.size <= cu.size:
        rows = distance_rows(cg, su, cu)
        D = rows[np.searchsorted(su, red.supplier_nodes)][:, np.searchsorted(cu, red.consumer_nodes)]
    else:
        rows = distance_rows(cg, cu, su, reverse=True)
        D = rows[np.searchsorted(cu, red.consumer_nodes)][:, np.searchsorted(su, red.supplier_nodes)].T
    D = np.ascontiguousarray(D)
    # banks sit on one side only, so every bank arc is bin <-> bank
    D[red.supplier_bank, :] += gamma
    D[:, red.consumer_bank] += gamma
    return D


def emd_star_term_fast(P, Q, cg: CostGraph, gamma: int) -> Fraction:
    red = reduce(P, Q)
    if red.empty:
        return Fraction(0)
    C = _reduced_costs(red, cg, gamma)
    flow = solve_balanced_int(red.supplies, red.demands, C)
    return Fraction(int((flow * C).sum()), red.scale)


def emd_star_term_dense(P, Q, cg: CostGraph, bank: BankConfig) -> Fraction:
    if not np.any(P) and not np.any(Q):
        return Fraction(0)
    return emd_star_exact(P, Q, dense_ground_distance(cg), bank)


def _terms(G1: NetworkState, G2: NetworkState, symmetric: bool):
    out = []
    for op in (1, -1):
        out.append((G1, G2, op))
        if symmetric:
            out.append((G2, G1, op))
    return out


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("SND_THREADS", "1")))
    except ValueError:
        return 1


def snd_terms(G1, G2, network: Network, config: SndConfig | None = None, fast: bool = True) -> list[Fraction]:
    """The individual EMD-star terms in the order (+ fwd, + bwd, - fwd, - bwd)."""
    config = config or SndConfig()
    G1.check_network(network)
    G2.check_network(network)
    if fast and config.clusters is not None:
        raise ValidationError("the fast path supports one bank per bin only")
    bank = None if fast else config.bank_config(network.n)

    def term(args):
        A, B, op = args
        P, Q = opinion_part(A, op), opinion_part(B, op)
        if np.array_equal(P, Q):
            return Fraction(0)
        cg = build_cost_graph(network, A, op, config.model)
        if fast:
            return emd_star_term_fast(P, Q, cg, config.bank_gamma)
        return emd_star_term_dense(P, Q, cg, bank)

    jobs = _terms(G1, G2, config.symmetric)
    workers = min(_threads(), len(jobs))
    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            return list(ex.map(term, jobs))
    return [term(j) for j in jobs]


def snd_exact(G1, G2, network, config: SndConfig | None = None, fast: bool = True) -> Fraction:
    config = config or SndConfig()
    total = sum(snd_terms(G1, G2, network, config, fast), Fraction(0))
    return total / 2 if config.symmetric else total


def snd(G1, G2, network, config: SndConfig | None = None) -> float:
    """Dense reference evaluation."""
    return float(snd_exact(G1, G2, network, config, fast=False))


def fast_snd(G1, G2, network, config: SndConfig | None = None) -> float:
    return float(snd_exact(G1, G2, network, config, fast=True))
