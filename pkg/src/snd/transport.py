"""Exact transportation problems: EMD, EMD-hat, the single-bank EMD^alpha and
the clustered-bank EMD-star.

Costs are integers. Masses may be any nonnegative reals representable as
rationals with modest denominators; they are scaled to a common integer grid
so the flow solver works in exact integer arithmetic. The ``*_exact``
functions return :class:`fractions.Fraction` values, the float variants are
thin wrappers.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from functools import reduce

import numpy as np

from . import _kernels

ALPHA_PHASE = 8
MAX_DENOMINATOR = 10**6
_INT_LIMIT = 2**62


class SolverError(RuntimeError):
    pass


class MetricityWarning(UserWarning):
    pass


# ---------------------------------------------------------------------------
# mass and cost arithmetic


def _as_fraction(x) -> Fraction:
    if isinstance(x, (int, np.integer)):
        return Fraction(int(x))
    if isinstance(x, Fraction):
        return x
    x = float(x)
    if not math.isfinite(x) or x < 0:
        raise ValueError(f"masses must be finite and nonnegative, got {x!r}")
    if x == int(x):
        return Fraction(int(x))
    f = Fraction(x).limit_denominator(MAX_DENOMINATOR)
    if abs(float(f) - x) > 1e-12 * max(1.0, abs(x)):
        raise ValueError(f"mass {x!r} has no rational form with denominator <= {MAX_DENOMINATOR}")
    return f


def integerize(*hists):
    """Scale histograms onto a shared integer grid.

    Returns ``(int_arrays, scale)`` with ``int_arrays[i] / scale == hists[i]``.
    """
    fracs = [[_as_fraction(x) for x in np.asarray(h, dtype=object).ravel()] for h in hists]
    for fs in fracs:
        if any(f < 0 for f in fs):
            raise ValueError("masses must be nonnegative")
    denom = reduce(math.lcm, (f.denominator for fs in fracs for f in fs), 1)
    out = [np.array([int(f * denom) for f in fs], dtype=np.int64) for fs in fracs]
    return out, denom


def _int_costs(costs) -> np.ndarray:
    c = np.asarray(costs)
    if c.ndim != 2:
        raise ValueError("cost matrix must be 2-d")
    if c.size and not np.issubdtype(c.dtype, np.integer):
        if not np.all(np.isfinite(c)) or not np.all(c == np.round(c)):
            raise ValueError("costs must be finite integers")
    c = c.astype(np.int64)
    if c.size and c.min() < 0:
        raise ValueError("costs must be nonnegative")
    return c


def _alpha_fraction(alpha) -> Fraction:
    a = Fraction(alpha).limit_denominator(MAX_DENOMINATOR)
    if a < 0:
        raise ValueError("alpha must be nonnegative")
    return a


# ---------------------------------------------------------------------------
# solver


@dataclass(frozen=True, eq=False)
class TransportPlan:
    """Sparse flows ``amounts[e]`` from supplier ``rows[e]`` to consumer ``cols[e]``."""

    rows: np.ndarray
    cols: np.ndarray
    amounts: np.ndarray  # Fractions when masses were fractional, else ints
    cost: Fraction

    @property
    def total_cost(self) -> float:
        return float(self.cost)

    @property
    def shipped(self) -> Fraction:
        return sum((Fraction(a) for a in self.amounts), Fraction(0))

    def dense(self, shape) -> np.ndarray:
        out = np.zeros(shape)
        for r, c, a in zip(self.rows, self.cols, self.amounts):
            out[r, c] += float(a)
        return out


def solve_balanced_int(supply: np.ndarray, demand: np.ndarray, cost: np.ndarray) -> np.ndarray:
    """Min-cost flow for a balanced integer problem; returns the full flow matrix."""
    supply = np.asarray(supply, np.int64)
    demand = np.asarray(demand, np.int64)
    if supply.sum() != demand.sum():
        raise ValueError("unbalanced problem passed to the balanced solver")
    flow = np.zeros(cost.shape, np.int64)
    rs = np.flatnonzero(supply > 0)
    cs = np.flatnonzero(demand > 0)
    if rs.size == 0:
        return flow
    sub = np.ascontiguousarray(cost[np.ix_(rs, cs)], dtype=np.int64)
    cmax = int(sub.max()) if sub.size else 0
    nn = rs.size + cs.size + 1
    # prices stay within about nn * cmax * nn during refinement
    if cmax * nn * (nn + 2) >= _INT_LIMIT:
        raise SolverError(f"cost range {cmax} too large for exact int64 scaling at size {rs.size}x{cs.size}")
    f = _kernels.cost_scaling_transport(supply[rs], demand[cs], sub, ALPHA_PHASE)
    flow[np.ix_(rs, cs)] = f
    if not (np.array_equal(flow.sum(axis=1), supply) and np.array_equal(flow.sum(axis=0), demand)):
        raise SolverError("flow solver returned an infeasible plan")
    return flow


def _plan_from_flow(flow, cost, scale) -> TransportPlan:
    r, c = np.nonzero(flow)
    amounts = flow[r, c]
    if scale != 1:
        amounts = np.array([Fraction(int(a), scale) for a in amounts], dtype=object)
    total = Fraction(int((flow * cost).sum()), scale)
    return TransportPlan(r.astype(np.int64), c.astype(np.int64), amounts, total)


def solve_transport(supplies, demands, costs) -> TransportPlan:
    """Cheapest plan shipping ``min(sum P, sum Q)`` units.

    A zero-cost dummy bin absorbs (or provides) the surplus so the core
    solver only sees balanced problems.
    """
    cost = _int_costs(costs)
    (s, d), scale = integerize(supplies, demands)
    if cost.shape != (s.size, d.size):
        raise ValueError(f"cost shape {cost.shape} does not match histograms ({s.size}, {d.size})")
    ts, td = int(s.sum()), int(d.sum())
    if ts == td:
        flow = solve_balanced_int(s, d, cost)
    elif ts > td:
        c2 = np.hstack([cost, np.zeros((s.size, 1), np.int64)])
        flow = solve_balanced_int(s, np.append(d, ts - td), c2)[:, :-1]
    else:
        c2 = np.vstack([cost, np.zeros((1, d.size), np.int64)])
        flow = solve_balanced_int(np.append(s, td - ts), d, c2)[:-1, :]
    return _plan_from_flow(flow, cost, scale)


# ---------------------------------------------------------------------------
# EMD variants


def _totals(P, Q):
    (p, q), scale = integerize(P, Q)
    return Fraction(int(p.sum()), scale), Fraction(int(q.sum()), scale)


def emd_exact(P, Q, D) -> Fraction:
    plan = solve_transport(P, Q, D)
    sp, sq = _totals(P, Q)
    moved = min(sp, sq)
    return plan.cost / moved if moved else Fraction(0)


def emd(P, Q, D) -> float:
    return float(emd_exact(P, Q, D))


def emd_hat_exact(P, Q, D, alpha) -> Fraction:
    a = _alpha_fraction(alpha)
    D = _int_costs(D)
    sp, sq = _totals(P, Q)
    dmax = int(D.max()) if D.size else 0
    return solve_transport(P, Q, D).cost + a * dmax * abs(sp - sq)


def emd_hat(P, Q, D, alpha) -> float:
    return float(emd_hat_exact(P, Q, D, alpha))


def _is_metric(D: np.ndarray) -> bool:
    if D.shape[0] != D.shape[1] or np.any(np.diag(D) != 0) or not np.array_equal(D, D.T):
        return False
    via = (D[:, :, None] + D[None, :, :]).min(axis=1)
    return bool(np.all(D <= via))


def emd_alpha_exact(P, Q, D, alpha, check: bool = True) -> Fraction:
    """Total cost of the problem extended by one global bank bin.

    P gets a bank holding sum(Q), Q one holding sum(P); the bank sits at
    distance alpha * max(D) from every bin.
    """
    a = _alpha_fraction(alpha)
    D = _int_costs(D)
    if check and (a < Fraction(1, 2) or not _is_metric(D)):
        warnings.warn("emd_alpha equals emd_hat only for metric D and alpha >= 0.5", MetricityWarning, stacklevel=2)
    (p, q), scale = integerize(P, Q)
    q_den = a.denominator
    bank = a.numerator * (int(D.max()) if D.size else 0)
    n = D.shape[0]
    Dt = np.zeros((n + 1, n + 1), np.int64)
    Dt[:n, :n] = D * q_den
    Dt[:n, n] = bank
    Dt[n, :n] = bank
    pt = np.append(p, q.sum())
    qt = np.append(q, p.sum())
    flow = solve_balanced_int(pt, qt, Dt)
    return Fraction(int((flow * Dt).sum()), scale * q_den)


def emd_alpha(P, Q, D, alpha, check: bool = True) -> float:
    return float(emd_alpha_exact(P, Q, D, alpha, check))


# ---------------------------------------------------------------------------
# clustered banks


@dataclass(frozen=True, eq=False)
class BankConfig:
    """Partition of bins into clusters, each with ``banks_per_cluster`` banks.

    ``gammas[c, b]`` is the distance between bank b of cluster c and each bin
    of that cluster.
    """

    labels: np.ndarray
    banks_per_cluster: int = 1
    gammas: np.ndarray | None = None

    def __post_init__(self):
        labels = np.asarray(self.labels, np.int64)
        if labels.ndim != 1 or labels.size == 0:
            raise ValueError("labels must be a nonempty 1-d array")
        uniq = np.unique(labels)
        if uniq[0] != 0 or uniq[-1] != uniq.size - 1:
            raise ValueError("cluster labels must be exactly 0..N_c-1")
        labels.setflags(write=False)
        object.__setattr__(self, "labels", labels)
        if self.banks_per_cluster < 1:
            raise ValueError("banks_per_cluster must be positive")
        if self.gammas is not None:
            g = np.asarray(self.gammas)
            if g.ndim == 1:
                g = np.repeat(g[:, None], self.banks_per_cluster, axis=1)
            if g.shape != (self.n_clusters, self.banks_per_cluster):
                raise ValueError("gammas must have shape (N_c, N_b)")
            if np.any(g < 0) or not np.all(g == np.round(g)):
                raise ValueError("gammas must be nonnegative integers")
            g = g.astype(np.int64)
            g.setflags(write=False)
            object.__setattr__(self, "gammas", g)

    @property
    def n_clusters(self) -> int:
        return int(self.labels.max()) + 1

    @property
    def n_bins(self) -> int:
        return int(self.labels.size)

    @property
    def n_banks(self) -> int:
        return self.n_clusters * self.banks_per_cluster

    @classmethod
    def single(cls, n: int, gamma=None) -> "BankConfig":
        return cls(np.zeros(n, np.int64), 1, None if gamma is None else np.array([[gamma]]))

    @classmethod
    def per_bin(cls, n: int, gamma: int) -> "BankConfig":
        return cls(np.arange(n), 1, np.full((n, 1), gamma, np.int64))


def cluster_distances(D: np.ndarray, labels: np.ndarray, n_clusters: int) -> np.ndarray:
    """d[i, j] = min over p in C_i, q in C_j of D[p, q]."""
    rowmin = np.full((n_clusters, D.shape[1]), np.iinfo(np.int64).max, np.int64)
    np.minimum.at(rowmin, labels, D)
    d = np.full((n_clusters, n_clusters), np.iinfo(np.int64).max, np.int64)
    np.minimum.at(d.T, labels, rowmin.T)
    return d


def intra_cluster_max(D: np.ndarray, labels: np.ndarray, n_clusters: int) -> np.ndarray:
    out = np.zeros(n_clusters, np.int64)
    for c in range(n_clusters):
        idx = np.flatnonzero(labels == c)
        out[c] = D[np.ix_(idx, idx)].max()
    return out


def resolve_gammas(bank: BankConfig, D: np.ndarray) -> np.ndarray:
    if bank.gammas is not None:
        return bank.gammas
    m = intra_cluster_max(D, bank.labels, bank.n_clusters)
    return np.repeat(m[:, None], bank.banks_per_cluster, axis=1)


def check_metric_bound(bank: BankConfig, D: np.ndarray) -> None:
    g = resolve_gammas(bank, D)
    need = intra_cluster_max(D, bank.labels, bank.n_clusters)
    bad = np.flatnonzero(2 * g.min(axis=1) < need)
    if bad.size:
        c = int(bad[0])
        raise ValueError(f"bank distance {int(g[c].min())} of cluster {c} is below half its diameter {int(need[c])}")


def bank_capacities(p: np.ndarray, q: np.ndarray, labels: np.ndarray, n_clusters: int, n_banks: int):
    """Integer bank masses for integer histograms ``p`` and ``q``.

    The mismatch goes to the lighter side's banks in proportion to each
    cluster's share of the lighter total, split equally over a cluster's
    banks. Bin masses must be multiplied by the returned ``factor`` to sit on
    the same grid. Returns ``(bank_p, bank_q, factor)`` with bank arrays of
    shape (n_clusters * n_banks,).
    """
    sp, sq = int(p.sum()), int(q.sum())
    zeros = np.zeros(n_clusters * n_banks, np.int64)
    if sp == sq:
        return zeros, zeros.copy(), 1
    light = p if sp < sq else q
    delta = abs(sp - sq)
    total = int(light.sum())
    if total > 0:
        cm = np.bincount(labels, weights=light, minlength=n_clusters).astype(np.int64)
        factor = total * n_banks
        caps = np.repeat(cm * delta, n_banks)
    else:
        factor = n_clusters * n_banks
        caps = np.full(n_clusters * n_banks, delta, np.int64)
    g = reduce(math.gcd, (int(x) for x in caps), factor)
    caps //= g
    factor //= g
    return (caps, zeros, factor) if sp < sq else (zeros, caps, factor)


@dataclass(frozen=True, eq=False)
class ExtendedProblem:
    """Histograms with bank bins appended, on an integer grid of ``scale``."""

    supplies: np.ndarray
    demands: np.ndarray
    scale: int
    D: np.ndarray
    cluster_dist: np.ndarray
    gammas: np.ndarray

    @property
    def n_bins(self) -> int:
        return self.supplies.size

    def masses(self):
        s = self.scale
        return [Fraction(int(x), s) for x in self.supplies], [Fraction(int(x), s) for x in self.demands]


def extended_ground_distance(D: np.ndarray, labels: np.ndarray, d: np.ndarray, gammas: np.ndarray) -> np.ndarray:
    n = D.shape[0]
    n_c, n_b = gammas.shape
    g = gammas.ravel()
    bank_cluster = np.repeat(np.arange(n_c), n_b)
    N = n + g.size
    out = np.empty((N, N), np.int64)
    out[:n, :n] = D
    out[:n, n:] = g[None, :] + d[labels][:, bank_cluster]
    out[n:, :n] = g[:, None] + d[bank_cluster][:, labels]
    bb = g[:, None] + g[None, :] + d[np.ix_(bank_cluster, bank_cluster)]
    np.fill_diagonal(bb, 0)
    out[n:, n:] = bb
    return out


def extend_for_emd_star(P, Q, D, bank: BankConfig, metric: bool = False) -> ExtendedProblem:
    D = _int_costs(D)
    n = D.shape[0]
    if D.shape != (n, n) or bank.n_bins != n:
        raise ValueError("histograms, D and bank labels must agree in size")
    if metric:
        check_metric_bound(bank, D)
    (p, q), scale = integerize(P, Q)
    if p.size != n or q.size != n:
        raise ValueError("histogram length does not match D")
    bp, bq, factor = bank_capacities(p, q, bank.labels, bank.n_clusters, bank.banks_per_cluster)
    gammas = resolve_gammas(bank, D)
    d = cluster_distances(D, bank.labels, bank.n_clusters)
    Dt = extended_ground_distance(D, bank.labels, d, gammas)
    return ExtendedProblem(
        np.concatenate([p * factor, bp]), np.concatenate([q * factor, bq]), scale * factor, Dt, d, gammas
    )


def emd_star_exact(P, Q, D, bank: BankConfig, metric: bool = False) -> Fraction:
    ext = extend_for_emd_star(P, Q, D, bank, metric)
    if ext.supplies.sum() == 0:
        return Fraction(0)
    flow = solve_balanced_int(ext.supplies, ext.demands, ext.D)
    return Fraction(int((flow * ext.D).sum()), ext.scale)


def emd_star(P, Q, D, bank: BankConfig, metric: bool = False) -> float:
    return float(emd_star_exact(P, Q, D, bank, metric))


# ---------------------------------------------------------------------------
# oracle

ORACLE_LIMIT = 12


def lp_oracle(supplies, demands, costs) -> TransportPlan:
    """Reference optimum from the HiGHS LP solver on the textbook formulation.

    Only meant for tests; the transportation polytope has integral vertices,
    so with integer data the simplex optimum is exact after rounding.
    """
    from scipy.optimize import linprog

    cost = _int_costs(costs)
    (s, d), scale = integerize(supplies, demands)
    k, N = s.size, d.size
    if k > ORACLE_LIMIT or N > ORACLE_LIMIT:
        raise ValueError(f"oracle limited to {ORACLE_LIMIT}x{ORACLE_LIMIT} problems")
    total = min(int(s.sum()), int(d.sum()))
    if total == 0:
        return TransportPlan(np.zeros(0, np.int64), np.zeros(0, np.int64), np.zeros(0, np.int64), Fraction(0))
    A_ub = np.zeros((k + N, k * N))
    for i in range(k):
        A_ub[i, i * N : (i + 1) * N] = 1
    for j in range(N):
        A_ub[k + j, j::N] = 1
    res = linprog(
        cost.ravel().astype(float),
        A_ub=A_ub,
        b_ub=np.concatenate([s, d]).astype(float),
        A_eq=np.ones((1, k * N)),
        b_eq=[float(total)],
        bounds=(0, None),
        method="highs-ds",
    )
    if res.status != 0:
        raise SolverError(f"LP oracle failed: {res.message}")
    flow = np.rint(res.x).astype(np.int64).reshape(k, N)
    return _plan_from_flow(flow, cost, scale)
