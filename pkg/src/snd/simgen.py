"""Synthetic scale-free networks and opinion-evolution generators."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from .netcore import Network, NetworkState, StateSeries, ValidationError

GAMMA_RANGE = (-2.9, -2.1)
FALLBACKS = ("random", "neutral")


@dataclass(frozen=True)
class SimParams:
    n: int = 2000
    sf_exponent: float = -2.3
    p_nbr: float = 0.08
    p_ext: float = 0.001
    initial_adopters: int = 160
    steps: int = 10
    activation_fraction: float = 0.3
    seed: int = 0
    min_degree: int = 2
    # what a neighbour-adoption draw does for a user with no active in-neighbour
    no_neighbor: str = "neutral"
    anomaly_steps: tuple = ()
    anomaly_p_nbr: float | None = None
    anomaly_p_ext: float | None = None

    def __post_init__(self):
        if self.n < 10:
            raise ValidationError("n must be at least 10")
        lo, hi = GAMMA_RANGE
        if not lo <= self.sf_exponent <= hi:
            raise ValidationError(f"scale-free exponent {self.sf_exponent} outside [{lo}, {hi}]")
        for name in ("p_nbr", "p_ext", "activation_fraction"):
            v = getattr(self, name)
            if not 0 <= v <= 1:
                raise ValidationError(f"{name} must lie in [0, 1]")
        if self.p_nbr + self.p_ext > 1:
            raise ValidationError("p_nbr + p_ext must not exceed 1")
        if not 0 <= self.initial_adopters <= self.n:
            raise ValidationError("initial_adopters must lie in [0, n]")
        if self.steps < 0:
            raise ValidationError("steps must be nonnegative")
        if self.no_neighbor not in FALLBACKS:
            raise ValidationError(f"no_neighbor must be one of {FALLBACKS}")
        object.__setattr__(self, "anomaly_steps", tuple(int(s) for s in self.anomaly_steps))
        if any(not 1 <= s <= self.steps for s in self.anomaly_steps):
            raise ValidationError("anomaly steps must lie in [1, steps]")
        if self.anomaly_steps:
            a_nbr = self.p_nbr if self.anomaly_p_nbr is None else self.anomaly_p_nbr
            a_ext = self.p_ext if self.anomaly_p_ext is None else self.anomaly_p_ext
            if not (0 <= a_nbr <= 1 and 0 <= a_ext <= 1 and a_nbr + a_ext <= 1):
                raise ValidationError("anomalous probabilities must be valid")


def _power_law_degrees(n, exponent, kmin, rng):
    a = -exponent
    kmax = n - 1
    ks = np.arange(kmin, kmax + 1)
    pmf = ks.astype(np.float64) ** (-a)
    pmf /= pmf.sum()
    deg = rng.choice(ks, size=n, p=pmf)
    if deg.sum() % 2:
        deg[rng.integers(n)] += 1
    return deg


def gen_scale_free(n: int, exponent: float = -2.3, seed=0, min_degree: int = 2) -> Network:
    """Reciprocal configuration-model network on a power-law degree sequence.

    Self-loops and repeated pairs from the random pairing are dropped, and
    every component outside the largest one is tied to it by one reciprocal
    edge, so the result is strongly connected.
    """
    if n < 10:
        raise ValidationError("n must be at least 10")
    lo, hi = GAMMA_RANGE
    if not lo <= exponent <= hi:
        raise ValidationError(f"scale-free exponent {exponent} outside [{lo}, {hi}]")
    rng = np.random.default_rng(seed)
    deg = _power_law_degrees(n, exponent, min_degree, rng)
    stubs = np.repeat(np.arange(n), deg)
    rng.shuffle(stubs)
    a, b = stubs[0::2], stubs[1::2]
    keep = a != b
    a, b = np.minimum(a[keep], b[keep]), np.maximum(a[keep], b[keep])
    pairs = np.unique(a * n + b)
    a, b = pairs // n, pairs % n

    g = sp.coo_matrix((np.ones(a.size), (a, b)), shape=(n, n))
    ncomp, lab = connected_components(g, directed=False)
    if ncomp > 1:
        giant = np.bincount(lab).argmax()
        members = np.flatnonzero(lab == giant)
        extra_a, extra_b = [], []
        for c in range(ncomp):
            if c == giant:
                continue
            node = np.flatnonzero(lab == c)[0]
            extra_a.append(node)
            extra_b.append(rng.choice(members))
        ea, eb = np.array(extra_a), np.array(extra_b)
        a = np.concatenate([a, np.minimum(ea, eb)])
        b = np.concatenate([b, np.maximum(ea, eb)])
        pairs = np.unique(a * n + b)
        a, b = pairs // n, pairs % n
    src = np.concatenate([a, b])
    dst = np.concatenate([b, a])
    order = np.lexsort((dst, src))
    return Network(n, src[order], dst[order])


def degree_exponent(degrees, kmin: int = 2) -> float:
    """Slope of the log-log degree density over logarithmic bins."""
    d = np.asarray(degrees)
    d = d[d >= kmin]
    edges = np.unique(np.floor(np.logspace(np.log10(kmin), np.log10(d.max() + 1), 15)).astype(int))
    counts, _ = np.histogram(d, bins=edges)
    widths = np.diff(edges)
    ok = counts > 0
    x = np.sqrt(edges[:-1] * (edges[1:] - 1).clip(min=edges[:-1]))[ok]
    y = counts[ok] / widths[ok]
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


def initial_state(n: int, adopters: int, rng) -> NetworkState:
    ops = np.zeros(n, np.int8)
    idx = rng.choice(n, adopters, replace=False)
    npos = rng.binomial(adopters, 0.5)
    ops[idx[:npos]] = 1
    ops[idx[npos:]] = -1
    return NetworkState(ops)


def _vote(network: Network, ops: np.ndarray, v: int, rng):
    csr = network.in_csr
    nb = ops[csr.indices[csr.indptr[v] : csr.indptr[v + 1]]]
    pos = int(np.count_nonzero(nb == 1))
    neg = int(np.count_nonzero(nb == -1))
    if pos + neg == 0:
        return 0
    return 1 if rng.random() * (pos + neg) < pos else -1


def evolve_state(network: Network, state: NetworkState, params: SimParams, seed, p_nbr=None, p_ext=None) -> NetworkState:
    """One step: a sample of neutral users gets a chance to adopt an opinion."""
    rng = np.random.default_rng(seed)
    state.check_network(network)
    p_nbr = params.p_nbr if p_nbr is None else p_nbr
    p_ext = params.p_ext if p_ext is None else p_ext
    old = state.opinions
    new = old.copy()
    neutral = np.flatnonzero(old == 0)
    k = int(round(params.activation_fraction * neutral.size))
    chosen = np.sort(rng.choice(neutral, k, replace=False)) if k else neutral[:0]
    for v in chosen:
        u = rng.random()
        if u < p_nbr:
            op = _vote(network, old, v, rng)
            if op == 0 and params.no_neighbor == "random":
                op = rng.choice((-1, 1))
            new[v] = op
        elif u < p_nbr + p_ext:
            new[v] = rng.choice((-1, 1))
    return NetworkState(new)


def gen_series(params: SimParams, network: Network | None = None) -> StateSeries:
    """Initial state plus ``steps`` evolved states; anomaly steps use the override probabilities."""
    rng = np.random.default_rng(params.seed)
    if network is None:
        network = gen_scale_free(params.n, params.sf_exponent, rng.integers(2**63), params.min_degree)
    elif network.n != params.n:
        raise ValidationError("network size does not match params.n")
    state = initial_state(params.n, params.initial_adopters, rng)
    states = [state]
    anomalous = set(params.anomaly_steps)
    a_nbr = params.p_nbr if params.anomaly_p_nbr is None else params.anomaly_p_nbr
    a_ext = params.p_ext if params.anomaly_p_ext is None else params.anomaly_p_ext
    for t in range(1, params.steps + 1):
        step_seed = rng.integers(2**63)
        if t in anomalous:
            state = evolve_state(network, state, params, step_seed, a_nbr, a_ext)
        else:
            state = evolve_state(network, state, params, step_seed)
        states.append(state)
    return StateSeries(network, tuple(states))


# ---------------------------------------------------------------------------
# ICC forward simulation


def icc_step(network: Network, state: NetworkState, seed, frontier=None, default_p: float = 0.1, default_d: float = 1.0):
    """One cascade round from ``frontier`` (default: every active node).

    Each frontier node tries once to activate each neutral out-neighbour. A
    node reached by several successful attempts takes the opinion of the
    closest attempt; among equally close ones the opinion is drawn in
    proportion to the summed activation probabilities. Returns the new state.
    """
    rng = np.random.default_rng(seed)
    state.check_network(network)
    ops = state.opinions
    p = network.activation_prob if network.activation_prob is not None else np.full(network.m, default_p)
    d = network.icc_distance if network.icc_distance is not None else np.full(network.m, default_d)
    if frontier is None:
        is_front = ops != 0
    else:
        is_front = np.zeros(network.n, bool)
        is_front[np.asarray(frontier, np.int64)] = True
    src, dst = network.src, network.dst
    cand = is_front[src] & (ops[src] != 0) & (ops[dst] == 0)
    idx = np.flatnonzero(cand)
    fired = idx[rng.random(idx.size) < p[idx]]
    new = ops.copy()
    if fired.size == 0:
        return NetworkState(new)
    order = np.lexsort((d[fired], dst[fired]))
    fired = fired[order]
    heads = dst[fired]
    starts = np.flatnonzero(np.r_[True, heads[1:] != heads[:-1]])
    ends = np.r_[starts[1:], fired.size]
    for s, e in zip(starts, ends):
        group = fired[s:e]
        best = d[group].min()
        tied = group[d[group] <= best]
        wpos = p[tied][ops[src[tied]] == 1].sum()
        wneg = p[tied][ops[src[tied]] == -1].sum()
        tot = wpos + wneg
        if tot <= 0:
            new[heads[s]] = ops[src[tied[0]]]
        else:
            new[heads[s]] = 1 if rng.random() * tot < wpos else -1
    return NetworkState(new)


def random_transition(network: Network, state: NetworkState, k: int, seed) -> NetworkState:
    """``k`` uniformly chosen neutral users adopt a uniform random opinion."""
    rng = np.random.default_rng(seed)
    state.check_network(network)
    neutral = np.flatnonzero(state.opinions == 0)
    if k < 0 or k > neutral.size:
        raise ValidationError(f"cannot activate {k} of {neutral.size} neutral users")
    new = state.opinions.copy()
    chosen = rng.choice(neutral, k, replace=False)
    new[chosen] = rng.choice(np.array([-1, 1], np.int8), k)
    return NetworkState(new)
