"""Anomaly detection, opinion prediction and the transition-separation study.

Distance measures are passed around as callables ``f(G1, G2) -> float``;
:func:`make_measure` builds them by name for a given network.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import baselines
from .measure import SndConfig, fast_snd
from .netcore import Network, NetworkState, StateSeries, ValidationError
from .simgen import icc_step, random_transition

Measure = Callable[[NetworkState, NetworkState], float]
MEASURES = ("snd", "hamming", "quadform", "walkdist")


def make_measure(name: str, network: Network, config: SndConfig | None = None) -> Measure:
    if name == "snd":
        cfg = config or SndConfig()
        return lambda a, b: fast_snd(a, b, network, cfg)
    if name == "hamming":
        return lambda a, b: float(baselines.hamming(a, b))
    if name == "quadform":
        L = baselines.laplacian(network)
        return lambda a, b: baselines.quad_form(a, b, L)
    if name == "walkdist":
        return lambda a, b: baselines.walk_dist(a, b, network)
    raise ValueError(f"unknown measure {name!r}; expected one of {MEASURES}")


# ---------------------------------------------------------------------------
# anomaly detection


@dataclass(frozen=True, eq=False)
class DistanceSeries:
    t: np.ndarray  # index of the later state of each transition
    raw: np.ndarray
    active: np.ndarray
    normalized: np.ndarray
    scaled: np.ndarray

    def __len__(self):
        return int(self.raw.size)


def scale_distances(raw, active) -> tuple[np.ndarray, np.ndarray]:
    raw = np.asarray(raw, np.float64)
    active = np.asarray(active, np.float64)
    norm = np.divide(raw, active, out=np.zeros_like(raw), where=active > 0)
    lo, hi = norm.min(), norm.max()
    scaled = (norm - lo) / (hi - lo) if hi > lo else np.zeros_like(norm)
    return norm, scaled


def distance_series(series: StateSeries, measure: Measure) -> DistanceSeries:
    if len(series) < 2:
        raise ValidationError("need at least 2 states")
    raw = np.array([measure(a, b) for a, b in zip(series.states, series.states[1:])], np.float64)
    active = np.array([s.n_active for s in series.states[1:]], np.float64)
    norm, scaled = scale_distances(raw, active)
    return DistanceSeries(np.arange(1, len(series)), raw, active, norm, scaled)


@dataclass(frozen=True, eq=False)
class AnomalyReport:
    t: np.ndarray  # transitions that received a score
    scores: np.ndarray
    ranking: np.ndarray  # t values, most anomalous first


def anomaly_scores(d, t=None) -> AnomalyReport:
    """S_t = 2 d_t - d_{t-1} - d_{t+1} for every interior transition."""
    if isinstance(d, DistanceSeries):
        t, d = d.t, d.scaled
    d = np.asarray(d, np.float64)
    if d.size < 3:
        raise ValidationError("series too short: need at least 3 transitions")
    t = np.arange(d.size) if t is None else np.asarray(t)
    s = 2 * d[1:-1] - d[:-2] - d[2:]
    tt = t[1:-1]
    order = np.argsort(-s, kind="stable")
    return AnomalyReport(tt, s, tt[order])


@dataclass(frozen=True, eq=False)
class Roc:
    fpr: np.ndarray
    tpr: np.ndarray
    auc: float

    def tpr_at(self, fpr: float) -> float:
        """Best TPR reached without exceeding the given FPR."""
        ok = self.fpr <= fpr + 1e-12
        return float(self.tpr[ok].max())


def roc_curve(scores, labels) -> Roc:
    """Tie-aware ROC; tied scores move along a diagonal segment."""
    scores = np.asarray(scores, np.float64)
    labels = np.asarray(labels, bool)
    npos, nneg = int(labels.sum()), int((~labels).sum())
    if npos == 0 or nneg == 0:
        raise ValidationError("ROC needs both positive and negative examples")
    order = np.argsort(-scores, kind="stable")
    s, y = scores[order], labels[order]
    last = np.r_[np.flatnonzero(s[1:] != s[:-1]), s.size - 1]
    tp = np.cumsum(y)[last]
    fp = np.cumsum(~y)[last]
    tpr = np.r_[0.0, tp / npos]
    fpr = np.r_[0.0, fp / nneg]
    auc = float(np.sum(np.diff(fpr) * (tpr[1:] + tpr[:-1]) / 2))
    return Roc(fpr, tpr, auc)


def roc(report: AnomalyReport, truth) -> Roc:
    truth = set(int(x) for x in truth)
    if not truth:
        raise ValidationError("truth must be nonempty")
    labels = np.array([int(t) in truth for t in report.t])
    return roc_curve(report.scores, labels)


# ---------------------------------------------------------------------------
# opinion prediction


@dataclass(frozen=True)
class PredictionTask:
    history: tuple  # past states, oldest first; the last one is G_{-1}
    current: NetworkState  # targets already hidden (set to 0)
    targets: np.ndarray
    samples: int = 100
    seed: int = 0

    def __post_init__(self):
        if len(self.history) < 2:
            raise ValidationError("need at least 2 history states")
        if len(self.targets) == 0:
            raise ValidationError("no targets to predict")
        if self.samples < 1:
            raise ValidationError("samples must be positive")


def extrapolate(distances: Sequence[float]) -> float:
    """Least-squares line through the distances, evaluated one step ahead."""
    y = np.asarray(distances, np.float64)
    if y.size == 1:
        return float(y[0])
    x = np.arange(y.size, dtype=np.float64)
    slope, icept = np.polyfit(x, y, 1)
    return float(slope * y.size + icept)


def predict_opinions(task: PredictionTask, measure: Measure, truth: NetworkState | None = None):
    h = task.history
    dists = [measure(a, b) for a, b in zip(h, h[1:])]
    target_d = extrapolate(dists)
    rng = np.random.default_rng(task.seed)
    base = np.array(task.current.opinions)
    targets = np.asarray(task.targets, np.int64)
    best, best_gap = None, np.inf
    for _ in range(task.samples):
        cand = base.copy()
        cand[targets] = rng.choice(np.array([-1, 1], np.int8), targets.size)
        state = NetworkState(cand)
        gap = abs(measure(h[-1], state) - target_d)
        if gap < best_gap:
            best, best_gap = state, gap
    acc = None
    if truth is not None:
        acc = float(np.mean(best.opinions[targets] == truth.opinions[targets]))
    return best, acc


def choose_targets(state: NetworkState, k: int, rng, pool=None) -> np.ndarray:
    """k active users with a balanced opinion split where possible."""
    ops = state.opinions
    cand = np.flatnonzero(ops != 0) if pool is None else np.asarray(pool)
    pos = cand[ops[cand] == 1]
    neg = cand[ops[cand] == -1]
    if pos.size + neg.size < k:
        raise ValidationError(f"only {pos.size + neg.size} active users, need {k}")
    half = k // 2
    if pos.size >= half and neg.size >= k - half:
        npos = half
    else:
        npos = int(round(k * pos.size / (pos.size + neg.size)))
    npos = min(max(npos, k - neg.size), pos.size)
    pick = np.concatenate([rng.choice(pos, npos, replace=False), rng.choice(neg, k - npos, replace=False)])
    return np.sort(pick)


@dataclass(frozen=True)
class PredictionParams:
    n_targets: int = 20
    samples: int = 100
    trials: int = 10
    history: int = 3
    seed: int = 0


def prediction_experiment(series: StateSeries, methods: dict, params: PredictionParams = PredictionParams(), fixed_targets=None):
    """Accuracy (mean, std in percent) per method over repeated target draws.

    ``methods`` maps a name to ``("measure", f)`` for a distance-based
    search with measure ``f``, or to ``("predict", g)`` with
    ``g(hidden_state, targets, seed) -> state``. The last state of
    ``series`` is the current one. With ``fixed_targets`` every trial hides
    the same users and only the random search differs.
    """
    states = series.states
    if len(states) < params.history + 1:
        raise ValidationError(f"series needs at least {params.history + 1} states")
    history = tuple(states[-params.history - 1 : -1])
    truth = states[-1]
    rng = np.random.default_rng(params.seed)
    results = {name: [] for name in methods}
    for trial in range(params.trials):
        if fixed_targets is None:
            targets = choose_targets(truth, params.n_targets, rng)
        else:
            targets = np.asarray(fixed_targets, np.int64)
        hidden = truth.opinions.copy()
        hidden[targets] = 0
        hidden = NetworkState(hidden)
        tseed = int(rng.integers(2**63))
        for name, (kind, fn) in methods.items():
            if kind == "measure":
                task = PredictionTask(history, hidden, targets, params.samples, tseed)
                _, acc = predict_opinions(task, fn, truth)
            else:
                pred = fn(hidden, targets, tseed)
                acc = float(np.mean(pred.opinions[targets] == truth.opinions[targets]))
            results[name].append(100.0 * acc)
    return {name: (float(np.mean(v)), float(np.std(v)), v) for name, v in results.items()}


# ---------------------------------------------------------------------------
# separation study


@dataclass(frozen=True)
class SeparationParams:
    pairs: int = 40
    seed_adopters: int = 100
    warmup_rounds: tuple = (1, 2, 3)
    snd: SndConfig = field(default_factory=SndConfig)
    seed: int = 0


def transition_separation_study(network: Network, params: SeparationParams = SeparationParams()):
    """Normal (one cascade round) vs random transitions with matched n_delta.

    Returns rows ``(n_delta, snd, l1, label)`` with label 1 for random.
    """
    rng = np.random.default_rng(params.seed)
    rows = []
    for _ in range(params.pairs):
        ops = np.zeros(network.n, np.int8)
        seeds = rng.choice(network.n, params.seed_adopters, replace=False)
        ops[seeds] = rng.choice(np.array([-1, 1], np.int8), seeds.size)
        g1 = NetworkState(ops)
        for _ in range(int(rng.choice(params.warmup_rounds))):
            g1 = icc_step(network, g1, rng.integers(2**63))
        g_norm = icc_step(network, g1, rng.integers(2**63))
        k = baselines.hamming(g1, g_norm)
        g_anom = random_transition(network, g1, k, rng.integers(2**63))
        for g2, label in ((g_norm, 0), (g_anom, 1)):
            l1 = float(np.abs(g1.opinions.astype(int) - g2.opinions.astype(int)).sum())
            rows.append((k, fast_snd(g1, g2, network, params.snd), l1, label))
    return rows
