"""Opinion-dependent edge costs and shortest-path ground distances.

Each edge u->v gets the integer cost

    round(scale * (-log P_comm - log P_in - log P_out))

clamped to [1, cap]. ``P_out`` depends on the spreading model and on the
opinions of u and v in the state the graph is built for. The model-agnostic
penalties are given directly in cost units instead of log-probabilities.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .netcore import Network, NetworkState, ValidationError

MODELS = ("agnostic", "icc", "ltc")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Quantization:
    scale: float = 100.0
    cap: int = 10**6

    def __post_init__(self):
        if not (self.scale > 0 and math.isfinite(self.scale)):
            raise ConfigError("scale must be positive and finite")
        if int(self.cap) != self.cap or self.cap < 1:
            raise ConfigError("cap must be a positive integer")


@dataclass(frozen=True)
class AgnosticParams:
    c_friendly: int = 1
    c_neutral: int = 4
    c_adverse: int = 16

    def __post_init__(self):
        vals = (self.c_friendly, self.c_neutral, self.c_adverse)
        if any(int(v) != v or v < 1 for v in vals):
            raise ConfigError("agnostic penalties must be positive integers")
        if not self.c_friendly < self.c_neutral < self.c_adverse:
            raise ConfigError("need c_friendly < c_neutral < c_adverse")


@dataclass(frozen=True)
class IccParams:
    epsilon: float = 1e-6
    default_p: float = 0.1
    default_d: float = 1.0

    def __post_init__(self):
        if not 0 < self.epsilon <= self.default_p <= 1:
            raise ConfigError("need 0 < epsilon <= default_p <= 1")
        if not self.default_d > 0:
            raise ConfigError("default_d must be positive")


@dataclass(frozen=True)
class LtcParams:
    epsilon: float = 1e-6
    default_w: float | None = None  # None: 1 / in-degree of the head
    default_theta: float = 0.5

    def __post_init__(self):
        if not 0 < self.epsilon < 1:
            raise ConfigError("epsilon must lie in (0, 1)")
        if self.default_w is not None and self.default_w < 0:
            raise ConfigError("default_w must be nonnegative")
        if self.default_theta < 0:
            raise ConfigError("default_theta must be nonnegative")


_PARAM_TYPES = {"agnostic": AgnosticParams, "icc": IccParams, "ltc": LtcParams}


def default_params(model: str):
    if model not in _PARAM_TYPES:
        raise ConfigError(f"unknown model {model!r}; expected one of {MODELS}")
    return _PARAM_TYPES[model]()


@dataclass(frozen=True)
class ModelConfig:
    """Model choice plus its parameters and quantization."""

    model: str = "agnostic"
    params: object = None
    quant: Quantization = field(default_factory=Quantization)

    def __post_init__(self):
        if self.model not in MODELS:
            raise ConfigError(f"unknown model {self.model!r}; expected one of {MODELS}")
        if self.params is None:
            object.__setattr__(self, "params", default_params(self.model))
        elif not isinstance(self.params, _PARAM_TYPES[self.model]):
            raise ConfigError(f"params of type {type(self.params).__name__} do not match model {self.model!r}")

    @classmethod
    def from_dict(cls, obj: dict) -> "ModelConfig":
        obj = dict(obj)
        model = obj.pop("model", "agnostic")
        if model not in MODELS:
            raise ConfigError(f"unknown model {model!r}; expected one of {MODELS}")
        qkeys = {k: obj.pop(k) for k in ("scale", "cap") if k in obj}
        ptype = _PARAM_TYPES[model]
        known = set(ptype.__dataclass_fields__)
        extra = set(obj) - known
        if extra:
            raise ConfigError(f"unknown keys for model {model!r}: {sorted(extra)}")
        try:
            return cls(model, ptype(**obj), Quantization(**qkeys))
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    def to_dict(self) -> dict:
        out = {"model": self.model}
        out.update(self.params.__dict__)
        out.update(scale=self.quant.scale, cap=self.quant.cap)
        return out


@dataclass(frozen=True, eq=False)
class CostGraph:
    """Integer edge costs over a network's topology for one (state, op)."""

    network: Network
    costs: np.ndarray  # aligned with network.src / network.dst
    op: int
    model: str

    @property
    def n(self) -> int:
        return self.network.n

    @property
    def max_cost(self) -> int:
        return int(self.costs.max()) if self.costs.size else 1

    @property
    def sentinel(self) -> int:
        """Distance reported for unreachable pairs: (n-1) times the largest edge cost.

        Every finite shortest path uses at most n-1 edges, so the sentinel
        dominates all finite distances and the triangle inequality survives.
        """
        return max(1, self.n - 1) * self.max_cost

    def forward(self):
        csr = self.network.out_csr
        return csr.indptr, csr.indices, np.ascontiguousarray(self.costs[csr.edge_ids])

    def reverse(self):
        csr = self.network.in_csr
        return csr.indptr, csr.indices, np.ascontiguousarray(self.costs[csr.edge_ids])


def _quantize(x: np.ndarray, quant: Quantization) -> np.ndarray:
    x = np.where(np.isfinite(x), x, float(quant.cap))
    out = np.floor(np.minimum(x, float(quant.cap)) + 0.5)
    return np.clip(out, 1, quant.cap).astype(np.int64)


def _comm_term(network: Network, quant: Quantization) -> np.ndarray:
    if network.comm is None:
        return np.ones(network.m)
    top = network.comm.max() if network.m else 1.0
    if top <= 0:
        return np.full(network.m, np.inf)
    with np.errstate(divide="ignore"):
        return -quant.scale * np.log(network.comm / top)


def _adopt_term(network: Network, quant: Quantization) -> np.ndarray:
    if network.adopt is None:
        return np.zeros(network.m)
    return -quant.scale * np.log(network.adopt)


def icc_nearest_active(network: Network, state: NetworkState, d_uv=None, p_uv=None):
    """Distance from the active set to every node and the tied activation mass.

    Returns ``(dist, p_a)`` where ``dist[v]`` is the shortest d-distance from
    any active node to v (inf if none) and ``p_a[v]`` sums p_uv over active
    in-neighbours u whose edge attains that distance.
    """
    state.check_network(network)
    if d_uv is None:
        d_uv = network.icc_distance if network.icc_distance is not None else np.ones(network.m)
    if p_uv is None:
        p_uv = network.activation_prob if network.activation_prob is not None else np.full(network.m, 0.1)
    d_uv = np.asarray(d_uv, np.float64)
    csr = network.out_csr
    active = np.flatnonzero(state.opinions != 0).astype(np.int64)
    dist = _kernels.multi_source_float(csr.indptr, csr.indices, np.ascontiguousarray(d_uv[csr.edge_ids]), active)
    u, v = network.src, network.dst
    tied = (state.opinions[u] != 0) & np.isclose(d_uv, dist[v], rtol=1e-12, atol=0.0)
    p_a = np.bincount(v[tied], weights=np.asarray(p_uv, np.float64)[tied], minlength=network.n)
    return dist, p_a


def _icc_pout(network, state, op, params: IccParams):
    eps = params.epsilon
    p = network.activation_prob if network.activation_prob is not None else np.full(network.m, params.default_p)
    d = network.icc_distance if network.icc_distance is not None else np.full(network.m, params.default_d)
    dist, p_a = icc_nearest_active(network, state, d, p)
    gu = state.opinions[network.src]
    gv = state.opinions[network.dst]
    out = np.full(network.m, eps)
    # the same-opinion case is checked first so that an edge between two
    # holders of op is free even though v itself is in the active set
    same = (gu == op) & (gv == op)
    farther = ~same & (d > dist[network.dst] * (1 + 1e-12))
    spread = ~same & ~farther & (gu == op) & (gv == 0)
    out[same] = 1.0
    pa = p_a[network.dst[spread]]
    with np.errstate(divide="ignore", invalid="ignore"):
        val = np.maximum(0.0, p[spread] - eps) / pa
    out[spread] = np.where((pa > 0) & (val > 0), val, eps)
    return out


def _ltc_pout(network, state, op, params: LtcParams):
    eps = params.epsilon
    if network.influence is not None:
        w = network.influence
    elif params.default_w is not None:
        w = np.full(network.m, params.default_w)
    else:
        w = 1.0 / network.in_degree[network.dst]
    theta = network.thresholds if network.thresholds is not None else np.full(network.n, params.default_theta)
    gu = state.opinions[network.src]
    gv = state.opinions[network.dst]
    active_in = gu != 0
    omega = np.bincount(network.dst[active_in], weights=w[active_in], minlength=network.n)
    out = np.full(network.m, eps)
    same = active_in & (gu == op) & (gv == op)
    om = omega[network.dst]
    spread = active_in & (gu == op) & (gv == 0) & (om >= theta[network.dst])
    out[same] = 1.0
    with np.errstate(divide="ignore", invalid="ignore"):
        val = (1 - eps) * w[spread] / om[spread]
    out[spread] = np.where(val > 0, val, eps)
    return out


def build_cost_graph(network: Network, state: NetworkState, op: int, config: ModelConfig | None = None) -> CostGraph:
    if config is None:
        config = ModelConfig()
    if op not in (1, -1):
        raise ValueError(f"op must be +1 or -1, got {op!r}")
    state.check_network(network)
    quant = config.quant
    base = _comm_term(network, quant) + _adopt_term(network, quant)
    if config.model == "agnostic":
        p = config.params
        gu = state.opinions[network.src]
        gv = state.opinions[network.dst]
        spread = np.where(gu == op, p.c_friendly, p.c_neutral).astype(np.float64)
        spread[(gu == -op) | (gv == -op)] = p.c_adverse
    else:
        pout = _icc_pout(network, state, op, config.params) if config.model == "icc" else _ltc_pout(
            network, state, op, config.params
        )
        spread = -quant.scale * np.log(pout)
    costs = _quantize(base + spread, quant)
    costs.setflags(write=False)
    return CostGraph(network, costs, op, config.model)


def shortest_paths_from(cost_graph: CostGraph, source: int) -> np.ndarray:
    """Exact single-source distances; unreachable nodes get the sentinel."""
    if not 0 <= source < cost_graph.n:
        raise ValidationError(f"source {source} out of range")
    indptr, indices, w = cost_graph.forward()
    dist = _kernels.sssp(indptr, indices, w, np.int64(source))
    dist[dist == _kernels.UNREACHED] = cost_graph.sentinel
    return dist


DENSE_LIMIT = 5000


def dense_ground_distance(cost_graph: CostGraph, limit: int = DENSE_LIMIT) -> np.ndarray:
    n = cost_graph.n
    if n > limit:
        raise ValidationError(f"dense ground distance refused for n={n} > {limit}")
    indptr, indices, w = cost_graph.forward()
    nodes = np.arange(n, dtype=np.int64)
    return _kernels.sssp_rows(indptr, indices, w, nodes, nodes, np.int64(cost_graph.sentinel))


def distance_rows(cost_graph: CostGraph, sources, targets, reverse: bool = False) -> np.ndarray:
    """Distances from each source to each target; with ``reverse`` the rows
    hold distances *to* each source from each target."""
    indptr, indices, w = cost_graph.reverse() if reverse else cost_graph.forward()
    return _kernels.sssp_rows(
        indptr, indices, w, np.asarray(sources, np.int64), np.asarray(targets, np.int64), np.int64(cost_graph.sentinel)
    )
