"""Networks, opinion states, and their on-disk formats.

A :class:`Network` is a fixed directed topology with optional per-edge model
attributes; a :class:`NetworkState` assigns every node an opinion in
{-1, 0, +1}. Both are immutable once built.

Network files are JSON::

    {"n": 3, "edges": [{"src": 0, "dst": 1, "p": 0.5}, ...], "thresholds": [...]}

State series files are CSV with one state per row.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

# JSON key -> Network attribute
EDGE_ATTRS = {
    "comm": "comm",
    "adopt": "adopt",
    "p": "activation_prob",
    "d": "icc_distance",
    "w": "influence",
}


class NetcoreError(ValueError):
    pass


class ParseError(NetcoreError):
    pass


class ValidationError(NetcoreError):
    pass


def _frozen(a, dtype):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Csr:
    """Compressed adjacency: neighbors of u are indices[indptr[u]:indptr[u+1]].

    ``edge_ids`` maps each CSR slot back to the position in the edge list.
    """

    indptr: np.ndarray
    indices: np.ndarray
    edge_ids: np.ndarray


def _build_csr(n: int, tails: np.ndarray, heads: np.ndarray) -> Csr:
    order = np.lexsort((heads, tails))
    counts = np.bincount(tails, minlength=n)
    indptr = np.zeros(n + 1, np.int64)
    np.cumsum(counts, out=indptr[1:])
    return Csr(_frozen(indptr, np.int64), _frozen(heads[order], np.int64), _frozen(order, np.int64))


@dataclass(frozen=True, eq=False)
class Network:
    n: int
    src: np.ndarray
    dst: np.ndarray
    comm: np.ndarray | None = None
    adopt: np.ndarray | None = None
    activation_prob: np.ndarray | None = None
    icc_distance: np.ndarray | None = None
    influence: np.ndarray | None = None
    thresholds: np.ndarray | None = None

    def __post_init__(self):
        n = int(self.n)
        if n < 1:
            raise ValidationError(f"node count must be positive, got {self.n}")
        object.__setattr__(self, "n", n)
        src = np.asarray(self.src)
        dst = np.asarray(self.dst)
        if src.shape != dst.shape or src.ndim != 1:
            raise ValidationError("src and dst must be 1-d arrays of equal length")
        if src.size and not (np.issubdtype(src.dtype, np.integer) and np.issubdtype(dst.dtype, np.integer)):
            if not (np.all(src == np.round(src)) and np.all(dst == np.round(dst))):
                raise ValidationError("node ids must be integers")
        src = _frozen(src, np.int64)
        dst = _frozen(dst, np.int64)
        if src.size:
            lo = min(src.min(), dst.min())
            hi = max(src.max(), dst.max())
            if lo < 0 or hi >= n:
                bad = int(lo) if lo < 0 else int(hi)
                raise ValidationError(f"node id {bad} out of range [0, {n})")
            if np.any(src == dst):
                i = int(np.flatnonzero(src == dst)[0])
                raise ValidationError(f"self-loop at node {int(src[i])}")
            key = src * n + dst
            if np.unique(key).size != key.size:
                _, first, counts = np.unique(key, return_index=True, return_counts=True)
                i = int(first[np.argmax(counts > 1)])
                raise ValidationError(f"duplicate edge ({int(src[i])}, {int(dst[i])})")
        object.__setattr__(self, "src", src)
        object.__setattr__(self, "dst", dst)
        for name in EDGE_ATTRS.values():
            val = getattr(self, name)
            if val is None:
                continue
            arr = np.asarray(val, dtype=np.float64)
            if arr.shape != src.shape:
                raise ValidationError(f"attribute {name!r} must have one value per edge")
            if not np.all(np.isfinite(arr)) or np.any(arr < 0):
                raise ValidationError(f"attribute {name!r} must be finite and nonnegative")
            object.__setattr__(self, name, _frozen(arr, np.float64))
        if self.activation_prob is not None and np.any(self.activation_prob > 1):
            raise ValidationError("activation probabilities must lie in [0, 1]")
        if self.adopt is not None and (np.any(self.adopt <= 0) or np.any(self.adopt > 1)):
            raise ValidationError("adoption probabilities must lie in (0, 1]")
        if self.icc_distance is not None and np.any(self.icc_distance <= 0):
            raise ValidationError("ICC edge distances must be positive")
        if self.thresholds is not None:
            th = np.asarray(self.thresholds, dtype=np.float64)
            if th.shape != (n,) or np.any(th < 0) or not np.all(np.isfinite(th)):
                raise ValidationError("thresholds must be n finite nonnegative values")
            object.__setattr__(self, "thresholds", _frozen(th, np.float64))

    @property
    def m(self) -> int:
        return int(self.src.size)

    @cached_property
    def out_csr(self) -> Csr:
        return _build_csr(self.n, self.src, self.dst)

    @cached_property
    def in_csr(self) -> Csr:
        return _build_csr(self.n, self.dst, self.src)

    @cached_property
    def in_degree(self) -> np.ndarray:
        return _frozen(np.bincount(self.dst, minlength=self.n), np.int64)

    @cached_property
    def out_degree(self) -> np.ndarray:
        return _frozen(np.bincount(self.src, minlength=self.n), np.int64)

    def __eq__(self, other):
        if not isinstance(other, Network):
            return NotImplemented
        if self.n != other.n or not (np.array_equal(self.src, other.src) and np.array_equal(self.dst, other.dst)):
            return False
        for name in (*EDGE_ATTRS.values(), "thresholds"):
            a, b = getattr(self, name), getattr(other, name)
            if (a is None) != (b is None) or (a is not None and not np.array_equal(a, b)):
                return False
        return True

    __hash__ = object.__hash__

    def with_attrs(self, **attrs) -> "Network":
        fields = {name: getattr(self, name) for name in (*EDGE_ATTRS.values(), "thresholds")}
        fields.update(attrs)
        return Network(self.n, self.src, self.dst, **fields)


@dataclass(frozen=True, eq=False)
class NetworkState:
    opinions: np.ndarray

    def __post_init__(self):
        ops = np.asarray(self.opinions)
        if ops.ndim != 1:
            raise ValidationError("opinions must be a 1-d vector")
        if ops.size and not np.all(np.isin(ops, (-1, 0, 1))):
            bad = ops[~np.isin(ops, (-1, 0, 1))][0]
            raise ValidationError(f"opinion {bad!r} not in {{-1, 0, 1}}")
        object.__setattr__(self, "opinions", _frozen(ops, np.int8))

    def __len__(self):
        return int(self.opinions.size)

    def __eq__(self, other):
        if not isinstance(other, NetworkState):
            return NotImplemented
        return np.array_equal(self.opinions, other.opinions)

    __hash__ = object.__hash__

    @property
    def n_active(self) -> int:
        return int(np.count_nonzero(self.opinions))

    def check_network(self, network: Network) -> None:
        if len(self) != network.n:
            raise ValidationError(f"state has {len(self)} entries, network has {network.n} nodes")


@dataclass(frozen=True, eq=False)
class StateSeries:
    network: Network
    states: tuple
    timestamps: tuple = field(default=())

    def __post_init__(self):
        states = tuple(self.states)
        if not states:
            raise ValidationError("at least one state required")
        for s in states:
            s.check_network(self.network)
        ts = tuple(int(t) for t in self.timestamps) if self.timestamps else tuple(range(len(states)))
        if len(ts) != len(states):
            raise ValidationError("one timestamp per state required")
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise ValidationError("timestamps must be strictly increasing")
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "timestamps", ts)

    def __len__(self):
        return len(self.states)

    def __getitem__(self, i):
        return self.states[i]


def positive_part(state: NetworkState) -> np.ndarray:
    return (state.opinions == 1).astype(np.float64)


def negative_part(state: NetworkState) -> np.ndarray:
    return (state.opinions == -1).astype(np.float64)


def opinion_part(state: NetworkState, op: int) -> np.ndarray:
    if op not in (1, -1):
        raise ValueError(f"op must be +1 or -1, got {op!r}")
    return positive_part(state) if op == 1 else negative_part(state)


# ---------------------------------------------------------------------------
# file formats


def network_to_dict(network: Network) -> dict:
    edges = []
    cols = {key: getattr(network, attr) for key, attr in EDGE_ATTRS.items()}
    for e in range(network.m):
        rec = {"src": int(network.src[e]), "dst": int(network.dst[e])}
        for key, arr in cols.items():
            if arr is not None:
                rec[key] = float(arr[e])
        edges.append(rec)
    out = {"n": network.n, "edges": edges}
    if network.thresholds is not None:
        out["thresholds"] = [float(x) for x in network.thresholds]
    return out


def network_from_dict(obj) -> Network:
    if not isinstance(obj, dict) or "n" not in obj or "edges" not in obj:
        raise ParseError('network JSON must be an object with "n" and "edges"')
    n = obj["n"]
    if not isinstance(n, int) or isinstance(n, bool):
        raise ParseError(f'"n" must be an integer, got {n!r}')
    edges = obj["edges"]
    if not isinstance(edges, list):
        raise ParseError('"edges" must be a list')
    src, dst = [], []
    attrs: dict[str, list] = {key: [] for key in EDGE_ATTRS}
    for i, rec in enumerate(edges):
        if not isinstance(rec, dict) or "src" not in rec or "dst" not in rec:
            raise ParseError(f"edge {i} must be an object with src and dst")
        s, d = rec["src"], rec["dst"]
        if not all(isinstance(x, int) and not isinstance(x, bool) for x in (s, d)):
            raise ParseError(f"edge {i}: src/dst must be integers")
        src.append(s)
        dst.append(d)
        for key in EDGE_ATTRS:
            if key in rec:
                if not isinstance(rec[key], (int, float)) or isinstance(rec[key], bool):
                    raise ParseError(f"edge {i}: attribute {key!r} must be a number")
                attrs[key].append(float(rec[key]))
    kwargs = {}
    for key, vals in attrs.items():
        if not vals:
            continue
        if len(vals) != len(src):
            raise ValidationError(f"attribute {key!r} present on some edges but not all")
        kwargs[EDGE_ATTRS[key]] = np.array(vals)
    if obj.get("thresholds") is not None:
        th = obj["thresholds"]
        if not isinstance(th, list):
            raise ParseError('"thresholds" must be a list')
        kwargs["thresholds"] = np.array(th, dtype=np.float64)
    return Network(n, np.array(src, dtype=np.int64), np.array(dst, dtype=np.int64), **kwargs)


def load_network(path) -> Network:
    try:
        obj = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    return network_from_dict(obj)


def write_network(network: Network, path) -> None:
    Path(path).write_text(json.dumps(network_to_dict(network)) + "\n")


def _parse_rows(rows: Iterable[Sequence[str]]) -> list[list[int]]:
    out = []
    for lineno, row in enumerate(rows, 1):
        cells = [c.strip() for c in row]
        if not cells or all(c == "" for c in cells):
            continue
        try:
            vals = [int(c) for c in cells]
        except ValueError:
            if not out and lineno == 1:
                continue  # header
            raise ParseError(f"row {lineno}: non-integer entry") from None
        out.append(vals)
    return out


def load_state_series(path, network: Network) -> StateSeries:
    with open(path, newline="") as fh:
        rows = _parse_rows(csv.reader(fh))
    if not rows:
        raise ValidationError("at least one state required")
    states = []
    for i, row in enumerate(rows):
        if len(row) != network.n:
            raise ValidationError(f"state {i} has {len(row)} entries, network has {network.n} nodes")
        states.append(NetworkState(np.array(row)))
    return StateSeries(network, tuple(states))


def write_state_series(series: StateSeries, path, header: bool = False) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if header:
            w.writerow([f"t{i}" for i in range(series.network.n)])
        for s in series.states:
            w.writerow([int(x) for x in s.opinions])
