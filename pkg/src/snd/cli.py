"""Command-line entry point: ``snd {distance,detect,predict,generate,bench}``.

Every command writes a JSON manifest next to its main output recording the
arguments, seeds, input digests, outputs and wall time.

Exit codes: 0 success, 2 invalid input, 3 configuration error, 4 solver failure.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import baselines
from .analysis import (
    MEASURES,
    PredictionParams,
    anomaly_scores,
    distance_series,
    make_measure,
    prediction_experiment,
    roc,
    scale_distances,
)
from .grounddist import ConfigError, ModelConfig
from .measure import SndConfig, snd_exact
from .netcore import NetcoreError, NetworkState, load_network, load_state_series, write_network, write_state_series
from .simgen import FALLBACKS, GAMMA_RANGE, SimParams, gen_scale_free, gen_series
from .transport import SolverError

EXIT_OK, EXIT_INPUT, EXIT_CONFIG, EXIT_SOLVER = 0, 2, 3, 4
BASELINES = ("nhood-voting", "community-lp")


def _fmt(x: float) -> str:
    return f"{float(x):.10f}"


def _digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _load_config(path) -> dict:
    if path is None:
        return {}
    try:
        obj = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(obj, dict):
        raise ConfigError("config must be a JSON object")
    return obj


def _model_config(args, cfg: dict) -> ModelConfig:
    model_cfg = dict(cfg.get("model_config", {}))
    if args.model is not None:
        model_cfg["model"] = args.model
    elif isinstance(cfg.get("model"), str):
        model_cfg.setdefault("model", cfg["model"])
    for key in ("c_friendly", "c_neutral", "c_adverse", "epsilon", "default_p", "default_d", "default_w",
                "default_theta", "scale", "cap"):
        if key in cfg:
            model_cfg.setdefault(key, cfg[key])
    return ModelConfig.from_dict(model_cfg)


def _snd_config(args, cfg: dict) -> SndConfig:
    gamma = cfg.get("bank_gamma", getattr(args, "bank_gamma", None))
    kwargs = {"model": _model_config(args, cfg), "symmetric": not getattr(args, "asymmetric", False)}
    if gamma is not None:
        kwargs["bank_gamma"] = gamma
    try:
        return SndConfig(**kwargs)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _check_measure(name: str):
    if name not in MEASURES:
        raise ConfigError(f"unknown measure {name!r}; expected one of {MEASURES}")


def _write_manifest(path: Path, args, started: float, inputs, outputs, seeds=None, extra=None):
    record = {
        "command": args.command,
        "config": {k: v for k, v in vars(args).items() if k != "func"},
        "seeds": seeds or {},
        "inputs": {str(p): _digest(p) for p in inputs},
        "outputs": [str(p) for p in outputs],
        "wall_time_s": round(time.perf_counter() - started, 6),
    }
    if extra:
        record.update(extra)
    path.write_text(json.dumps(record, indent=2, sort_keys=True, default=str) + "\n")


def _manifest_path(args, out: Path) -> Path:
    if args.manifest:
        return Path(args.manifest)
    return out / "manifest.json" if out.is_dir() else out.with_name(out.name + ".manifest.json")


# ---------------------------------------------------------------------------


def cmd_distance(args) -> int:
    started = time.perf_counter()
    cfg = _load_config(args.config)
    measure_name = cfg.get("measure", args.measure)
    _check_measure(measure_name)
    network = load_network(args.graph)
    series = load_state_series(args.states, network)
    if measure_name == "snd":
        config = _snd_config(args, cfg)
        fast = not args.dense

        def measure(a, b):
            return snd_exact(a, b, network, config, fast=fast)
    else:
        measure = make_measure(measure_name, network)
    raw = [measure(a, b) for a, b in zip(series.states, series.states[1:])]
    active = [s.n_active for s in series.states[1:]]
    norm, scaled = scale_distances([float(x) for x in raw], active)
    out = Path(args.out)
    with open(out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "raw", "active", "normalized", "scaled"])
        for i, r in enumerate(raw):
            w.writerow([i + 1, _fmt(r), active[i], _fmt(norm[i]), _fmt(scaled[i])])
    _write_manifest(_manifest_path(args, out), args, started, [args.graph, args.states], [out])
    return EXIT_OK


def _read_distance_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows or not {"t", "raw", "active"} <= set(rows[0]):
        raise NetcoreError("distance CSV needs columns t, raw, active")
    t = np.array([int(r["t"]) for r in rows])
    raw = np.array([float(r["raw"]) for r in rows])
    active = np.array([float(r["active"]) for r in rows])
    return t, raw, active


def _parse_ids(text):
    if text is None:
        return None
    p = Path(text)
    if text.strip() and p.is_file():
        text = p.read_text()
    try:
        return [int(x) for x in text.replace("\n", ",").split(",") if x.strip()]
    except ValueError as exc:
        raise NetcoreError(f"cannot parse id list: {exc}") from exc


def cmd_detect(args) -> int:
    started = time.perf_counter()
    cfg = _load_config(args.config)
    inputs = []
    if args.distances:
        t, raw, active = _read_distance_csv(args.distances)
        inputs.append(args.distances)
    elif args.graph and args.states:
        measure_name = cfg.get("measure", args.measure)
        _check_measure(measure_name)
        network = load_network(args.graph)
        series = load_state_series(args.states, network)
        snd_cfg = _snd_config(args, cfg) if measure_name == "snd" else None
        ds = distance_series(series, make_measure(measure_name, network, snd_cfg))
        t, raw, active = ds.t, ds.raw, ds.active
        inputs += [args.graph, args.states]
    else:
        raise ConfigError("give --distances or both --graph and --states")
    _, scaled = scale_distances(raw, active)
    report = anomaly_scores(scaled, t)
    out = Path(args.out)
    rank = {int(tt): i + 1 for i, tt in enumerate(report.ranking)}
    with open(out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "score", "rank", "flagged"])
        for tt, s in zip(report.t, report.scores):
            w.writerow([int(tt), _fmt(s), rank[int(tt)], int(s > args.threshold)])
    outputs = [out]
    extra = {}
    truth = _parse_ids(args.truth)
    if truth:
        curve = roc(report, truth)
        roc_path = out.with_name(out.stem + "_roc.csv")
        with open(roc_path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["fpr", "tpr"])
            for f, tp in zip(curve.fpr, curve.tpr):
                w.writerow([_fmt(f), _fmt(tp)])
        outputs.append(roc_path)
        extra["auc"] = curve.auc
        extra["tpr_at_fpr_0.3"] = curve.tpr_at(0.3)
        print(f"AUC {_fmt(curve.auc)}")
    _write_manifest(_manifest_path(args, out), args, started, inputs, outputs, extra=extra)
    return EXIT_OK


def _prediction_methods(names, network, snd_cfg):
    methods = {}
    for name in names:
        if name in MEASURES:
            methods[name] = ("measure", make_measure(name, network, snd_cfg))
        elif name == "nhood-voting":
            methods[name] = ("predict", lambda s, tg, seed: baselines.nhood_voting_predict(s, tg, network, seed))
        elif name == "community-lp":
            comm = baselines.label_propagation(network)
            methods[name] = (
                "predict",
                lambda s, tg, seed, comm=comm: baselines.community_lp_predict(s, tg, network, seed, comm),
            )
        else:
            raise ConfigError(f"unknown method {name!r}")
    return methods


def cmd_predict(args) -> int:
    started = time.perf_counter()
    cfg = _load_config(args.config)
    network = load_network(args.graph)
    series = load_state_series(args.states, network)
    names = (args.measure or []) + (args.baseline or [])
    if not names:
        names = list(MEASURES) + list(BASELINES)
    snd_cfg = _snd_config(args, cfg)
    methods = _prediction_methods(names, network, snd_cfg)
    params = PredictionParams(
        n_targets=args.n_targets, samples=args.samples, trials=args.trials, history=args.history, seed=args.seed
    )
    targets = _parse_ids(args.targets)
    if targets is not None:
        truth = series.states[-1]
        if not targets or np.any(truth.opinions[np.asarray(targets)] == 0):
            raise NetcoreError("targets must be active users of the last state")
        params = PredictionParams(len(targets), args.samples, args.trials, args.history, args.seed)
    table = prediction_experiment(series, methods, params, fixed_targets=targets)
    out = Path(args.out)
    with open(out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["method", "mu", "sigma"])
        for name in names:
            mu, sigma, _ = table[name]
            w.writerow([name, f"{mu:.2f}", f"{sigma:.2f}"])
    _write_manifest(_manifest_path(args, out), args, started, [args.graph, args.states], [out], seeds={"seed": args.seed})
    return EXIT_OK


def cmd_generate(args) -> int:
    started = time.perf_counter()
    cfg = _load_config(args.config)
    lo, hi = GAMMA_RANGE
    fields = dict(
        n=args.n, sf_exponent=args.gamma, p_nbr=args.pnbr, p_ext=args.pext, steps=args.steps,
        initial_adopters=args.initial_adopters, activation_fraction=args.activation_fraction, seed=args.seed,
        no_neighbor=args.no_neighbor,
        anomaly_steps=tuple(_parse_ids(args.anomaly_steps) or ()), anomaly_p_nbr=args.anomaly_pnbr,
        anomaly_p_ext=args.anomaly_pext,
    )
    fields.update({k: v for k, v in cfg.items() if k in SimParams.__dataclass_fields__})
    if not lo <= fields["sf_exponent"] <= hi:
        raise ConfigError(f"gamma {fields['sf_exponent']} outside supported range [{lo}, {hi}]")
    try:
        params = SimParams(**fields)
    except (NetcoreError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    series = gen_series(params)
    net_path, states_path, truth_path = out / "network.json", out / "states.csv", out / "anomalies.txt"
    write_network(series.network, net_path)
    write_state_series(series, states_path)
    truth_path.write_text(",".join(str(s) for s in params.anomaly_steps) + "\n")
    _write_manifest(
        _manifest_path(args, out), args, started, [], [net_path, states_path, truth_path],
        seeds={"seed": params.seed}, extra={"params": params.__dict__},
    )
    return EXIT_OK


def bench_states(network, n_delta: int, active_fraction: float, seed):
    """A state with a fixed active fraction and a successor differing in ``n_delta`` users."""
    rng = np.random.default_rng(seed)
    n = network.n
    ops = np.zeros(n, np.int8)
    k = int(active_fraction * n)
    idx = rng.choice(n, k, replace=False)
    ops[idx] = rng.choice(np.array([-1, 1], np.int8), k)
    g1 = NetworkState(ops)
    ops2 = ops.copy()
    neutral = np.flatnonzero(ops == 0)
    flip = rng.choice(neutral, n_delta, replace=False)
    ops2[flip] = rng.choice(np.array([-1, 1], np.int8), n_delta)
    return g1, NetworkState(ops2)


def cmd_bench(args) -> int:
    started = time.perf_counter()
    sizes = _parse_ids(args.sizes) or []
    if not sizes:
        raise ConfigError("empty size list")
    ndeltas = _parse_ids(args.ndelta) or []
    if not ndeltas:
        raise ConfigError("empty n_delta list")
    snd_cfg = _snd_config(args, _load_config(args.config))
    out = Path(args.out)
    rows = []
    for n in sizes:
        network = gen_scale_free(n, args.gamma, args.seed)
        for nd in ndeltas:
            g1, g2 = bench_states(network, nd, args.active_fraction, args.seed + 1)
            for path in ("fast", "dense"):
                if path == "dense" and n > args.dense_max:
                    continue
                best = np.inf
                for _ in range(args.repeats):
                    t0 = time.perf_counter()
                    snd_exact(g1, g2, network, snd_cfg, fast=path == "fast")
                    best = min(best, time.perf_counter() - t0)
                rows.append((n, nd, path, best))
                print(f"n={n} n_delta={nd} {path}: {best:.4f}s", file=sys.stderr)
    with open(out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["n", "n_delta", "path", "seconds"])
        for n, nd, path, sec in rows:
            w.writerow([n, nd, path, f"{sec:.6f}"])
    _write_manifest(_manifest_path(args, out), args, started, [], [out], seeds={"seed": args.seed})
    return EXIT_OK


# ---------------------------------------------------------------------------


def _add_model_args(p):
    p.add_argument("--model", default=None, help="agnostic | icc | ltc (default agnostic)")
    p.add_argument("--bank-gamma", type=int, default=None, help="bank distance for one-bank-per-bin SND")
    p.add_argument("--asymmetric", action="store_true", help="use only the two forward SND terms")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="snd", description=__doc__.splitlines()[0])
    parser.add_argument("--config", default=None, help="JSON file overriding flag defaults")
    parser.add_argument("--manifest", default=None, help="manifest path (default: next to the output)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("distance", help="distances between consecutive states")
    p.add_argument("graph")
    p.add_argument("states")
    p.add_argument("--measure", default="snd")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--fast", action="store_true", default=True)
    g.add_argument("--dense", action="store_true")
    p.add_argument("--out", required=True)
    _add_model_args(p)
    p.set_defaults(func=cmd_distance)

    p = sub.add_parser("detect", help="anomaly scores and ROC")
    p.add_argument("--distances", help="CSV written by the distance command")
    p.add_argument("--graph")
    p.add_argument("--states")
    p.add_argument("--measure", default="snd")
    p.add_argument("--truth", help="anomalous transition ids, comma separated or a file")
    p.add_argument("--threshold", type=float, default=0.0)
    p.add_argument("--out", required=True)
    _add_model_args(p)
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("predict", help="opinion prediction accuracy table")
    p.add_argument("graph")
    p.add_argument("states")
    p.add_argument("--targets", help="target ids, comma separated or a file")
    p.add_argument("--measure", action="append", help=f"distance measure, repeatable: {MEASURES}")
    p.add_argument("--baseline", action="append", help=f"non-distance method, repeatable: {BASELINES}")
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--n-targets", type=int, default=20)
    p.add_argument("--history", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    _add_model_args(p)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("generate", help="synthetic network and state series")
    p.add_argument("--n", type=int, default=2000)
    p.add_argument("--gamma", type=float, default=-2.3)
    p.add_argument("--pnbr", type=float, default=0.08)
    p.add_argument("--pext", type=float, default=0.001)
    p.add_argument("--steps", type=int, default=10)
    p.add_argument("--anomaly-steps", default=None, help="comma-separated step ids")
    p.add_argument("--anomaly-pnbr", type=float, default=None)
    p.add_argument("--anomaly-pext", type=float, default=None)
    p.add_argument("--initial-adopters", type=int, default=160)
    p.add_argument("--activation-fraction", type=float, default=0.3)
    p.add_argument("--no-neighbor", choices=FALLBACKS, default="neutral")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("bench", help="fast vs dense SND timing")
    p.add_argument("--sizes", required=True, help="comma-separated network sizes")
    p.add_argument("--ndelta", default="200", help="comma-separated n_delta values")
    p.add_argument("--active-fraction", type=float, default=0.1)
    p.add_argument("--gamma", type=float, default=-2.3)
    p.add_argument("--dense-max", type=int, default=2000)
    p.add_argument("--repeats", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    _add_model_args(p)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NetcoreError, FileNotFoundError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except SolverError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
