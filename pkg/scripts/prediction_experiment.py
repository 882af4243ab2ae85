"""Opinion prediction accuracy table (mean and std in percent).

Distance-based search with SND, hamming, quad-form and walk-dist, plus the
nhood-voting and community-lp baselines.
"""
import argparse
import json
import time

from snd import baselines
from snd.analysis import PredictionParams, make_measure, prediction_experiment
from snd.grounddist import ModelConfig
from snd.measure import SndConfig
from snd.simgen import SimParams, gen_series


def methods_for(network, model):
    comm = baselines.label_propagation(network)
    return {
        "snd": ("measure", make_measure("snd", network, SndConfig(ModelConfig(model)))),
        "hamming": ("measure", make_measure("hamming", network)),
        "quad-form": ("measure", make_measure("quadform", network)),
        "walk-dist": ("measure", make_measure("walkdist", network)),
        "nhood-voting": ("predict", lambda h, t, s: baselines.nhood_voting_predict(h, t, network, s)),
        "community-lp": ("predict", lambda h, t, s: baselines.community_lp_predict(h, t, network, s, comm)),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sim", default="{}", help="JSON overrides for SimParams")
    ap.add_argument("--model", default="agnostic")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--trials", type=int, default=10)
    ap.add_argument("--samples", type=int, default=100)
    args = ap.parse_args()
    sim = {"n": 2000, "steps": 10, "initial_adopters": 160, "sf_exponent": -2.5, "p_nbr": 0.1, "p_ext": 0.05}
    sim["seed"] = args.seed
    sim.update(json.loads(args.sim))
    t0 = time.perf_counter()
    series = gen_series(SimParams(**sim))
    params = PredictionParams(samples=args.samples, trials=args.trials, seed=args.seed)
    table = prediction_experiment(series, methods_for(series.network, args.model), params)
    for name, (mu, sigma, _) in table.items():
        print(f"{name:13s} {mu:6.2f} {sigma:6.2f}")
    print(f"elapsed {time.perf_counter() - t0:.1f}s")


if __name__ == "__main__":
    main()
