"""Social Network Distance: opinion-aware distances between network states."""
from .grounddist import ModelConfig, build_cost_graph
from .measure import SndConfig, fast_snd, snd, snd_exact
from .netcore import Network, NetworkState, StateSeries, load_network, load_state_series
from .transport import BankConfig, emd, emd_alpha, emd_hat, emd_star, solve_transport

__all__ = [
    "BankConfig",
    "ModelConfig",
    "Network",
    "NetworkState",
    "SndConfig",
    "StateSeries",
    "build_cost_graph",
    "emd",
    "emd_alpha",
    "emd_hat",
    "emd_star",
    "fast_snd",
    "load_network",
    "load_state_series",
    "snd",
    "snd_exact",
    "solve_transport",
]
