"""Coverage path planning on irregular hexagonal grids."""

__version__ = "0.1.0"

from .aoi_graph import AOIGraph, AOIInstance, build_graph, features
from .dataset import GenerationConfig, audit_hamiltonian, generate_instance
from .environment import EnvState, RewardConfig, reset, step, turn_penalty
from .geometry import AOIPolygon, SensorSpec, compute_obb, sample_polygon, tessellate
from .heuristics import METHODS, Route, exact_dfs, run
from .inference import InferenceConfig, best_of_k, greedy, two_opt
from .policy import PolicyDims, PolicyParams
from .training import TrainConfig, train

__all__ = [
    "AOIGraph", "AOIInstance", "AOIPolygon", "EnvState", "GenerationConfig",
    "InferenceConfig", "METHODS", "PolicyDims", "PolicyParams", "RewardConfig",
    "Route", "SensorSpec", "TrainConfig", "audit_hamiltonian", "best_of_k",
    "build_graph", "compute_obb", "exact_dfs", "features", "generate_instance",
    "greedy", "reset", "run", "sample_polygon", "step", "tessellate", "train",
    "turn_penalty", "two_opt",
]
