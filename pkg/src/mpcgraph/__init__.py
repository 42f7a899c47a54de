"""Deterministic MPC simulator and graph-connectivity library.

Simulates a synchronous message-passing cluster with strict per-machine and
global space accounting, and builds derandomized graph algorithms on top of
it: limited-independence hash families, a conditional-probabilities seed
search, matching in degree-bounded graphs, vertex reduction, leader
contraction, and two full connectivity drivers with spanning-forest
extraction.
"""

from .sim import MpcCluster, MpcConfig
from .errors import (
    MpcError,
    SpaceExceeded,
    GlobalSpaceExceeded,
    ConfigError,
    ParamsInfeasible,
    NonTermination,
    ParseError,
)

__all__ = [
    "MpcCluster",
    "MpcConfig",
    "MpcError",
    "SpaceExceeded",
    "GlobalSpaceExceeded",
    "ConfigError",
    "ParamsInfeasible",
    "NonTermination",
    "ParseError",
]

__version__ = "0.1.0"
