"""Weighted sum-rate maximization for multi-IRS MISO downlinks on matrix manifolds."""
from .channel import ArrayGeometry, PathParams, ScenarioGeometry, sample_scenario
from .dmao import (
    DmaoOptions,
    SolveResult,
    baseline_mrt,
    baseline_random,
    baseline_zf,
    dmao,
    quantize_phases,
)
from .manifolds import ObliqueManifold, SphereManifold
from .rcg import SolverOptions, SolveTrace, rcg_maximize
from .system import ChannelSet, SystemConfig, dbm_to_watts

__version__ = "0.1.0"

__all__ = [
    "ArrayGeometry",
    "ChannelSet",
    "DmaoOptions",
    "ObliqueManifold",
    "PathParams",
    "ScenarioGeometry",
    "SolveResult",
    "SolveTrace",
    "SolverOptions",
    "SphereManifold",
    "SystemConfig",
    "baseline_mrt",
    "baseline_random",
    "baseline_zf",
    "dbm_to_watts",
    "dmao",
    "quantize_phases",
    "rcg_maximize",
    "sample_scenario",
]
