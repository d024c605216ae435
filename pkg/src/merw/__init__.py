"""Simulation and numerical verification toolkit for the multi-dimensional elephant random walk."""
__version__ = "0.1.0"

from .engines import ENGINES, Record, Trajectory, WalkState, simulate
from .martingale import MartingaleTrack, lil_statistic, occupation, qsl_statistic, track
from .mcstats import EnsembleStats, Functional, run_ensemble
from .model import (
    DirectionCounts,
    DomainError,
    Regime,
    RegimeKind,
    SignedDirection,
    WalkConfig,
    apply_matrix,
    classify_regime,
    critical_memory,
    memory_to_a,
    step_distribution,
)

__all__ = [
    "DirectionCounts", "DomainError", "ENGINES", "EnsembleStats", "Functional",
    "MartingaleTrack", "Record", "Regime", "RegimeKind", "SignedDirection", "Trajectory",
    "WalkConfig", "WalkState", "apply_matrix", "classify_regime", "critical_memory",
    "lil_statistic", "memory_to_a", "occupation", "qsl_statistic", "run_ensemble",
    "simulate", "step_distribution", "track",
]
