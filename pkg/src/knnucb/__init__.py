"""Nearest-neighbor UCB policies for contextual bandits with unbounded contexts."""

from .knn_store import ActionStore, NeighborEntry, brute_knn
from .policies import (
    INFINITE,
    AdaptiveKnnUcb,
    Finite,
    FixedKnnUcb,
    PolicyConfig,
    UcbValue,
    choose_action,
)
from .simulate import RegretTrace, fit_regret_exponent, run_experiment, run_trial

__all__ = [
    "ActionStore",
    "AdaptiveKnnUcb",
    "Finite",
    "FixedKnnUcb",
    "INFINITE",
    "NeighborEntry",
    "PolicyConfig",
    "RegretTrace",
    "UcbValue",
    "brute_knn",
    "choose_action",
    "fit_regret_exponent",
    "run_experiment",
    "run_trial",
]
