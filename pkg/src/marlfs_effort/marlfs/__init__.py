"""Multi-agent DQN feature selection: one select/deselect agent per feature."""
from .dqn import (
    Adam,
    QAgent,
    QNetwork,
    ReplayBuffer,
    Transition,
    bellman_target,
    epsilon_greedy,
    learn_step,
)
from .engine import MarlfsConfig, SelectionResult, run_marlfs
from .env import (
    STAT_NAMES,
    FeatureSubset,
    SubsetEvaluator,
    aggregate_state,
    env_step,
    feature_statistics,
    state_repr,
)

__all__ = [
    "Adam", "QAgent", "QNetwork", "ReplayBuffer", "Transition", "bellman_target",
    "epsilon_greedy", "learn_step", "MarlfsConfig", "SelectionResult", "run_marlfs",
    "STAT_NAMES", "FeatureSubset", "SubsetEvaluator", "aggregate_state", "env_step",
    "feature_statistics", "state_repr",
]
