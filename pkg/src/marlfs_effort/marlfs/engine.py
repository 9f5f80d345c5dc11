from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .. import stats
from ..dataset import DataTable
from ..forest import ForestParams, fit_forest
from ..reward import RewardParams, compute_reward
from .dqn import QAgent, learn_step
from .env import STATE_DIM, FeatureSubset, SubsetEvaluator, aggregate_state, feature_statistics

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class MarlfsConfig:
    episodes: int = 100
    steps_per_episode: int = 30
    # probability of the greedy action; set epsilon_is_greedy=False to read it
    # as the probability of a random action instead
    epsilon: float = 0.9
    epsilon_is_greedy: bool = True
    gamma: float = 0.9
    batch_size: int = 32
    learning_rate: float = 0.01
    target_sync_every: int = 100
    buffer_capacity: int = 2000
    hidden: tuple[int, ...] = (64, 8)
    cv_folds: int = 5
    cv_seed: Optional[int] = None
    state_dim: int = STATE_DIM
    reward: RewardParams = field(default_factory=RewardParams)
    forest: ForestParams = field(default_factory=ForestParams)
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError("epsilon must lie in [0, 1]")
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError("gamma must lie in [0, 1)")
        if self.episodes < 1:
            raise ValueError("episodes must be >= 1")
        if self.steps_per_episode < 1:
            raise ValueError("steps_per_episode must be >= 1")
        if self.batch_size < 1 or self.batch_size > self.buffer_capacity:
            raise ValueError("batch_size must lie in [1, buffer_capacity]")
        if self.state_dim != STATE_DIM:
            raise ValueError(f"state_dim is fixed at {STATE_DIM} by the feature descriptor")

    @property
    def fold_seed(self) -> int:
        return self.forest.seed if self.cv_seed is None else self.cv_seed

    @property
    def greedy_probability(self) -> float:
        return self.epsilon if self.epsilon_is_greedy else 1.0 - self.epsilon


@dataclass
class SelectionResult:
    best_subset: FeatureSubset
    best_cv_mse: float
    feature_names: list[str]
    fold_seed: int
    reward_trace: list[float]
    mse_trace: list[float]
    subset_size_trace: list[int]
    episode_trace: list[int]
    step_trace: list[int]
    val_mse: float = math.nan
    val_mae: float = math.nan
    evaluations: int = 0
    elapsed: float = 0.0

    @property
    def selected_names(self) -> list[str]:
        return [self.feature_names[i] for i in self.best_subset.indices]

    def trace_rows(self):
        for row in zip(self.episode_trace, self.step_trace, self.reward_trace,
                       self.mse_trace, self.subset_size_trace):
            yield row


def make_agents(n_features: int, cfg: MarlfsConfig) -> list[QAgent]:
    sizes = (cfg.state_dim, *cfg.hidden, 2)
    return [QAgent.create(sizes, cfg.buffer_capacity, cfg.learning_rate,
                          rng=np.random.default_rng([cfg.seed, i]))
            for i in range(n_features)]


def run_marlfs(train: DataTable, val: Optional[DataTable], cfg: MarlfsConfig = MarlfsConfig()) -> SelectionResult:
    """Train one DQN agent per feature on the shared subset reward.

    Every episode starts from the full feature set. At each step all agents act
    on the shared state, the resulting subset is scored by cross-validated
    forest MSE on ``train``, and each agent stores the transition and takes one
    replay update. The subset with the lowest CV MSE over the whole run wins;
    ``val`` is touched once, to score a forest refit on that subset.
    """
    t0 = time.perf_counter()
    m = train.n_features
    if m < 1:
        raise ValueError("no features to select from")
    corr = stats.corr_matrix(train.X, train.feature_names)
    abs_corr = corr.abs()
    feat_stats = feature_statistics(train.X, train.y)
    evaluator = SubsetEvaluator(train.X, train.y, cfg.forest, cfg.cv_folds, cfg.fold_seed)
    agents = make_agents(m, cfg)
    greedy = cfg.greedy_probability

    best: Optional[FeatureSubset] = None
    best_mse = math.inf
    rewards, mses, sizes, eps, steps = [], [], [], [], []
    for episode in range(cfg.episodes):
        subset = FeatureSubset(np.ones(m, dtype=bool))
        state = aggregate_state(subset.indices, feat_stats, abs_corr)
        for step in range(cfg.steps_per_episode):
            actions = np.array([agent.act(state, greedy) for agent in agents])
            subset = FeatureSubset(actions == 1)
            if subset.cardinality == 0:
                reward, mse_cv = cfg.reward.empty_penalty, math.nan
            else:
                mse_cv = evaluator(subset)
                reward = compute_reward(mse_cv, stats.redundancy(subset, corr), cfg.reward)
            next_state = aggregate_state(subset.indices, feat_stats, abs_corr)
            terminal = step == cfg.steps_per_episode - 1
            for agent, a in zip(agents, actions):
                agent.buffer.push(state, int(a), reward, next_state, terminal)
                learn_step(agent, cfg.batch_size, cfg.gamma, cfg.target_sync_every)
            if mse_cv < best_mse:
                best_mse, best = mse_cv, subset
            rewards.append(reward)
            mses.append(mse_cv)
            sizes.append(subset.cardinality)
            eps.append(episode)
            steps.append(step)
            state = next_state
        log.debug("episode %d: best cv mse %.4f over %d evaluated subsets",
                  episode, best_mse, evaluator.evaluations)

    if best is None:
        # every step picked the empty set; fall back to all features
        best = FeatureSubset(np.ones(m, dtype=bool))
        best_mse = evaluator(best)

    result = SelectionResult(
        best_subset=best, best_cv_mse=best_mse, feature_names=list(train.feature_names),
        fold_seed=cfg.fold_seed, reward_trace=rewards, mse_trace=mses,
        subset_size_trace=sizes, episode_trace=eps, step_trace=steps,
        evaluations=evaluator.evaluations,
    )
    if val is not None:
        idx = best.indices
        model = fit_forest(train.X[:, idx], train.y, cfg.forest)
        pred = model.predict(val.X[:, idx])
        result.val_mse = stats.mse(val.y, pred)
        result.val_mae = stats.mae(val.y, pred)
    result.elapsed = time.perf_counter() - t0
    return result
