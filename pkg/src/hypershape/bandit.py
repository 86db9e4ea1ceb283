"""One-step continuous bandit used to validate the trainer in isolation.

Reward is ``-(a - target)^2`` with a known optimum, so gradient estimates
and learned policies can be checked against closed forms.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._core import FLAG_LANDED
from .lander import DIRECTION_MAXIMIZE, Episode
from .shaping import RewardParams


@dataclass(frozen=True)
class BanditConfig:
    target: float = 0.7
    episode_cap: int = 1


class BanditEnv:
    name = "bandit"
    direction = DIRECTION_MAXIMIZE
    feature_dim = 1
    action_dim = 1
    component_signs: dict[str, int] = {}
    unweighted_components: frozenset[str] = frozenset()

    def __init__(self, config: BanditConfig | None = None):
        self.config = config or BanditConfig()

    @property
    def episode_cap(self) -> int:
        return self.config.episode_cap

    @property
    def default_reward_params(self) -> RewardParams:
        return RewardParams(alpha=1.0, weights={})

    def run_episode(
        self,
        policy_weights: np.ndarray,
        policy_log_std: np.ndarray,
        rng: np.random.Generator,
        max_steps: int | None = None,
        state=None,
        reset_seed: int | None = None,
    ) -> Episode:
        noise = rng.standard_normal((1, 1))
        mu = float(policy_weights[0, 0])
        a = mu + float(np.exp(policy_log_std[0])) * noise[0, 0]
        reward = -((a - self.config.target) ** 2)
        return Episode(
            features=np.ones((1, 1)),
            raw_actions=np.array([[a]]),
            base=np.array([reward]),
            shaping={},
            flag=FLAG_LANDED,
            steps=1,
            final_state=(a,),
            episode_cap=self.config.episode_cap,
        )

    def episode_task_score(self, episode: Episode) -> float:
        """Task score is the reward itself (higher is better)."""
        return float(episode.base[0])
