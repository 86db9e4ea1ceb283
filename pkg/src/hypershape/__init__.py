"""hypershape: joint tuning of RL hyperparameters and reward-shaping weights.

A differential-evolution/HyperBand optimizer searches hyperparameters and
reward-shape weights together, evaluating configurations by training a small
policy-gradient agent on a 2D lander at multiple step budgets.
"""

from ._core import backend_name
from .dehb import (
    Bracket,
    BudgetLadder,
    DehbOptimizer,
    budget_ladder,
    de_crossover,
    de_mutate,
    hyperband_brackets,
)
from .lander import LanderConfig, LanderEnv, task_score
from .metrics import (
    ScoreSample,
    aggregate_experiment,
    bootstrap_compare,
    coefficient_of_variation,
    fitness,
    multi_objective,
    single_objective,
)
from .shaping import RewardComponents, RewardParams, explicit_scale, implicit_ranges, shaped_reward
from .space import Configuration, ParamSpec, SearchSpace, weight_search_range
from .trainer import Policy, TrainerSpec, evaluate, train

__version__ = "0.1.0"

__all__ = [
    "BudgetLadder",
    "Bracket",
    "Configuration",
    "DehbOptimizer",
    "LanderConfig",
    "LanderEnv",
    "ParamSpec",
    "Policy",
    "RewardComponents",
    "RewardParams",
    "ScoreSample",
    "SearchSpace",
    "TrainerSpec",
    "aggregate_experiment",
    "backend_name",
    "bootstrap_compare",
    "budget_ladder",
    "coefficient_of_variation",
    "de_crossover",
    "de_mutate",
    "evaluate",
    "explicit_scale",
    "fitness",
    "hyperband_brackets",
    "implicit_ranges",
    "multi_objective",
    "shaped_reward",
    "single_objective",
    "task_score",
    "train",
    "weight_search_range",
]
