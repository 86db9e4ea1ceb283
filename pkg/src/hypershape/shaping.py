"""Weighted-sum reward shaping and reward-scale normalization.

The shaped per-step reward is ``alpha * (base + sum_i sign_i * w_i * f_i +
sum_j sign_j * f_j)`` where the first sum runs over weighted shaping
components and the second over components declared unweighted by the
environment (e.g. fuel).  Terminal bonuses/penalties live in ``base`` and are
never weighted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .space import ROLE_REWARD_SCALE, ROLE_REWARD_WEIGHT, ParamSpec, SearchSpace


class ShapingError(ValueError):
    """Malformed reward parameters."""


class DegenerateWeightsError(ShapingError):
    """All-zero weight vector; the evaluation using it is treated as failed."""


@dataclass(frozen=True)
class RewardParams:
    """Reward scale alpha and the named shaping weights."""

    alpha: float
    weights: Mapping[str, float]

    def __post_init__(self) -> None:
        if not (math.isfinite(self.alpha) and self.alpha > 0):
            raise ShapingError(f"alpha must be a positive finite real, got {self.alpha}")
        for name, w in self.weights.items():
            if not math.isfinite(w):
                raise ShapingError(f"weight {name!r} must be finite, got {w}")

    def replace_weights(self, weights: Mapping[str, float]) -> "RewardParams":
        return RewardParams(alpha=self.alpha, weights=dict(weights))


@dataclass(frozen=True)
class RewardComponents:
    """Per-step reward decomposition emitted by an environment.

    ``base`` carries the sparse/terminal reward; ``shaping`` holds unsigned
    component magnitudes (signs are declared once per environment).
    """

    base: float
    shaping: Mapping[str, float]


def shaped_reward(
    components: RewardComponents,
    params: RewardParams,
    signs: Mapping[str, int],
    unweighted: frozenset[str] = frozenset(),
) -> float:
    """Combine one step's reward components into the shaped scalar reward."""
    total = components.base
    for name, magnitude in components.shaping.items():
        sign = signs.get(name)
        if sign is None:
            raise ShapingError(f"component {name!r} has no declared sign")
        if name in unweighted:
            total += sign * magnitude
        else:
            try:
                w = params.weights[name]
            except KeyError:
                raise ShapingError(f"no weight declared for component {name!r}") from None
            total += sign * w * magnitude
    return params.alpha * total


def shaped_reward_steps(
    base: np.ndarray,
    shaping: Mapping[str, np.ndarray],
    params: RewardParams,
    signs: Mapping[str, int],
    unweighted: frozenset[str] = frozenset(),
) -> np.ndarray:
    """Vectorized :func:`shaped_reward` over a whole episode."""
    total = np.array(base, dtype=float, copy=True)
    for name, magnitudes in shaping.items():
        sign = signs.get(name)
        if sign is None:
            raise ShapingError(f"component {name!r} has no declared sign")
        if name in unweighted:
            total += sign * magnitudes
        else:
            try:
                w = params.weights[name]
            except KeyError:
                raise ShapingError(f"no weight declared for component {name!r}") from None
            total += sign * w * magnitudes
    return params.alpha * total


def explicit_scale(
    weights: Mapping[str, float], default_weights: Mapping[str, float]
) -> dict[str, float]:
    """Rescale a weight vector to the L1 norm of the environment defaults.

    Keeps the direction of ``weights`` while pinning its magnitude, so a
    separately optimized reward scale is the only thing controlling overall
    reward size.
    """
    norm = sum(abs(w) for w in weights.values())
    if norm <= 0.0:
        raise DegenerateWeightsError("cannot rescale an all-zero weight vector")
    target = sum(abs(w) for w in default_weights.values())
    factor = target / norm
    return {name: w * factor for name, w in weights.items()}


def implicit_ranges(space: SearchSpace, norm_upper: float) -> SearchSpace:
    """Widen reward-weight ranges by ``norm_upper`` and drop the scale spec.

    The returned space is for implicit scaling runs: alpha is frozen at 1
    (the caller carries it in the frozen-values map) and each weight range is
    multiplied by the norm bound the explicit variant would have applied.
    """
    if not norm_upper > 0:
        raise ShapingError(f"norm_upper must be positive, got {norm_upper}")
    specs = []
    for s in space.specs:
        if s.role == ROLE_REWARD_SCALE:
            continue
        if s.role == ROLE_REWARD_WEIGHT and s.kind == "continuous":
            specs.append(
                ParamSpec(
                    name=s.name,
                    kind=s.kind,
                    lo=s.lo * norm_upper,
                    hi=s.hi * norm_upper,
                    log_scale=s.log_scale,
                    role=s.role,
                )
            )
        else:
            specs.append(s)
    return SearchSpace(tuple(specs))
