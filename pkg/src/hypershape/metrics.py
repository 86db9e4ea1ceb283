"""Task-objective metrics, seed-averaged fitness, and report aggregation.

Internally the optimizer always maximizes; metrics for minimize-direction
environments are negated on the way in and reports use the raw values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .lander import DIRECTION_MAXIMIZE, DIRECTION_MINIMIZE
from .seeding import derive_seed
from .shaping import RewardParams, ShapingError
from .trainer import TrainerSpec, TrainingDivergedError, evaluate, train


class MetricError(ValueError):
    """Metric preconditions violated (empty/singleton samples, zero mean)."""


@dataclass(frozen=True)
class ScoreSample:
    """Task scores from one policy's evaluation episodes."""

    scores: np.ndarray
    direction: str = DIRECTION_MAXIMIZE

    def __post_init__(self) -> None:
        object.__setattr__(self, "scores", np.asarray(self.scores, dtype=float))
        if self.scores.size == 0:
            raise MetricError("score sample must be non-empty")
        if not np.all(np.isfinite(self.scores)):
            raise MetricError("score sample must be finite")
        if self.direction not in (DIRECTION_MAXIMIZE, DIRECTION_MINIMIZE):
            raise MetricError(f"unknown direction {self.direction!r}")

    @property
    def sign(self) -> float:
        return -1.0 if self.direction == DIRECTION_MINIMIZE else 1.0


def single_objective(sample: ScoreSample) -> float:
    """Mean task score, negated for minimize-direction environments."""
    return sample.sign * float(sample.scores.mean())


def multi_objective(sample: ScoreSample, ddof: int = 1) -> float:
    """Mean minus standard deviation of the task score (risk-averse metric)."""
    if sample.scores.size < 2:
        raise MetricError("multi-objective metric needs at least two scores")
    mean = float(sample.scores.mean())
    std = float(sample.scores.std(ddof=ddof))
    return sample.sign * mean - std


def coefficient_of_variation(sample: ScoreSample, ddof: int = 1) -> float:
    """100 * std / |mean| of the raw (non-negated) scores."""
    mean = float(sample.scores.mean())
    if mean == 0.0:
        raise MetricError("coefficient of variation undefined for zero mean")
    std = float(sample.scores.std(ddof=ddof)) if sample.scores.size > 1 else 0.0
    return 100.0 * std / abs(mean)


def apply_metric(sample: ScoreSample, metric: str, ddof: int = 1) -> float:
    if metric == "so":
        return single_objective(sample)
    if metric == "mo":
        return multi_objective(sample, ddof=ddof)
    raise MetricError(f"unknown metric {metric!r} (expected 'so' or 'mo')")


@dataclass(frozen=True)
class FitnessReport:
    """Seed-averaged fitness for one (configuration, budget) evaluation."""

    per_seed: tuple[float, ...]
    fitness: float
    seeds: tuple[int, ...]
    failed: bool = False
    task_means: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        if not self.failed and self.per_seed:
            assert math.isclose(
                self.fitness, sum(self.per_seed) / len(self.per_seed), rel_tol=1e-12
            )


FAILED_FITNESS = float("-inf")


def fitness(
    env,
    reward_params: RewardParams,
    base_spec: TrainerSpec,
    budget: int,
    seeds: Sequence[int],
    *,
    metric: str = "so",
    eval_episodes: int = 30,
    ddof: int = 1,
) -> FitnessReport:
    """Train once per seed, evaluate, and average the per-seed metric.

    Any diverged training (or degenerate reward parameters) poisons the whole
    report: the optimizer must not exploit configurations that crash
    selectively.
    """
    if len(seeds) == 0:
        raise MetricError("seed list must be non-empty")
    if callable(env):
        env = env()
    per_seed: list[float] = []
    task_means: list[float] = []
    for seed in seeds:
        spec = TrainerSpec(
            learning_rate=base_spec.learning_rate,
            discounting=base_spec.discounting,
            entropy_coef=base_spec.entropy_coef,
            batch_size=base_spec.batch_size,
            budget=budget,
            seed=seed,
        )
        try:
            policy = train(env, reward_params, spec)
        except (TrainingDivergedError, ShapingError):
            return FitnessReport(
                per_seed=(), fitness=FAILED_FITNESS, seeds=tuple(seeds), failed=True
            )
        pairs = evaluate(policy, env, reward_params, eval_episodes, derive_seed(seed, 0xE7A1))
        sample = ScoreSample(np.array([p[0] for p in pairs]), direction=env.direction)
        per_seed.append(apply_metric(sample, metric, ddof=ddof))
        task_means.append(float(sample.scores.mean()))
    value = float(np.mean(per_seed))
    return FitnessReport(
        per_seed=tuple(per_seed),
        fitness=value,
        seeds=tuple(seeds),
        failed=False,
        task_means=tuple(task_means),
    )


def aggregate_experiment(
    perf_runs: Sequence[Sequence[float]],
    cv_runs: Sequence[Sequence[float]] | None = None,
) -> tuple[float, float | None]:
    """Median-of-medians over optimization runs and their evaluations.

    Each run contributes the median of its evaluation values; the experiment
    value is the median of those run medians (robust to outlier runs).  CVs
    aggregate identically when provided.
    """
    if len(perf_runs) == 0:
        raise MetricError("aggregate_experiment needs at least one run")
    if any(len(run) == 0 for run in perf_runs):
        raise MetricError("every run needs at least one evaluation")
    perf = float(np.median([np.median(run) for run in perf_runs]))
    cv = None
    if cv_runs is not None:
        if len(cv_runs) != len(perf_runs) or any(len(run) == 0 for run in cv_runs):
            raise MetricError("cv_runs must mirror perf_runs")
        cv = float(np.median([np.median(run) for run in cv_runs]))
    return perf, cv


def bootstrap_compare(
    samples_a: Sequence[float],
    samples_b: Sequence[float],
    n_resamples: int = 2000,
    seed: int = 0,
) -> tuple[float, float]:
    """Bootstrap difference of medians with a two-sided sign p-estimate.

    Declared substitute for a full mixed-effects comparison: it answers
    "does A's median differ from B's" without modelling seed nesting.
    """
    a = np.asarray(samples_a, dtype=float)
    b = np.asarray(samples_b, dtype=float)
    if a.size < 5 or b.size < 5:
        raise MetricError("bootstrap comparison needs at least 5 samples per side")
    rng = np.random.default_rng(seed)
    point = float(np.median(a) - np.median(b))
    diffs = np.empty(n_resamples)
    for i in range(n_resamples):
        ra = a[rng.integers(0, a.size, a.size)]
        rb = b[rng.integers(0, b.size, b.size)]
        diffs[i] = np.median(ra) - np.median(rb)
    p_low = float(np.mean(diffs <= 0.0))
    p_high = float(np.mean(diffs >= 0.0))
    p = min(1.0, 2.0 * min(p_low, p_high))
    return point, p
