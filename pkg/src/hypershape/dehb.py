"""Multi-fidelity evolutionary optimizer.

Differential evolution evolves one subpopulation per budget level; a full
ladder of budgets is scheduled as HyperBand brackets that start many cheap
evaluations and promote the best survivors to the next budget.  The whole
thing is driven through ask/tell so evaluations can run anywhere.

Conventions: fitness is maximized, failed evaluations count as -inf, and
the incumbent only moves on full-budget results.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .seeding import derive_seed
from .space import Configuration, SearchSpace


class DehbError(ValueError):
    """Ask/tell protocol violation or invalid schedule parameters."""


# ---------------------------------------------------------------------------
# Budget ladder and bracket schedule


@dataclass(frozen=True)
class BudgetLadder:
    """Ascending training-step budgets, each ``eta`` times the previous."""

    rung_budgets: tuple[int, ...]
    eta: int

    @property
    def num_rungs(self) -> int:
        return len(self.rung_budgets)

    @property
    def max_budget(self) -> int:
        return self.rung_budgets[-1]


def budget_ladder(max_budget: int, eta: int, num_rungs: int) -> BudgetLadder:
    """Build the ladder by repeated integer division of the top budget."""
    if eta < 2:
        raise DehbError(f"eta must be >= 2, got {eta}")
    if num_rungs < 1:
        raise DehbError(f"num_rungs must be >= 1, got {num_rungs}")
    if max_budget < eta ** (num_rungs - 1):
        raise DehbError(
            f"max_budget {max_budget} too small for {num_rungs} rungs at eta {eta}"
        )
    budgets = []
    b = int(max_budget)
    for _ in range(num_rungs):
        budgets.append(b)
        b //= eta
    return BudgetLadder(rung_budgets=tuple(reversed(budgets)), eta=eta)


@dataclass(frozen=True)
class Bracket:
    """One successive-halving schedule: (budget, population count) per rung."""

    index: int
    schedule: tuple[tuple[int, int], ...]

    def __post_init__(self) -> None:
        counts = [c for _, c in self.schedule]
        if any(c2 > c1 for c1, c2 in zip(counts, counts[1:])):
            raise DehbError("bracket population counts must be non-increasing")


def hyperband_brackets(ladder: BudgetLadder) -> list[Bracket]:
    """Standard HyperBand recursion over the ladder's rungs.

    Bracket ``s`` (from ``s_max`` down to 0) starts
    ``ceil((s_max + 1) / (s + 1) * eta^s)`` configurations at rung
    ``s_max - s`` and keeps the top ``floor(n / eta)`` per rung.
    """
    s_max = ladder.num_rungs - 1
    eta = ladder.eta
    brackets = []
    for s in range(s_max, -1, -1):
        numerator = (s_max + 1) * eta**s
        n = -(-numerator // (s + 1))  # exact integer ceil
        schedule = []
        count = n
        for rung in range(s_max - s, ladder.num_rungs):
            schedule.append((ladder.rung_budgets[rung], count))
            count //= eta
        brackets.append(Bracket(index=s, schedule=tuple(schedule)))
    return brackets


# ---------------------------------------------------------------------------
# Differential evolution primitives (rand/1/bin on the unit hypercube)


def de_mutation_vector(
    x1: np.ndarray, x2: np.ndarray, x3: np.ndarray, mutation_factor: float
) -> np.ndarray:
    """rand/1 donor, boundary-repaired by clipping into [0, 1]."""
    donor = x1 + mutation_factor * (x2 - x3)
    return np.clip(donor, 0.0, 1.0)


def de_mutate(
    population: Sequence[np.ndarray],
    mutation_factor: float,
    rng: np.random.Generator,
    dimension: int | None = None,
) -> np.ndarray:
    """Donor vector from three distinct parents sampled without replacement.

    Duplicate vectors collapse the difference term, so parents are drawn
    from the distinct members only; if fewer than three exist the missing
    parents are drawn uniformly from the hypercube.
    """
    if len(population) == 0:
        raise DehbError("cannot mutate an empty population")
    if dimension is None:
        dimension = len(population[0])
    distinct: dict[bytes, np.ndarray] = {}
    for member in population:
        vec = np.ascontiguousarray(member, dtype=float)
        distinct.setdefault(vec.tobytes(), vec)
    pool = list(distinct.values())
    take = min(3, len(pool))
    idx = rng.choice(len(pool), size=take, replace=False)
    parents = [pool[i] for i in idx]
    while len(parents) < 3:
        parents.append(rng.random(dimension))
    return de_mutation_vector(parents[0], parents[1], parents[2], mutation_factor)


def de_crossover(
    target: np.ndarray,
    donor: np.ndarray,
    crossover_prob: float,
    rng: np.random.Generator,
) -> np.ndarray:
    """Binomial crossover; one uniformly chosen dimension always comes from
    the donor so the trial can never equal the target."""
    target = np.asarray(target, dtype=float)
    donor = np.asarray(donor, dtype=float)
    if target.shape != donor.shape:
        raise DehbError(f"dimension mismatch: {target.shape} vs {donor.shape}")
    if not 0.0 <= crossover_prob <= 1.0:
        raise DehbError(f"crossover probability {crossover_prob} outside [0, 1]")
    d = target.shape[0]
    j_rand = int(rng.integers(d))
    mask = rng.random(d) < crossover_prob
    mask[j_rand] = True
    return np.where(mask, donor, target)


# ---------------------------------------------------------------------------
# Optimizer state machine


@dataclass(frozen=True)
class Incumbent:
    configuration: Configuration
    fitness: float
    budget: int
    evaluation_index: int


@dataclass
class _Member:
    config: Configuration
    fitness: float


@dataclass
class _Subpopulation:
    budget: int
    capacity: int
    members: list[_Member] = field(default_factory=list)

    def units(self) -> list[np.ndarray]:
        return [m.config.unit for m in self.members]

    def drop_worst(self) -> None:
        worst = min(range(len(self.members)), key=lambda i: self.members[i].fitness)
        self.members.pop(worst)


@dataclass
class _PendingJob:
    config: Configuration
    budget: int
    kind: str  # "init" | "trial" | "promote"
    target_index: int | None = None


@dataclass(frozen=True)
class TrajectoryPoint:
    evaluation_index: int
    cumulative_steps: int
    fitness: float


class DehbOptimizer:
    """Ask/tell driver for the bracket schedule.

    ``total_budget`` is expressed in full-training equivalents: asks keep
    coming while the issued step total is below ``total_budget * max_budget``
    (the final evaluation may overshoot by less than one full training).
    Sequential use (tell after every ask) is deterministic; with several asks
    outstanding, determinism is traded for throughput.
    """

    def __init__(
        self,
        space: SearchSpace,
        ladder: BudgetLadder,
        total_budget: float,
        seed: int,
        mutation_factor: float = 0.5,
        crossover_prob: float = 0.5,
    ):
        self.space = space
        self.ladder = ladder
        self.brackets = hyperband_brackets(ladder)
        self.mutation_factor = mutation_factor
        self.crossover_prob = crossover_prob
        self.rng = np.random.default_rng(seed)
        self.step_limit = float(total_budget) * ladder.max_budget

        capacities: dict[int, int] = {}
        for bracket in self.brackets:
            for budget, count in bracket.schedule:
                capacities[budget] = max(capacities.get(budget, 0), count)
        self.subpops = {
            b: _Subpopulation(budget=b, capacity=capacities[b]) for b in ladder.rung_budgets
        }

        self.steps_asked = 0
        self.steps_told = 0
        self.evaluations_told = 0
        self.incumbent: Incumbent | None = None
        self._changes: list[TrajectoryPoint] = []
        self._pending: dict[tuple[str, int], deque[_PendingJob]] = {}
        self._outstanding = 0
        self._inits_in_flight = 0

        # Bracket-walk state: jobs for the current rung are issued one ask at
        # a time; promotions are planned once the whole rung has been told.
        self._bracket_pos = 0
        self._rung_pos = 0
        self._rung_quota = self.brackets[0].schedule[0][1]
        self._rung_issued = 0
        self._rung_results: list[tuple[Configuration, float]] = []
        self._promotions: list[Configuration] | None = None

    # -- scheduling ---------------------------------------------------------

    @property
    def exhausted(self) -> bool:
        return self.steps_asked >= self.step_limit

    @property
    def outstanding(self) -> int:
        return self._outstanding

    def ask(self) -> tuple[Configuration, int] | None:
        """Next (configuration, budget) to evaluate.

        Returns None when the total budget is exhausted, or when every job of
        the current rung is in flight and the scheduler is waiting for tells.
        """
        if self.exhausted:
            return None
        while self._rung_issued >= self._rung_quota:
            if len(self._rung_results) < self._rung_quota:
                return None  # rung in flight; tells must arrive first
            self._advance()
        job = self._make_job()
        key = (job.config.id, job.budget)
        self._pending.setdefault(key, deque()).append(job)
        self._rung_issued += 1
        self._outstanding += 1
        self.steps_asked += job.budget
        return job.config, job.budget

    def _current_bracket(self) -> Bracket:
        return self.brackets[self._bracket_pos]

    def _current_rung(self) -> tuple[int, int]:
        return self._current_bracket().schedule[self._rung_pos]

    def _make_job(self) -> _PendingJob:
        budget, _ = self._current_rung()
        if self._promotions is not None:
            config = self._promotions[self._rung_issued]
            return _PendingJob(config=config, budget=budget, kind="promote")
        pop = self.subpops[budget]
        if len(pop.members) + self._inits_in_flight < pop.capacity or not pop.members:
            self._inits_in_flight += 1
            return _PendingJob(
                config=self.space.sample_uniform(self.rng), budget=budget, kind="init"
            )
        target_index = self._rung_issued % len(pop.members)
        donor = de_mutate(
            pop.units(), self.mutation_factor, self.rng, self.space.dimension
        )
        trial = de_crossover(
            pop.members[target_index].config.unit, donor, self.crossover_prob, self.rng
        )
        return _PendingJob(
            config=self.space.configuration(trial),
            budget=budget,
            kind="trial",
            target_index=target_index,
        )

    def _advance(self) -> None:
        """Move to the next rung (planning promotions) or the next bracket."""
        bracket = self._current_bracket()
        if self._rung_pos + 1 < len(bracket.schedule):
            _, next_count = bracket.schedule[self._rung_pos + 1]
            ranked = sorted(
                (r for r in self._rung_results if math.isfinite(r[1])),
                key=lambda r: r[1],
                reverse=True,
            )
            promoted = [config for config, _ in ranked[:next_count]]
            if promoted:
                self._rung_pos += 1
                self._promotions = promoted
                self._rung_quota = len(promoted)
                self._rung_issued = 0
                self._rung_results = []
                return
            # Nothing survived this rung; abandon the rest of the bracket.
        self._bracket_pos += 1
        if self._bracket_pos >= len(self.brackets):
            self._bracket_pos = 0  # next HyperBand iteration
        self._rung_pos = 0
        self._rung_quota = self._current_bracket().schedule[0][1]
        self._rung_issued = 0
        self._rung_results = []
        self._promotions = None

    # -- results ------------------------------------------------------------

    def tell(self, config: Configuration, budget: int, fitness: float | None) -> None:
        """Report an evaluation issued by :meth:`ask`.

        Non-finite or None fitness marks the evaluation failed (-inf): it can
        never be promoted, selected, or become the incumbent.
        """
        key = (config.id, int(budget))
        queue = self._pending.get(key)
        if not queue:
            raise DehbError(f"tell for unknown evaluation {key}")
        job = queue.popleft()
        if not queue:
            del self._pending[key]
        self._outstanding -= 1
        if job.kind == "init":
            self._inits_in_flight -= 1

        value = float("-inf")
        if fitness is not None and math.isfinite(fitness):
            value = float(fitness)

        self.steps_told += job.budget
        self.evaluations_told += 1
        self._rung_results.append((job.config, value))

        pop = self.subpops[job.budget]
        already_present = any(m.config.id == job.config.id for m in pop.members)
        if job.kind == "trial" and len(pop.members) >= pop.capacity:
            target = pop.members[job.target_index]
            if value >= target.fitness:
                pop.members[job.target_index] = _Member(job.config, value)
        elif job.kind == "promote" and already_present:
            pass  # re-injecting a copy would only erode population diversity
        else:
            pop.members.append(_Member(job.config, value))
            while len(pop.members) > pop.capacity:
                pop.drop_worst()

        if job.budget == self.ladder.max_budget and math.isfinite(value):
            if self.incumbent is None or value > self.incumbent.fitness:
                self.incumbent = Incumbent(
                    configuration=job.config,
                    fitness=value,
                    budget=job.budget,
                    evaluation_index=self.evaluations_told - 1,
                )
                self._changes.append(
                    TrajectoryPoint(
                        evaluation_index=self.evaluations_told - 1,
                        cumulative_steps=self.steps_told,
                        fitness=value,
                    )
                )

    def incumbent_trajectory(self) -> list[TrajectoryPoint]:
        """Incumbent fitness per change, closed with the final state."""
        points = list(self._changes)
        if points and self.evaluations_told - 1 > points[-1].evaluation_index:
            points.append(
                TrajectoryPoint(
                    evaluation_index=self.evaluations_told - 1,
                    cumulative_steps=self.steps_told,
                    fitness=points[-1].fitness,
                )
            )
        return points


# ---------------------------------------------------------------------------
# Synthetic objectives (optimizer test fixtures) and baselines


@dataclass(frozen=True)
class NoisySphere:
    """Quadratic bowl in the unit cube with budget-decreasing noise."""

    optimum: tuple[float, ...]
    noise_scale: float
    max_budget: int

    @classmethod
    def random(
        cls, dimension: int, seed: int, noise_scale: float = 0.3, max_budget: int = 27
    ) -> "NoisySphere":
        rng = np.random.default_rng(seed)
        return cls(
            optimum=tuple(rng.uniform(0.15, 0.85, size=dimension)),
            noise_scale=noise_scale,
            max_budget=max_budget,
        )

    def sigma(self, budget: int) -> float:
        return self.noise_scale * (self.max_budget / budget)

    def regret(self, config: Configuration) -> float:
        delta = config.unit - np.asarray(self.optimum)
        return float(delta @ delta)

    def evaluate(self, config: Configuration, budget: int, rng: np.random.Generator) -> float:
        return -self.regret(config) + self.sigma(budget) * float(rng.standard_normal())


@dataclass(frozen=True)
class MeanVarianceArms:
    """Two-armed objective trading a tiny mean edge for much higher variance."""

    arm_stats: tuple[tuple[float, float], ...] = ((1.0, 0.5), (0.95, 0.05))
    sample_size: int = 30

    def space(self) -> SearchSpace:
        from .space import ParamSpec

        choices = tuple(range(len(self.arm_stats)))
        return SearchSpace((ParamSpec(name="arm", kind="categorical", choices=choices),))

    def sample_scores(self, config: Configuration, rng: np.random.Generator) -> np.ndarray:
        mean, std = self.arm_stats[int(config.values["arm"])]
        return mean + std * rng.standard_normal(self.sample_size)


def run_ask_tell(
    optimizer: DehbOptimizer,
    evaluate_fn: Callable[[Configuration, int, np.random.Generator], float],
    seed: int,
) -> DehbOptimizer:
    """Drive the optimizer sequentially until its budget is exhausted."""
    index = 0
    while True:
        issued = optimizer.ask()
        if issued is None:
            break
        config, budget = issued
        rng = np.random.default_rng(derive_seed(seed, index))
        optimizer.tell(config, budget, evaluate_fn(config, budget, rng))
        index += 1
    return optimizer


def uniform_random_search(
    space: SearchSpace,
    evaluate_fn: Callable[[Configuration, int, np.random.Generator], float],
    n_evaluations: int,
    budget: int,
    seed: int,
) -> tuple[Configuration, float]:
    """Full-budget random-search baseline; returns its noisy best."""
    if n_evaluations < 1:
        raise DehbError("random search needs at least one evaluation")
    rng = np.random.default_rng(seed)
    best: tuple[Configuration, float] | None = None
    for index in range(n_evaluations):
        config = space.sample_uniform(rng)
        value = evaluate_fn(config, budget, np.random.default_rng(derive_seed(seed, index)))
        if best is None or value > best[1]:
            best = (config, value)
    return best
