import itertools
import math

import numpy as np
import pytest

from hypershape.dehb import (
    DehbError,
    DehbOptimizer,
    MeanVarianceArms,
    NoisySphere,
    budget_ladder,
    de_crossover,
    de_mutate,
    de_mutation_vector,
    hyperband_brackets,
    run_ask_tell,
    uniform_random_search,
)
from hypershape.space import ParamSpec, SearchSpace


def unit_space(d: int) -> SearchSpace:
    return SearchSpace(tuple(ParamSpec(name=f"x{i}", lo=0.0, hi=1.0) for i in range(d)))


class TestBudgetLadder:
    def test_factor_three(self):
        assert budget_ladder(27000, 3, 3).rung_budgets == (3000, 9000, 27000)

    def test_single_rung(self):
        assert budget_ladder(1000, 3, 1).rung_budgets == (1000,)

    def test_repeated_halving(self):
        assert budget_ladder(8, 2, 4).rung_budgets == (1, 2, 4, 8)

    def test_too_small_rejected(self):
        with pytest.raises(DehbError):
            budget_ladder(8, 3, 3)

    def test_factor_relation_random_max(self):
        rng = np.random.default_rng(0)
        for max_budget in rng.integers(9, 10**7, size=100):
            ladder = budget_ladder(int(max_budget), 3, 3).rung_budgets
            assert len(ladder) == 3
            assert ladder[2] == max_budget
            assert ladder[1] == ladder[2] // 3
            assert ladder[0] == ladder[1] // 3
            assert all(b >= 1 for b in ladder)


def brute_force_brackets(eta: int, num_rungs: int) -> list[list[tuple[int, int]]]:
    """Independent implementation of the bracket recursion (test oracle)."""
    budgets = [eta ** r for r in range(num_rungs)]
    s_max = num_rungs - 1
    out = []
    for s in range(s_max, -1, -1):
        n = math.ceil((s_max + 1) / (s + 1) * eta**s - 1e-12)
        rungs = []
        count = n
        for r in range(s_max - s, num_rungs):
            rungs.append((budgets[r], count))
            count = count // eta
        out.append(rungs)
    return out


class TestHyperbandBrackets:
    def test_three_rung_schedule(self):
        ladder = budget_ladder(27000, 3, 3)
        brackets = hyperband_brackets(ladder)
        assert [b.schedule for b in brackets] == [
            ((3000, 9), (9000, 3), (27000, 1)),
            ((9000, 5), (27000, 1)),
            ((27000, 3),),
        ]

    def test_single_rung(self):
        brackets = hyperband_brackets(budget_ladder(500, 3, 1))
        assert len(brackets) == 1
        assert brackets[0].schedule == ((500, 1),)

    def test_eta2_four_rungs_start(self):
        brackets = hyperband_brackets(budget_ladder(8, 2, 4))
        assert brackets[0].schedule[0] == (1, 8)

    @pytest.mark.parametrize("eta,num_rungs", list(itertools.product((2, 3), (1, 2, 3, 4))))
    def test_matches_brute_force(self, eta, num_rungs):
        max_budget = eta ** (num_rungs - 1)
        brackets = hyperband_brackets(budget_ladder(max_budget, eta, num_rungs))
        assert [list(b.schedule) for b in brackets] == brute_force_brackets(eta, num_rungs)

    def test_counts_non_increasing(self):
        for bracket in hyperband_brackets(budget_ladder(10**6, 3, 4)):
            counts = [c for _, c in bracket.schedule]
            assert counts == sorted(counts, reverse=True)


class TestMutation:
    def test_hand_arithmetic(self):
        donor = de_mutation_vector(
            np.array([0.5]), np.array([0.8]), np.array([0.2]), 0.5
        )
        assert donor[0] == pytest.approx(0.8)

    def test_zero_factor_returns_base(self):
        x1 = np.array([0.3, 0.9])
        donor = de_mutation_vector(x1, np.array([0.1, 0.2]), np.array([0.8, 0.4]), 0.0)
        assert np.array_equal(donor, x1)

    def test_clip_repair(self):
        donor = de_mutation_vector(np.array([0.9]), np.array([1.0]), np.array([0.4]), 0.5)
        assert donor[0] == 1.0
        donor = de_mutation_vector(np.array([0.1]), np.array([0.0]), np.array([0.9]), 0.5)
        assert donor[0] == 0.0

    def test_empty_population_rejected(self):
        with pytest.raises(DehbError):
            de_mutate([], 0.5, np.random.default_rng(0), dimension=2)

    def test_small_population_fallback(self):
        rng = np.random.default_rng(1)
        donor = de_mutate([np.array([0.5, 0.5])], 0.5, rng, dimension=2)
        assert donor.shape == (2,)
        assert np.all((donor >= 0) & (donor <= 1))

    def test_parents_distinct_when_possible(self):
        pop = [np.full(1, v) for v in (0.1, 0.2, 0.3, 0.4)]
        rng = np.random.default_rng(2)
        for _ in range(50):
            donor = de_mutate(pop, 0.0, rng)  # F=0 exposes the base parent
            assert any(np.isclose(donor[0], v) for v in (0.1, 0.2, 0.3, 0.4))


class TestCrossover:
    def test_full_probability_copies_donor(self):
        t, d = np.array([0.1, 0.2, 0.3]), np.array([0.7, 0.8, 0.9])
        trial = de_crossover(t, d, 1.0, np.random.default_rng(0))
        assert np.array_equal(trial, d)

    def test_zero_probability_forces_single_dimension(self):
        t, d = np.zeros(6), np.ones(6)
        for seed in range(20):
            trial = de_crossover(t, d, 0.0, np.random.default_rng(seed))
            assert int(trial.sum()) == 1  # exactly the forced index

    def test_dimension_mismatch_rejected(self):
        with pytest.raises(DehbError):
            de_crossover(np.zeros(2), np.ones(3), 0.5, np.random.default_rng(0))

    def test_donor_fraction_matches_enumeration(self):
        """Simulated pattern frequencies vs exact enumeration of the rule."""
        d, p = 2, 0.5
        target, donor = np.zeros(d), np.ones(d)

        # Exact: P(pattern) = (1/d) sum_j [j in pattern] prod_{i != j} (p if i in pattern else 1-p)
        def exact(pattern: frozenset) -> float:
            total = 0.0
            for j in range(d):
                if j not in pattern:
                    continue
                prob = 1.0
                for i in range(d):
                    if i == j:
                        continue
                    prob *= p if i in pattern else 1 - p
                total += prob / d
            return total

        rng = np.random.default_rng(0)
        counts = {frozenset({0}): 0, frozenset({1}): 0, frozenset({0, 1}): 0}
        n = 10_000
        for _ in range(n):
            trial = de_crossover(target, donor, p, rng)
            counts[frozenset(np.nonzero(trial)[0].tolist())] += 1
        for pattern, count in counts.items():
            assert count / n == pytest.approx(exact(pattern), abs=0.02)


def constant_objective(value: float):
    return lambda config, budget, rng: value


class TestAskTell:
    def ladder(self):
        return budget_ladder(27000, 3, 3)

    def test_first_ask_is_lowest_rung_uniform(self):
        opt = DehbOptimizer(unit_space(3), self.ladder(), total_budget=10, seed=0)
        config, budget = opt.ask()
        assert budget == 3000
        assert np.all((config.unit >= 0) & (config.unit <= 1))

    def test_rung_completion_promotes_top_eta_share(self):
        opt = DehbOptimizer(unit_space(2), self.ladder(), total_budget=30, seed=1)
        told = []
        for fitness in range(9):
            config, budget = opt.ask()
            assert budget == 3000
            opt.tell(config, budget, float(fitness))
            told.append(config)
        promoted = []
        for _ in range(3):
            config, budget = opt.ask()
            assert budget == 9000
            promoted.append(config.id)
        top3 = {c.id for c in told[-3:]}  # fitnesses 6, 7, 8
        assert set(promoted) == top3

    def test_failed_never_promoted(self):
        opt = DehbOptimizer(unit_space(2), self.ladder(), total_budget=30, seed=2)
        configs = []
        for i in range(9):
            config, budget = opt.ask()
            opt.tell(config, budget, None if i < 6 else float(i))
            configs.append(config)
        promoted = {opt.ask()[0].id for _ in range(1)} | {opt.ask()[0].id, opt.ask()[0].id}
        failed_ids = {c.id for c in configs[:6]}
        assert not (promoted & failed_ids)

    def test_identical_seeds_and_tells_replay(self):
        a = DehbOptimizer(unit_space(4), self.ladder(), total_budget=8, seed=7)
        b = DehbOptimizer(unit_space(4), self.ladder(), total_budget=8, seed=7)
        stream_a, stream_b = [], []
        while True:
            ra, rb = a.ask(), b.ask()
            assert (ra is None) == (rb is None)
            if ra is None:
                break
            stream_a.append((ra[0].id, ra[1]))
            stream_b.append((rb[0].id, rb[1]))
            value = float(len(stream_a) % 5)
            a.tell(*ra, value)
            b.tell(*rb, value)
        assert stream_a == stream_b

    def test_all_asks_inside_hypercube(self):
        opt = DehbOptimizer(unit_space(5), self.ladder(), total_budget=20, seed=3)
        rng = np.random.default_rng(0)
        while True:
            issued = opt.ask()
            if issued is None:
                break
            config, budget = issued
            assert np.all((config.unit >= 0.0) & (config.unit <= 1.0))
            opt.tell(config, budget, float(rng.normal()))

    def test_tell_unknown_rejected(self):
        opt = DehbOptimizer(unit_space(2), self.ladder(), total_budget=5, seed=0)
        config, budget = opt.ask()
        other = unit_space(2).configuration([0.123, 0.456])
        with pytest.raises(DehbError):
            opt.tell(other, budget, 1.0)

    def test_exhaustion_signals_none(self):
        ladder = budget_ladder(100, 3, 1)
        opt = DehbOptimizer(unit_space(1), ladder, total_budget=2, seed=0)
        seen = 0
        while True:
            issued = opt.ask()
            if issued is None:
                break
            opt.tell(issued[0], issued[1], 0.0)
            seen += 1
        assert seen == 2
        assert opt.exhausted
        assert opt.ask() is None

    def test_full_iteration_step_total_matches_schedule(self):
        ladder = self.ladder()
        brackets = hyperband_brackets(ladder)
        expected = sum(b * c for br in brackets for b, c in br.schedule)
        opt = DehbOptimizer(
            unit_space(2), ladder, total_budget=expected / ladder.max_budget, seed=5
        )
        run_ask_tell(opt, constant_objective(1.0), seed=0)
        assert opt.steps_asked == expected
        assert opt.steps_told == expected

    def test_budget_overshoot_below_one_evaluation(self):
        ladder = self.ladder()
        opt = DehbOptimizer(unit_space(2), ladder, total_budget=3.5, seed=6)
        budgets = []

        def objective(config, budget, rng):
            budgets.append(budget)
            return 0.0

        run_ask_tell(opt, objective, seed=0)
        assert opt.steps_told / ladder.max_budget < 3.5 + 1.0
        # dropping the last evaluation leaves the total under the limit
        assert opt.steps_told - budgets[-1] < 3.5 * ladder.max_budget


class TestSelection:
    def test_trial_replaces_on_better_or_equal(self):
        ladder = budget_ladder(100, 3, 1)  # capacity 1: every ask targets member 0
        opt = DehbOptimizer(unit_space(2), ladder, total_budget=10, seed=0)
        config, budget = opt.ask()
        opt.tell(config, budget, 3.0)
        first_id = opt.subpops[100].members[0].config.id

        config, budget = opt.ask()
        opt.tell(config, budget, 5.0)  # better: replaces
        assert opt.subpops[100].members[0].config.id == config.id
        winner = config.id

        config, budget = opt.ask()
        opt.tell(config, budget, 1.0)  # worse: target kept
        assert opt.subpops[100].members[0].config.id == winner

        config, budget = opt.ask()
        opt.tell(config, budget, 5.0)  # tie: trial kept
        assert opt.subpops[100].members[0].config.id == config.id
        assert first_id != winner


class TestIncumbent:
    def test_empty_without_full_budget_results(self):
        opt = DehbOptimizer(unit_space(2), budget_ladder(27000, 3, 3), total_budget=9, seed=0)
        for _ in range(9):
            config, budget = opt.ask()
            opt.tell(config, budget, 1.0)  # all at 3000, never full budget
        assert opt.incumbent is None
        assert opt.incumbent_trajectory() == []

    def test_monotone_filter(self):
        ladder = budget_ladder(100, 3, 1)
        opt = DehbOptimizer(unit_space(1), ladder, total_budget=5, seed=1)
        for value in (3.0, 2.0, 5.0):
            config, budget = opt.ask()
            opt.tell(config, budget, value)
        traj = opt.incumbent_trajectory()
        assert [p.fitness for p in traj] == [3.0, 5.0]
        assert [p.evaluation_index for p in traj] == [0, 2]
        assert opt.incumbent.fitness == 5.0

    def test_final_state_appended_after_trailing_evals(self):
        ladder = budget_ladder(100, 3, 1)
        opt = DehbOptimizer(unit_space(1), ladder, total_budget=4, seed=2)
        for value in (3.0, 2.0, 5.0, 4.0):
            config, budget = opt.ask()
            opt.tell(config, budget, value)
        traj = opt.incumbent_trajectory()
        assert [p.fitness for p in traj] == [3.0, 5.0, 5.0]
        assert traj[-1].evaluation_index == 3
        assert traj[-1].cumulative_steps == opt.steps_told

    def test_monotone_over_random_run(self):
        opt = DehbOptimizer(unit_space(3), budget_ladder(27, 3, 3), total_budget=25, seed=3)
        rng = np.random.default_rng(1)
        run_ask_tell(opt, lambda c, b, r: float(rng.normal()), seed=0)
        fits = [p.fitness for p in opt.incumbent_trajectory()]
        assert fits == sorted(fits)

    def test_tie_keeps_existing_incumbent(self):
        ladder = budget_ladder(100, 3, 1)
        opt = DehbOptimizer(unit_space(1), ladder, total_budget=3, seed=4)
        config, budget = opt.ask()
        opt.tell(config, budget, 8.0)
        first = opt.incumbent.configuration.id
        config, budget = opt.ask()
        opt.tell(config, budget, 8.0)
        assert opt.incumbent.configuration.id == first

    def test_cumulative_steps_include_partial_budgets(self):
        ladder = budget_ladder(27000, 3, 3)
        opt = DehbOptimizer(unit_space(2), ladder, total_budget=9, seed=5)
        told_budgets = []

        def objective(config, budget, rng):
            told_budgets.append(budget)
            return float(len(told_budgets))

        run_ask_tell(opt, objective, seed=0)
        traj = opt.incumbent_trajectory()
        assert traj, "expected at least one full-budget evaluation"
        for point in traj:
            assert point.cumulative_steps == sum(told_budgets[: point.evaluation_index + 1])


class TestSyntheticObjectives:
    def test_noise_strictly_decreasing_in_budget(self):
        sphere = NoisySphere.random(dimension=6, seed=0, max_budget=27)
        assert sphere.sigma(3) > sphere.sigma(9) > sphere.sigma(27)

    def test_dehb_beats_random_search_on_noisy_sphere(self):
        """Paired-seed comparison at equal cumulative budget (small version)."""
        wins = 0
        pairs = 10
        for seed in range(pairs):
            sphere = NoisySphere.random(dimension=6, seed=100 + seed, noise_scale=0.01, max_budget=27)
            space = unit_space(6)
            ladder = budget_ladder(27, 3, 3)
            opt = DehbOptimizer(space, ladder, total_budget=60, seed=seed)
            run_ask_tell(opt, sphere.evaluate, seed=seed)
            dehb_regret = sphere.regret(opt.incumbent.configuration)

            n_rs = int(opt.steps_told // ladder.max_budget)
            best_rs, _ = uniform_random_search(
                space, sphere.evaluate, n_rs, ladder.max_budget, seed=10_000 + seed
            )
            rs_regret = sphere.regret(best_rs)
            wins += dehb_regret < rs_regret
        assert wins >= 7

    def test_mean_variance_arms_space(self):
        arms = MeanVarianceArms()
        space = arms.space()
        assert space.dimension == 1
        config = space.configuration([0.2])
        scores = arms.sample_scores(config, np.random.default_rng(0))
        assert scores.shape == (30,)
