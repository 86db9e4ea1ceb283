"""Experiment orchestration: optimization runs, resume, the 5x10 evaluation
protocol, and CSV exports.

Directory layout per experiment (one arm per config):
  outdir/optimize_seed{k}.jsonl   evaluation journal per optimization seed
  outdir/incumbent_seed{k}.json   final incumbent (written when a run finishes)
  outdir/evaluation.jsonl         journal of incumbent evaluation trainings
  outdir/report.json              aggregated protocol results
  outdir/exports/*.csv            rendered exports
"""

from __future__ import annotations

import json
import math
import os
import time
from concurrent.futures import FIRST_COMPLETED, ProcessPoolExecutor, wait
from dataclasses import dataclass
from typing import Any, Mapping, Sequence

import numpy as np

from .config import ConfigError, ExperimentConfig
from .dehb import DehbOptimizer, budget_ladder
from .journal import (
    STATUS_FAILED,
    STATUS_OK,
    EvalRecord,
    JournalIntegrityError,
    JournalWriter,
    read_journal,
    validate_record,
)
from .lander import DIRECTION_MINIMIZE
from .metrics import FitnessReport, ScoreSample, aggregate_experiment
from .metrics import coefficient_of_variation as cv_percent
from .metrics import fitness as fitness_report
from .seeding import arm_code, derive_seed
from .shaping import RewardParams, ShapingError, explicit_scale
from .space import Configuration, SearchSpace
from .trainer import TrainerSpec, TrainingDivergedError, evaluate, train

_FIXED_SEED_TAG = 0xF12ED
_RS_TAG = 0x52535253
_EVAL_TAG = 0xE7A1


class EvaluationError(RuntimeError):
    """Missing inputs for the evaluation protocol (e.g. an unfinished run)."""


@dataclass
class RunResult:
    opt_seed_index: int
    journal_path: str
    evaluations: int
    steps_told: int
    exhausted: bool
    incumbent_values: dict[str, Any] | None
    incumbent_fitness: float | None
    trajectory: list[tuple[int, int, float]]  # (eval index, cumulative steps, fitness)


@dataclass
class IncumbentReport:
    """One optimization seed's incumbent and its evaluation trainings."""

    opt_seed_index: int
    values: dict[str, Any]
    task_means: list[float]
    task_cvs: list[float]
    return_means: list[float]
    return_cvs: list[float]
    episode_scores: list[list[float]]


# ---------------------------------------------------------------------------
# Fitness evaluation of one configuration


def build_reward_params(
    values: Mapping[str, Any],
    reward_defaults: Mapping[str, float],
    scaling_mode: str,
) -> RewardParams:
    """Reward parameters for one evaluation, applying the scaling mode.

    Raises ShapingError for degenerate settings (all-zero weights under
    explicit scaling, non-positive alpha); callers treat that evaluation as
    failed rather than aborting the experiment.
    """
    weights = {
        name: float(values.get(name, default)) for name, default in reward_defaults.items()
    }
    alpha = float(values.get("alpha", 1.0))
    if scaling_mode == "explicit" and weights:
        weights = explicit_scale(weights, reward_defaults)
    return RewardParams(alpha=alpha, weights=weights)


def _evaluate_values(
    env,
    cfg: ExperimentConfig,
    base_spec: TrainerSpec,
    values: Mapping[str, Any],
    budget: int,
    seeds: Sequence[int],
) -> FitnessReport:
    try:
        reward_params = build_reward_params(values, cfg.reward_defaults, cfg.scaling_mode)
    except ShapingError:
        return FitnessReport(per_seed=(), fitness=float("-inf"), seeds=tuple(seeds), failed=True)
    spec = base_spec.with_values(dict(values))
    return fitness_report(
        env,
        reward_params,
        spec,
        budget,
        seeds,
        metric=cfg.optimizer.metric,
        eval_episodes=cfg.optimizer.eval_episodes,
        ddof=cfg.optimizer.std_ddof,
    )


def _fitness_task(payload: dict) -> dict:
    """Worker-pool entry point; rebuilds everything from plain data."""
    cfg = ExperimentConfig.from_dict(payload["config"])
    env = cfg.build_env()
    base_spec = TrainerSpec(**cfg.trainer_baselines)
    report = _evaluate_values(
        env, cfg, base_spec, payload["values"], payload["budget"], payload["seeds"]
    )
    return {
        "per_seed": list(report.per_seed),
        "fitness": None if report.failed else report.fitness,
        "failed": report.failed,
    }


# ---------------------------------------------------------------------------
# Optimization runs


def _journal_path(outdir: str, opt_seed_index: int) -> str:
    return os.path.join(outdir, f"optimize_seed{opt_seed_index}.jsonl")


def _incumbent_path(outdir: str, opt_seed_index: int) -> str:
    return os.path.join(outdir, f"incumbent_seed{opt_seed_index}.json")


def _make_optimizer(cfg: ExperimentConfig, space: SearchSpace, opt_seed_index: int) -> DehbOptimizer:
    ladder = budget_ladder(cfg.max_budget, cfg.optimizer.eta, cfg.optimizer.num_rungs)
    return DehbOptimizer(
        space,
        ladder,
        total_budget=cfg.optimizer.total_budget,
        seed=derive_seed(cfg.master_seed, arm_code(cfg.arm), opt_seed_index),
        mutation_factor=cfg.optimizer.mutation_factor,
        crossover_prob=cfg.optimizer.crossover_prob,
    )


def _fitness_seeds(cfg: ExperimentConfig, opt_seed_index: int, eval_index: int) -> list[int]:
    n = cfg.optimizer.fitness_seeds
    if cfg.optimizer.fitness_seed_mode == "fixed":
        return [derive_seed(cfg.master_seed, _FIXED_SEED_TAG, k) for k in range(n)]
    return [
        derive_seed(cfg.master_seed, arm_code(cfg.arm), opt_seed_index, eval_index, k)
        for k in range(n)
    ]


def _full_values(
    cfg: ExperimentConfig,
    frozen: Mapping[str, Any],
    configuration: Configuration,
    rs_space: SearchSpace | None,
    rs_rng: np.random.Generator | None,
) -> dict[str, Any]:
    values: dict[str, Any] = dict(frozen)
    values.update(configuration.values)
    if rs_space is not None:
        values.update(rs_space.sample_uniform(rs_rng).values)
    return values


def _record_for(
    seq: int,
    configuration: Configuration,
    values: Mapping[str, Any],
    budget: int,
    seeds: Sequence[int],
    report_dict: Mapping[str, Any],
    duration_s: float,
) -> EvalRecord:
    failed = report_dict["failed"]
    return EvalRecord(
        seq=seq,
        config_id=configuration.id,
        unit=[float(u) for u in configuration.unit],
        values={k: (float(v) if isinstance(v, (float, np.floating)) else v) for k, v in values.items()},
        budget=int(budget),
        fitness_seeds=[int(s) for s in seeds],
        per_seed=[float(v) for v in report_dict["per_seed"]],
        fitness=None if failed else float(report_dict["fitness"]),
        status=STATUS_FAILED if failed else STATUS_OK,
        duration_s=duration_s,
    )


def run_optimization(
    cfg: ExperimentConfig,
    opt_seed_index: int,
    outdir: str,
    max_evaluations: int | None = None,
) -> RunResult:
    """One optimization run: drive ask/fitness/tell until the budget is spent.

    The journal is appended after every evaluation; the incumbent file is
    only written for finished runs, so interrupted runs resume cleanly.
    """
    os.makedirs(outdir, exist_ok=True)
    space, frozen = cfg.build_space()
    optimizer = _make_optimizer(cfg, space, opt_seed_index)
    rs_space = cfg.rs_sampling_space()
    rs_rng = (
        np.random.default_rng(derive_seed(cfg.master_seed, _RS_TAG, opt_seed_index))
        if rs_space is not None
        else None
    )
    header = {
        "config_hash": cfg.config_hash(),
        "arm": cfg.arm,
        "opt_seed_index": opt_seed_index,
        "in_flight": cfg.optimizer.in_flight,
    }
    path = _journal_path(outdir, opt_seed_index)
    with JournalWriter(path, header) as journal:
        return _drive(
            cfg, opt_seed_index, outdir, space, frozen, optimizer, rs_space, rs_rng,
            journal, path, seq_start=0, max_evaluations=max_evaluations,
        )


def resume_optimization(
    cfg: ExperimentConfig,
    opt_seed_index: int,
    outdir: str,
    max_evaluations: int | None = None,
) -> RunResult:
    """Continue an interrupted run by replaying its journal.

    The journal header must carry this config's hash (resuming under a
    different config is refused) and the run must have been sequential.
    """
    path = _journal_path(outdir, opt_seed_index)
    header, records = read_journal(path)
    if header.get("config_hash") != cfg.config_hash():
        raise JournalIntegrityError(
            f"journal belongs to config {header.get('config_hash')}, "
            f"not {cfg.config_hash()}; refusing to resume",
            1,
        )
    if header.get("in_flight", 1) != 1:
        raise JournalIntegrityError("only sequential (in_flight=1) journals can be resumed")

    space, frozen = cfg.build_space()
    optimizer = _make_optimizer(cfg, space, opt_seed_index)
    rs_space = cfg.rs_sampling_space()
    rs_rng = (
        np.random.default_rng(derive_seed(cfg.master_seed, _RS_TAG, opt_seed_index))
        if rs_space is not None
        else None
    )
    for index, record in enumerate(records):
        line_number = index + 2  # header is line 1
        validate_record(record, space, line_number)
        issued = optimizer.ask()
        if issued is None:
            raise JournalIntegrityError("journal longer than the optimization budget", line_number)
        configuration, budget = issued
        if configuration.id != record.config_id or int(budget) != int(record.budget):
            raise JournalIntegrityError(
                f"replayed ask ({configuration.id}, {budget}) does not match journal "
                f"({record.config_id}, {record.budget})",
                line_number,
            )
        values = _full_values(cfg, frozen, configuration, rs_space, rs_rng)
        for name, stored in record.values.items():
            ours = values.get(name)
            if isinstance(ours, float) and isinstance(stored, (int, float)):
                if not math.isclose(ours, float(stored), rel_tol=1e-12, abs_tol=1e-12):
                    raise JournalIntegrityError(
                        f"replayed value for {name!r} diverged: {ours} vs {stored}", line_number
                    )
        optimizer.tell(
            configuration, budget, None if record.status == STATUS_FAILED else record.fitness
        )

    with JournalWriter(path, header, append=True) as journal:
        return _drive(
            cfg, opt_seed_index, outdir, space, frozen, optimizer, rs_space, rs_rng,
            journal, path, seq_start=len(records), max_evaluations=max_evaluations,
        )


def _drive(
    cfg: ExperimentConfig,
    opt_seed_index: int,
    outdir: str,
    space: SearchSpace,
    frozen: Mapping[str, Any],
    optimizer: DehbOptimizer,
    rs_space: SearchSpace | None,
    rs_rng: np.random.Generator | None,
    journal: JournalWriter,
    journal_path: str,
    seq_start: int,
    max_evaluations: int | None,
) -> RunResult:
    env = cfg.build_env()
    try:
        base_spec = TrainerSpec(**cfg.trainer_baselines)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad trainer baselines: {exc}") from None

    seq = seq_start
    if cfg.optimizer.in_flight == 1:
        while max_evaluations is None or seq < max_evaluations:
            issued = optimizer.ask()
            if issued is None:
                break
            configuration, budget = issued
            values = _full_values(cfg, frozen, configuration, rs_space, rs_rng)
            seeds = _fitness_seeds(cfg, opt_seed_index, seq)
            started = time.perf_counter()
            report = _evaluate_values(env, cfg, base_spec, values, budget, seeds)
            duration = time.perf_counter() - started
            record = _record_for(
                seq, configuration, values, budget, seeds,
                {"per_seed": report.per_seed, "fitness": report.fitness, "failed": report.failed},
                duration,
            )
            journal.write(record)
            optimizer.tell(configuration, budget, None if report.failed else report.fitness)
            seq += 1
    else:
        seq = _drive_parallel(
            cfg, opt_seed_index, optimizer, frozen, rs_space, rs_rng, journal, seq, max_evaluations
        )

    result = RunResult(
        opt_seed_index=opt_seed_index,
        journal_path=journal_path,
        evaluations=seq,
        steps_told=optimizer.steps_told,
        exhausted=optimizer.exhausted,
        incumbent_values=None,
        incumbent_fitness=None,
        trajectory=[
            (p.evaluation_index, p.cumulative_steps, p.fitness)
            for p in optimizer.incumbent_trajectory()
        ],
    )
    if optimizer.incumbent is not None:
        inc = optimizer.incumbent
        values = dict(frozen)
        values.update(inc.configuration.values)
        result.incumbent_values = values
        result.incumbent_fitness = inc.fitness
    if optimizer.exhausted and optimizer.outstanding == 0:
        _write_incumbent_file(cfg, opt_seed_index, outdir, optimizer, frozen)
    return result


def _drive_parallel(
    cfg: ExperimentConfig,
    opt_seed_index: int,
    optimizer: DehbOptimizer,
    frozen: Mapping[str, Any],
    rs_space: SearchSpace | None,
    rs_rng: np.random.Generator | None,
    journal: JournalWriter,
    seq_start: int,
    max_evaluations: int | None,
) -> int:
    """Bounded worker pool; journal order follows completion order."""
    seq = seq_start
    submitted = seq_start
    pending: dict = {}
    with ProcessPoolExecutor(max_workers=cfg.optimizer.in_flight) as pool:
        while True:
            while len(pending) < cfg.optimizer.in_flight and (
                max_evaluations is None or submitted < max_evaluations
            ):
                issued = optimizer.ask()
                if issued is None:
                    break
                configuration, budget = issued
                values = _full_values(cfg, frozen, configuration, rs_space, rs_rng)
                seeds = _fitness_seeds(cfg, opt_seed_index, submitted)
                payload = {
                    "config": cfg.raw,
                    "values": values,
                    "budget": int(budget),
                    "seeds": seeds,
                }
                future = pool.submit(_fitness_task, payload)
                pending[future] = (configuration, budget, values, seeds, time.perf_counter())
                submitted += 1
            if not pending:
                break
            done, _ = wait(pending, return_when=FIRST_COMPLETED)
            for future in done:
                configuration, budget, values, seeds, started = pending.pop(future)
                out = future.result()
                record = _record_for(
                    seq, configuration, values, budget, seeds, out,
                    time.perf_counter() - started,
                )
                journal.write(record)
                optimizer.tell(
                    configuration, budget, None if out["failed"] else out["fitness"]
                )
                seq += 1
    return seq


def _write_incumbent_file(
    cfg: ExperimentConfig,
    opt_seed_index: int,
    outdir: str,
    optimizer: DehbOptimizer,
    frozen: Mapping[str, Any],
) -> None:
    inc = optimizer.incumbent
    payload: dict[str, Any] = {
        "config_hash": cfg.config_hash(),
        "arm": cfg.arm,
        "opt_seed_index": opt_seed_index,
        "evaluations": optimizer.evaluations_told,
        "steps_told": optimizer.steps_told,
    }
    if inc is None:
        payload["incumbent"] = None
    else:
        values = dict(frozen)
        values.update(inc.configuration.values)
        payload["incumbent"] = {
            "config_id": inc.configuration.id,
            "unit": [float(u) for u in inc.configuration.unit],
            "values": values,
            "fitness": inc.fitness,
            "budget": inc.budget,
            "evaluation_index": inc.evaluation_index,
        }
    payload["trajectory"] = [
        {"evaluation_index": p.evaluation_index, "cumulative_steps": p.cumulative_steps,
         "fitness": p.fitness}
        for p in optimizer.incumbent_trajectory()
    ]
    with open(_incumbent_path(outdir, opt_seed_index), "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


# ---------------------------------------------------------------------------
# Incumbent evaluation protocol (N optimization seeds x M evaluation trainings)


def evaluate_incumbents(cfg: ExperimentConfig, outdir: str) -> list[IncumbentReport]:
    """Train each run's final incumbent with fresh seeds and aggregate.

    Emits one journal record per evaluation training plus ``report.json``
    carrying median-of-medians aggregates for both the task objective and
    the default-shaped return.
    """
    env = cfg.build_env()
    base_spec = TrainerSpec(**cfg.trainer_baselines)
    incumbents: list[dict[str, Any]] = []
    for k in range(cfg.protocol.optimization_seeds):
        inc_path = _incumbent_path(outdir, k)
        if not os.path.exists(inc_path):
            raise EvaluationError(
                f"optimization seed {k} has no incumbent file ({inc_path}); "
                "run or resume it to completion first"
            )
        with open(inc_path, encoding="utf-8") as fh:
            payload = json.load(fh)
        if payload.get("config_hash") != cfg.config_hash():
            raise EvaluationError(f"incumbent for seed {k} belongs to another config")
        if payload.get("incumbent") is None:
            raise EvaluationError(f"optimization seed {k} finished without an incumbent")
        incumbents.append(payload)

    reports: list[IncumbentReport] = []
    path = os.path.join(outdir, "evaluation.jsonl")
    header = {"config_hash": cfg.config_hash(), "arm": cfg.arm, "kind": "evaluation"}
    with JournalWriter(path, header) as journal:
        seq = 0
        for k, payload in enumerate(incumbents):
            values = payload["incumbent"]["values"]
            spec = base_spec.with_values(values)
            reward_params = build_reward_params(values, cfg.reward_defaults, cfg.scaling_mode)

            report = IncumbentReport(
                opt_seed_index=k, values=values,
                task_means=[], task_cvs=[], return_means=[], return_cvs=[],
                episode_scores=[],
            )
            for j in range(cfg.protocol.evaluation_trainings):
                seed = derive_seed(cfg.master_seed, arm_code(cfg.arm), k, j)
                train_spec = TrainerSpec(
                    learning_rate=spec.learning_rate,
                    discounting=spec.discounting,
                    entropy_coef=spec.entropy_coef,
                    batch_size=spec.batch_size,
                    budget=cfg.max_budget,
                    seed=seed,
                )
                status = STATUS_OK
                started = time.perf_counter()
                try:
                    policy = train(env, reward_params, train_spec)
                    pairs = evaluate(
                        policy, env, reward_params,
                        cfg.protocol.evaluation_episodes, derive_seed(seed, _EVAL_TAG),
                    )
                except TrainingDivergedError:
                    status = STATUS_FAILED
                    pairs = []
                duration = time.perf_counter() - started
                if pairs:
                    scores = np.array([p[0] for p in pairs])
                    returns = np.array([p[1] for p in pairs])
                    sample = ScoreSample(scores, direction=env.direction)
                    report.task_means.append(float(scores.mean()))
                    report.task_cvs.append(cv_percent(sample))
                    ret_sample = ScoreSample(returns)
                    report.return_means.append(float(returns.mean()))
                    cv = (
                        cv_percent(ret_sample)
                        if float(returns.mean()) != 0.0
                        else 0.0
                    )
                    report.return_cvs.append(cv)
                    report.episode_scores.append([float(s) for s in scores])
                journal.write(
                    EvalRecord(
                        seq=seq,
                        config_id=payload["incumbent"]["config_id"],
                        unit=[],
                        values={**values, "_opt_seed": k, "_evaluation": j},
                        budget=cfg.max_budget,
                        fitness_seeds=[seed],
                        per_seed=[report.task_means[-1]] if pairs else [],
                        fitness=report.task_means[-1] if pairs else None,
                        status=status,
                        duration_s=duration,
                    )
                )
                seq += 1
            reports.append(report)

    _write_report_json(cfg, outdir, reports)
    return reports


def _write_report_json(cfg: ExperimentConfig, outdir: str, reports: list[IncumbentReport]) -> None:
    perf_runs = [r.task_means for r in reports if r.task_means]
    cv_runs = [r.task_cvs for r in reports if r.task_cvs]
    ret_runs = [r.return_means for r in reports if r.return_means]
    ret_cv_runs = [r.return_cvs for r in reports if r.return_cvs]
    if not perf_runs:
        raise EvaluationError("every evaluation training failed; nothing to aggregate")
    task_median, task_cv = aggregate_experiment(perf_runs, cv_runs)
    ret_median, ret_cv = aggregate_experiment(ret_runs, ret_cv_runs)
    payload = {
        "config_hash": cfg.config_hash(),
        "arm": cfg.arm,
        "metric": cfg.optimizer.metric,
        "evaluation_trainings": sum(len(r.task_means) for r in reports),
        "task_score": {
            "median": task_median,
            "cv_median_percent": task_cv,
            "per_seed_medians": [float(np.median(r.task_means)) for r in reports],
            "per_seed_cv_medians": [float(np.median(r.task_cvs)) for r in reports],
        },
        "default_shaped_return": {
            "median": ret_median,
            "cv_median_percent": ret_cv,
            "per_seed_medians": [float(np.median(r.return_means)) for r in reports],
            "per_seed_cv_medians": [float(np.median(r.return_cvs)) for r in reports],
        },
    }
    with open(os.path.join(outdir, "report.json"), "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


# ---------------------------------------------------------------------------
# Exports


def incumbent_curve(cfg: ExperimentConfig, outdir: str) -> list[tuple[int, float, float, float]]:
    """(steps, median, min, max) of the incumbent objective across seeds.

    Values are reported in task units (the metric sign is undone for
    minimize-direction environments) on the union grid of every seed's
    incumbent-change step coordinates.
    """
    env = cfg.build_env()
    sign = -1.0 if env.direction == DIRECTION_MINIMIZE else 1.0
    curves: list[list[tuple[int, float]]] = []
    for k in range(cfg.protocol.optimization_seeds):
        path = _journal_path(outdir, k)
        if not os.path.exists(path):
            raise EvaluationError(f"no journal for optimization seed {k} at {path}")
        _, records = read_journal(path)
        cum = 0
        best: float | None = None
        points: list[tuple[int, float]] = []
        for record in records:
            cum += record.budget
            if (
                record.status == STATUS_OK
                and record.budget == cfg.max_budget
                and record.fitness is not None
            ):
                if best is None or record.fitness > best:
                    best = record.fitness
                    points.append((cum, sign * best))
        if points:
            curves.append(points)
    if not curves:
        raise EvaluationError("no incumbent changes found in any journal")

    grid = sorted({step for curve in curves for step, _ in curve})
    start = max(curve[0][0] for curve in curves)
    rows = []
    for step in grid:
        if step < start:
            continue
        values = []
        for curve in curves:
            value = None
            for s, v in curve:
                if s <= step:
                    value = v
                else:
                    break
            values.append(value)
        rows.append(
            (step, float(np.median(values)), float(min(values)), float(max(values)))
        )
    return rows


def export(cfg: ExperimentConfig, outdir: str, what: str) -> list[str]:
    """Render CSV exports; re-exporting produces byte-identical files."""
    exports_dir = os.path.join(outdir, "exports")
    os.makedirs(exports_dir, exist_ok=True)
    written: list[str] = []
    if what == "incumbent-curve":
        rows = incumbent_curve(cfg, outdir)
        path = os.path.join(exports_dir, "incumbent_curve.csv")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("steps,median,min,max\n")
            for step, median, lo, hi in rows:
                fh.write(f"{step},{median!r},{lo!r},{hi!r}\n")
        written.append(path)
    elif what == "landscape":
        from .landscape import write_best_response_csv, write_grid_csv

        grid_path = os.path.join(outdir, "sweep_grid.json")
        if not os.path.exists(grid_path):
            raise EvaluationError(f"no sweep data at {grid_path}; run the sweep command first")
        grid = _load_grid(grid_path)
        cells = os.path.join(exports_dir, "landscape_cells.csv")
        lines = os.path.join(exports_dir, "landscape_best_response.csv")
        write_grid_csv(grid, cells)
        write_best_response_csv(grid, lines)
        written.extend([cells, lines])
    elif what == "report":
        report_path = os.path.join(outdir, "report.json")
        if not os.path.exists(report_path):
            raise EvaluationError(f"no report at {report_path}; run the evaluate command first")
        with open(report_path, encoding="utf-8") as fh:
            payload = json.load(fh)
        for table in ("task_score", "default_shaped_return"):
            path = os.path.join(exports_dir, f"report_{table}.csv")
            block = payload[table]
            with open(path, "w", encoding="utf-8") as fh:
                fh.write("opt_seed_index,median,cv_median_percent\n")
                for k, (m, c) in enumerate(
                    zip(block["per_seed_medians"], block["per_seed_cv_medians"])
                ):
                    fh.write(f"{k},{m!r},{c!r}\n")
                fh.write(f"aggregate,{block['median']!r},{block['cv_median_percent']!r}\n")
            written.append(path)
    else:
        raise ConfigError(f"unknown export {what!r}")
    return written


def save_grid(grid, path: str) -> None:
    """Persist a landscape grid so exports can re-render it deterministically."""
    from .landscape import LandscapeGrid

    assert isinstance(grid, LandscapeGrid)
    payload = {
        "axis_a": _axis_payload(grid.axis_a),
        "axis_b": _axis_payload(grid.axis_b),
        "mean": [[None if math.isnan(v) else v for v in row] for row in grid.mean.tolist()],
        "std": [[None if math.isnan(v) else v for v in row] for row in grid.std.tolist()],
        "n_seeds": grid.n_seeds.tolist(),
        "failed": grid.failed.tolist(),
        "frozen_values": grid.frozen_values,
        "direction": grid.direction,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True)
        fh.write("\n")


def _axis_payload(axis) -> dict:
    return {
        "name": axis.spec.name,
        "lo": axis.spec.lo,
        "hi": axis.spec.hi,
        "log": axis.spec.log_scale,
        "role": axis.spec.role,
        "values": list(axis.values),
    }


def _load_grid(path: str):
    from .landscape import GridAxis, LandscapeGrid
    from .space import ParamSpec

    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)

    def axis(block) -> GridAxis:
        spec = ParamSpec(
            name=block["name"], lo=block["lo"], hi=block["hi"],
            log_scale=block["log"], role=block["role"],
        )
        return GridAxis(spec=spec, values=tuple(block["values"]))

    to_nan = lambda rows: np.array(
        [[math.nan if v is None else v for v in row] for row in rows]
    )
    return LandscapeGrid(
        axis_a=axis(payload["axis_a"]),
        axis_b=axis(payload["axis_b"]),
        mean=to_nan(payload["mean"]),
        std=to_nan(payload["std"]),
        n_seeds=np.array(payload["n_seeds"], dtype=int),
        failed=np.array(payload["failed"], dtype=bool),
        frozen_values=payload["frozen_values"],
        direction=payload["direction"],
    )
