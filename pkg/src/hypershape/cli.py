"""Command-line interface.

Verbs: optimize, resume, evaluate, sweep, export, report.  Everything is
driven by the experiment config file; any key can be overridden with
``--set dotted.key=value``.

Exit codes: 0 success, 2 configuration error, 3 journal integrity error,
4 evaluation failure (missing incumbents / no data).
"""

from __future__ import annotations

import argparse
import json
import sys

from .config import ConfigError, ExperimentConfig
from .journal import JournalIntegrityError, JournalWriter
from .runner import (
    EvaluationError,
    evaluate_incumbents,
    export,
    resume_optimization,
    run_optimization,
    save_grid,
)
from .space import SpaceError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INTEGRITY = 3
EXIT_EVALUATION = 4


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", "-c", required=True, help="experiment config YAML")
    parser.add_argument("--outdir", "-o", required=True, help="experiment directory")
    parser.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override a config key (dotted path), repeatable",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hypershape",
        description="Joint tuning of RL hyperparameters and reward-shaping weights.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_opt = sub.add_parser("optimize", help="run optimization for one or all seeds")
    _add_common(p_opt)
    p_opt.add_argument("--seed-index", type=int, default=None, help="run only this seed index")
    p_opt.add_argument("--max-evaluations", type=int, default=None)

    p_res = sub.add_parser("resume", help="resume an interrupted optimization run")
    _add_common(p_res)
    p_res.add_argument("--seed-index", type=int, required=True)
    p_res.add_argument("--max-evaluations", type=int, default=None)

    p_eval = sub.add_parser("evaluate", help="evaluate final incumbents (the NxM protocol)")
    _add_common(p_eval)

    p_sweep = sub.add_parser("sweep", help="pairwise parameter landscape sweep")
    _add_common(p_sweep)
    p_sweep.add_argument("--param-a", required=True)
    p_sweep.add_argument("--param-b", required=True)
    p_sweep.add_argument("--resolution", type=int, default=10)
    p_sweep.add_argument("--seeds", type=int, default=3, help="trainings per cell")

    p_exp = sub.add_parser("export", help="render CSV exports")
    _add_common(p_exp)
    p_exp.add_argument(
        "--what", required=True, choices=["incumbent-curve", "landscape", "report"]
    )

    p_rep = sub.add_parser("report", help="print the aggregated report")
    _add_common(p_rep)
    return parser


def _cmd_optimize(args) -> int:
    cfg = ExperimentConfig.load(args.config, args.overrides)
    indices = (
        [args.seed_index]
        if args.seed_index is not None
        else list(range(cfg.protocol.optimization_seeds))
    )
    for k in indices:
        result = run_optimization(cfg, k, args.outdir, max_evaluations=args.max_evaluations)
        fitness = (
            "none" if result.incumbent_fitness is None else f"{result.incumbent_fitness:.4f}"
        )
        print(
            f"seed {k}: {result.evaluations} evaluations, "
            f"{result.steps_told} steps, incumbent fitness {fitness}"
        )
    return EXIT_OK


def _cmd_resume(args) -> int:
    cfg = ExperimentConfig.load(args.config, args.overrides)
    result = resume_optimization(
        cfg, args.seed_index, args.outdir, max_evaluations=args.max_evaluations
    )
    fitness = "none" if result.incumbent_fitness is None else f"{result.incumbent_fitness:.4f}"
    print(
        f"seed {args.seed_index}: resumed to {result.evaluations} evaluations, "
        f"incumbent fitness {fitness}"
    )
    return EXIT_OK


def _cmd_evaluate(args) -> int:
    cfg = ExperimentConfig.load(args.config, args.overrides)
    reports = evaluate_incumbents(cfg, args.outdir)
    total = sum(len(r.task_means) for r in reports)
    print(f"{len(reports)} incumbents evaluated over {total} trainings")
    return EXIT_OK


def _cmd_sweep(args) -> int:
    import os

    from .landscape import make_axis, sweep
    from .runner import build_reward_params
    from .trainer import TrainerSpec

    cfg = ExperimentConfig.load(args.config, args.overrides)
    space, frozen = cfg.build_space()
    names = {s.name: s for s in space.specs}
    for needed in (args.param_a, args.param_b):
        if needed not in names:
            raise ConfigError(
                f"parameter {needed!r} is not in this arm's search space "
                f"(available: {sorted(names)})"
            )
    env = cfg.build_env()
    baseline_values = dict(cfg.trainer_baselines)
    baseline_values.update(cfg.reward_defaults)
    baseline_values.setdefault("alpha", cfg.alpha_default)
    baseline_values.update(frozen)

    axis_a = make_axis(names[args.param_a], args.resolution)
    axis_b = make_axis(names[args.param_b], args.resolution)
    os.makedirs(args.outdir, exist_ok=True)
    journal_path = os.path.join(args.outdir, "sweep_journal.jsonl")
    header = {"config_hash": cfg.config_hash(), "kind": "sweep"}
    with JournalWriter(journal_path, header) as journal:
        grid = sweep(
            axis_a,
            axis_b,
            baseline_values,
            seeds=list(range(args.seeds)),
            env=env,
            base_spec=TrainerSpec(**cfg.trainer_baselines),
            budget=cfg.max_budget,
            eval_episodes=cfg.optimizer.eval_episodes,
            build_reward_params=lambda values: build_reward_params(
                values, cfg.reward_defaults, cfg.scaling_mode
            ),
            journal=journal,
        )
    save_grid(grid, os.path.join(args.outdir, "sweep_grid.json"))
    print(f"swept {axis_a.resolution}x{axis_b.resolution} cells x {args.seeds} seeds")
    return EXIT_OK


def _cmd_export(args) -> int:
    cfg = ExperimentConfig.load(args.config, args.overrides)
    for path in export(cfg, args.outdir, args.what):
        print(path)
    return EXIT_OK


def _cmd_report(args) -> int:
    import os

    cfg = ExperimentConfig.load(args.config, args.overrides)
    path = os.path.join(args.outdir, "report.json")
    if not os.path.exists(path):
        raise EvaluationError(f"no report at {path}; run `hypershape evaluate` first")
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    print(json.dumps(payload, indent=2, sort_keys=True))
    return EXIT_OK


_COMMANDS = {
    "optimize": _cmd_optimize,
    "resume": _cmd_resume,
    "evaluate": _cmd_evaluate,
    "sweep": _cmd_sweep,
    "export": _cmd_export,
    "report": _cmd_report,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ConfigError, SpaceError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except JournalIntegrityError as exc:
        print(f"integrity error: {exc}", file=sys.stderr)
        return EXIT_INTEGRITY
    except EvaluationError as exc:
        print(f"evaluation error: {exc}", file=sys.stderr)
        return EXIT_EVALUATION


if __name__ == "__main__":
    sys.exit(main())
