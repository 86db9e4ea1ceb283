import json
import os

import numpy as np
import pytest

from hypershape.cli import main as cli_main
from hypershape.config import ConfigError, ExperimentConfig
from hypershape.journal import JournalIntegrityError, read_journal, validate_record
from hypershape.runner import (
    EvaluationError,
    evaluate_incumbents,
    export,
    incumbent_curve,
    resume_optimization,
    run_optimization,
)

LANDER_YAML = """
version: 1
arm: combined
master_seed: 77
environment:
  name: lander
  overrides: {{episode_cap: 120}}
  reward_defaults: {{dist: 100.0, vel: 100.0, tilt: 100.0, contact: 10.0}}
  alpha: 1.0
trainer:
  baselines: {{learning_rate: 0.03, discounting: 0.01, entropy_coef: 0.01, batch_size: 4}}
  max_budget: 300
space:
  hyperparameters:
    - {{name: learning_rate, lo: 0.001, hi: 0.2, log: true}}
    - {{name: discounting, lo: 0.001, hi: 0.02, log: true}}
  reward_weights:
    - {{name: dist}}
    - {{name: vel}}
optimizer:
  eta: 3
  num_rungs: 2
  total_budget: {total_budget}
  metric: so
  fitness_seeds: 1
  eval_episodes: 2
  in_flight: 1
protocol:
  optimization_seeds: 2
  evaluation_trainings: 3
  evaluation_episodes: 2
arm: {arm}
"""


def write_config(tmp_path, arm="combined", total_budget=3, name="exp.yaml"):
    path = tmp_path / name
    path.write_text(LANDER_YAML.format(arm=arm, total_budget=total_budget))
    return str(path)


@pytest.fixture()
def lander_cfg(tmp_path):
    return ExperimentConfig.load(write_config(tmp_path))


class TestConfig:
    def test_load_and_hash_stable(self, tmp_path):
        path = write_config(tmp_path)
        a = ExperimentConfig.load(path)
        b = ExperimentConfig.load(path)
        assert a.config_hash() == b.config_hash()

    def test_override_changes_hash(self, tmp_path):
        path = write_config(tmp_path)
        a = ExperimentConfig.load(path)
        b = ExperimentConfig.load(path, overrides=["optimizer.total_budget=5"])
        assert a.config_hash() != b.config_hash()
        assert b.optimizer.total_budget == 5

    def test_unknown_arm_rejected(self, tmp_path):
        path = write_config(tmp_path)
        with pytest.raises(ConfigError):
            ExperimentConfig.load(path, overrides=["arm=frobnicate"])

    def test_unknown_optimizer_key_rejected(self, tmp_path):
        path = write_config(tmp_path)
        with pytest.raises(ConfigError):
            ExperimentConfig.load(path, overrides=["optimizer.wibble=1"])

    def test_weight_ranges_derived_from_defaults(self, lander_cfg):
        space, _ = lander_cfg.build_space()
        dist = space.spec("dist")
        assert (dist.lo, dist.hi) == (0.0, 1000.0)

    def test_arm_spaces_and_frozen_values(self, tmp_path):
        combos = {
            "hpo-only": ({"learning_rate", "discounting"}, {"dist", "vel", "tilt", "contact", "alpha"}),
            "rpo-only": ({"dist", "vel"}, {"learning_rate", "discounting", "entropy_coef", "batch_size", "alpha"}),
            "combined": ({"learning_rate", "discounting", "dist", "vel"}, {"alpha"}),
            "combined-rs": ({"learning_rate", "discounting"}, {"alpha"}),
        }
        for arm, (expected_space, expected_frozen) in combos.items():
            cfg = ExperimentConfig.load(write_config(tmp_path, arm=arm, name=f"{arm}.yaml"))
            space, frozen = cfg.build_space()
            assert set(space.names) == expected_space, arm
            assert set(frozen) == expected_frozen, arm

    def test_rs_sampling_space_only_for_rs_arm(self, tmp_path):
        cfg = ExperimentConfig.load(write_config(tmp_path, arm="combined-rs"))
        assert set(cfg.rs_sampling_space().names) == {"dist", "vel"}
        cfg2 = ExperimentConfig.load(write_config(tmp_path, arm="combined", name="c.yaml"))
        assert cfg2.rs_sampling_space() is None


class TestRunOptimization:
    def test_journal_structure(self, lander_cfg, tmp_path):
        outdir = str(tmp_path / "run")
        result = run_optimization(lander_cfg, 0, outdir)
        assert result.exhausted
        header, records = read_journal(result.journal_path)
        assert header["config_hash"] == lander_cfg.config_hash()
        assert [r.seq for r in records] == list(range(len(records)))
        space, _ = lander_cfg.build_space()
        for i, record in enumerate(records):
            validate_record(record, space, i + 2)
        assert os.path.exists(os.path.join(outdir, "incumbent_seed0.json"))

    def test_byte_identical_journals(self, lander_cfg, tmp_path):
        r1 = run_optimization(lander_cfg, 0, str(tmp_path / "a"))
        r2 = run_optimization(lander_cfg, 0, str(tmp_path / "b"))
        with open(r1.journal_path, "rb") as f1, open(r2.journal_path, "rb") as f2:
            assert f1.read() == f2.read()

    def test_budget_accounting(self, lander_cfg, tmp_path):
        result = run_optimization(lander_cfg, 0, str(tmp_path / "run"))
        _, records = read_journal(result.journal_path)
        total_steps = sum(r.budget for r in records)
        limit = lander_cfg.optimizer.total_budget * lander_cfg.max_budget
        assert total_steps - records[-1].budget < limit
        assert total_steps / lander_cfg.max_budget < lander_cfg.optimizer.total_budget + 1

    def test_hpo_only_freezes_rewards(self, tmp_path):
        cfg = ExperimentConfig.load(write_config(tmp_path, arm="hpo-only"))
        result = run_optimization(cfg, 0, str(tmp_path / "run"))
        _, records = read_journal(result.journal_path)
        for record in records:
            for name, default in cfg.reward_defaults.items():
                assert record.values[name] == default

    def test_rpo_only_freezes_hyperparameters(self, tmp_path):
        cfg = ExperimentConfig.load(write_config(tmp_path, arm="rpo-only"))
        result = run_optimization(cfg, 0, str(tmp_path / "run"))
        _, records = read_journal(result.journal_path)
        for record in records:
            for name, baseline in cfg.trainer_baselines.items():
                assert record.values[name] == baseline

    def test_combined_rs_rewards_uniform(self, tmp_path):
        from scipy import stats

        cfg = ExperimentConfig.load(
            write_config(tmp_path, arm="combined-rs", total_budget=160)
        )
        result = run_optimization(cfg, 0, str(tmp_path / "run"))
        _, records = read_journal(result.journal_path)
        assert len(records) >= 200
        dist = np.array([r.values["dist"] for r in records]) / 1000.0
        vel = np.array([r.values["vel"] for r in records]) / 1000.0
        for sample in (dist, vel):
            assert stats.kstest(sample, "uniform").pvalue > 0.01
        # hyperparameters meanwhile evolve: late asks concentrate vs uniform
        lrs = np.array([r.values["learning_rate"] for r in records])
        assert len(set(np.round(lrs, 12))) > 3


class TestResume:
    def test_kill_and_resume_matches_uninterrupted(self, lander_cfg, tmp_path):
        full = run_optimization(lander_cfg, 0, str(tmp_path / "full"))
        part_dir = str(tmp_path / "part")
        partial = run_optimization(lander_cfg, 0, part_dir, max_evaluations=3)
        assert not partial.exhausted
        resumed = resume_optimization(lander_cfg, 0, part_dir)
        assert resumed.exhausted
        assert resumed.trajectory == full.trajectory
        assert resumed.incumbent_values == full.incumbent_values
        with open(full.journal_path, "rb") as f1, open(resumed.journal_path, "rb") as f2:
            assert f1.read() == f2.read()

    def test_resume_complete_run_is_noop(self, lander_cfg, tmp_path):
        outdir = str(tmp_path / "run")
        full = run_optimization(lander_cfg, 0, outdir)
        resumed = resume_optimization(lander_cfg, 0, outdir)
        assert resumed.evaluations == full.evaluations
        assert resumed.incumbent_values == full.incumbent_values

    def test_resume_refuses_other_config(self, lander_cfg, tmp_path):
        outdir = str(tmp_path / "run")
        run_optimization(lander_cfg, 0, outdir, max_evaluations=2)
        other = ExperimentConfig.load(
            write_config(tmp_path, total_budget=9, name="other.yaml")
        )
        with pytest.raises(JournalIntegrityError):
            resume_optimization(other, 0, outdir)

    def test_corrupt_journal_names_line(self, lander_cfg, tmp_path):
        outdir = str(tmp_path / "run")
        result = run_optimization(lander_cfg, 0, outdir, max_evaluations=3)
        with open(result.journal_path, "a", encoding="utf-8") as fh:
            fh.write("{not json\n")
        with pytest.raises(JournalIntegrityError) as err:
            resume_optimization(lander_cfg, 0, outdir)
        assert err.value.line_number == 5  # header + 3 records + corrupt line


class TestEvaluateIncumbents:
    def test_protocol_accounting(self, lander_cfg, tmp_path):
        outdir = str(tmp_path / "run")
        for k in range(lander_cfg.protocol.optimization_seeds):
            run_optimization(lander_cfg, k, outdir)
        reports = evaluate_incumbents(lander_cfg, outdir)
        total = sum(len(r.task_means) for r in reports)
        assert total == 2 * 3  # seeds x evaluation trainings
        _, records = read_journal(os.path.join(outdir, "evaluation.jsonl"))
        assert len(records) == 6
        with open(os.path.join(outdir, "report.json"), encoding="utf-8") as fh:
            payload = json.load(fh)
        assert "task_score" in payload and "default_shaped_return" in payload
        assert payload["evaluation_trainings"] == 6

    def test_missing_incumbent_is_named_error(self, lander_cfg, tmp_path):
        outdir = str(tmp_path / "run")
        run_optimization(lander_cfg, 0, outdir)  # seed 1 missing
        with pytest.raises(EvaluationError, match="seed 1"):
            evaluate_incumbents(lander_cfg, outdir)


class TestExport:
    @pytest.fixture()
    def finished(self, lander_cfg, tmp_path):
        outdir = str(tmp_path / "run")
        for k in range(lander_cfg.protocol.optimization_seeds):
            run_optimization(lander_cfg, k, outdir)
        evaluate_incumbents(lander_cfg, outdir)
        return outdir

    def test_incumbent_curve_columns(self, lander_cfg, finished):
        paths = export(lander_cfg, finished, "incumbent-curve")
        lines = open(paths[0], encoding="utf-8").read().splitlines()
        assert lines[0] == "steps,median,min,max"
        assert len(lines) > 1
        for line in lines[1:]:
            steps, median, lo, hi = line.split(",")
            assert float(lo) <= float(median) <= float(hi)

    def test_single_seed_collapses_min_median_max(self, tmp_path):
        cfg = ExperimentConfig.load(
            write_config(tmp_path, name="one.yaml"),
            overrides=["protocol.optimization_seeds=1"],
        )
        outdir = str(tmp_path / "one")
        run_optimization(cfg, 0, outdir)
        rows = incumbent_curve(cfg, outdir)
        for _, median, lo, hi in rows:
            assert lo == median == hi

    def test_reexport_byte_identical(self, lander_cfg, finished):
        first = export(lander_cfg, finished, "incumbent-curve")[0]
        blob = open(first, "rb").read()
        second = export(lander_cfg, finished, "incumbent-curve")[0]
        assert open(second, "rb").read() == blob

    def test_report_tables(self, lander_cfg, finished):
        paths = export(lander_cfg, finished, "report")
        names = {os.path.basename(p) for p in paths}
        assert names == {"report_task_score.csv", "report_default_shaped_return.csv"}
        for path in paths:
            lines = open(path, encoding="utf-8").read().splitlines()
            assert lines[0] == "opt_seed_index,median,cv_median_percent"
            assert lines[-1].startswith("aggregate,")

    def test_missing_data_is_named_error(self, lander_cfg, tmp_path):
        with pytest.raises(EvaluationError):
            export(lander_cfg, str(tmp_path / "empty"), "report")


class TestParallel:
    def test_in_flight_two_completes(self, tmp_path):
        cfg = ExperimentConfig.load(
            write_config(tmp_path), overrides=["optimizer.in_flight=2"]
        )
        outdir = str(tmp_path / "par")
        result = run_optimization(cfg, 0, outdir)
        assert result.exhausted
        _, records = read_journal(result.journal_path)
        assert [r.seq for r in records] == list(range(len(records)))


class TestCli:
    def test_optimize_evaluate_export_report(self, tmp_path, capsys):
        config = write_config(tmp_path)
        outdir = str(tmp_path / "cli")
        assert cli_main(["optimize", "-c", config, "-o", outdir]) == 0
        assert cli_main(["evaluate", "-c", config, "-o", outdir]) == 0
        assert cli_main(["export", "-c", config, "-o", outdir, "--what", "report"]) == 0
        assert cli_main(["report", "-c", config, "-o", outdir]) == 0
        out = capsys.readouterr().out
        assert "task_score" in out

    def test_sweep_and_landscape_export(self, tmp_path):
        config = write_config(tmp_path)
        outdir = str(tmp_path / "sweep")
        code = cli_main(
            [
                "sweep", "-c", config, "-o", outdir,
                "--param-a", "learning_rate", "--param-b", "dist",
                "--resolution", "2", "--seeds", "1",
            ]
        )
        assert code == 0
        assert cli_main(["export", "-c", config, "-o", outdir, "--what", "landscape"]) == 0
        cells = os.path.join(outdir, "exports", "landscape_cells.csv")
        assert open(cells, encoding="utf-8").readline().startswith("learning_rate[log]")

    def test_config_error_exit_code(self, tmp_path):
        config = write_config(tmp_path)
        assert cli_main(
            ["optimize", "-c", config, "-o", str(tmp_path / "x"), "--set", "arm=bogus"]
        ) == 2

    def test_integrity_error_exit_code(self, tmp_path):
        config = write_config(tmp_path)
        outdir = str(tmp_path / "res")
        cli_main(["optimize", "-c", config, "-o", outdir, "--seed-index", "0",
                  "--max-evaluations", "2"])
        assert cli_main(
            ["resume", "-c", config, "-o", outdir, "--seed-index", "0",
             "--set", "optimizer.total_budget=9"]
        ) == 3

    def test_evaluation_error_exit_code(self, tmp_path):
        config = write_config(tmp_path)
        assert cli_main(["evaluate", "-c", config, "-o", str(tmp_path / "none")]) == 4

    def test_resume_seed_flag(self, tmp_path):
        config = write_config(tmp_path)
        outdir = str(tmp_path / "res2")
        cli_main(["optimize", "-c", config, "-o", outdir, "--seed-index", "0",
                  "--max-evaluations", "2"])
        assert cli_main(["resume", "-c", config, "-o", outdir, "--seed-index", "0"]) == 0


class TestFitnessSeedModes:
    def test_fresh_mode_varies_fixed_mode_constant(self, tmp_path):
        fresh = ExperimentConfig.load(write_config(tmp_path, name="fresh.yaml"))
        fixed = ExperimentConfig.load(
            write_config(tmp_path, name="fixed.yaml"),
            overrides=["optimizer.fitness_seed_mode=fixed"],
        )
        r1 = run_optimization(fresh, 0, str(tmp_path / "fresh"))
        r2 = run_optimization(fixed, 0, str(tmp_path / "fixed"))
        _, fresh_records = read_journal(r1.journal_path)
        _, fixed_records = read_journal(r2.journal_path)
        assert len({tuple(r.fitness_seeds) for r in fresh_records}) == len(fresh_records)
        assert len({tuple(r.fitness_seeds) for r in fixed_records}) == 1


class TestFailedEvaluations:
    def test_degenerate_explicit_scaling_is_failed_not_fatal(self, tmp_path):
        from hypershape.runner import _evaluate_values
        from hypershape.trainer import TrainerSpec

        cfg = ExperimentConfig.load(
            write_config(tmp_path),
            overrides=["environment.reward_scaling=explicit"],
        )
        env = cfg.build_env()
        values = {"dist": 0.0, "vel": 0.0, "tilt": 0.0, "contact": 0.0, "alpha": 1.0,
                  "learning_rate": 0.01, "discounting": 0.01}
        report = _evaluate_values(env, cfg, TrainerSpec(), values, 100, [0])
        assert report.failed

    def test_nonpositive_alpha_is_failed(self, tmp_path):
        from hypershape.runner import _evaluate_values
        from hypershape.trainer import TrainerSpec

        cfg = ExperimentConfig.load(write_config(tmp_path))
        env = cfg.build_env()
        values = {"dist": 10.0, "vel": 1.0, "tilt": 1.0, "contact": 1.0, "alpha": 0.0,
                  "learning_rate": 0.01, "discounting": 0.01}
        report = _evaluate_values(env, cfg, TrainerSpec(), values, 100, [0])
        assert report.failed


class TestAccountingExamples:
    def test_single_rung_single_training_budget(self, tmp_path):
        cfg = ExperimentConfig.load(
            write_config(tmp_path),
            overrides=["optimizer.num_rungs=1", "optimizer.total_budget=1"],
        )
        result = run_optimization(cfg, 0, str(tmp_path / "one"))
        _, records = read_journal(result.journal_path)
        assert len(records) == 1
        assert records[0].budget == cfg.max_budget


class TestComponentSignsAudit:
    def test_matching_signs_accepted(self, tmp_path):
        cfg = ExperimentConfig.load(
            write_config(tmp_path),
            overrides=[
                "environment.component_signs={dist: 1, vel: -1, tilt: -1, contact: 1, fuel: -1}"
            ],
        )
        assert cfg.env_name == "lander"

    def test_contradicting_signs_rejected(self, tmp_path):
        with pytest.raises(ConfigError, match="component signs"):
            ExperimentConfig.load(
                write_config(tmp_path),
                overrides=["environment.component_signs={dist: -1}"],
            )


class TestShippedConfigs:
    @pytest.mark.parametrize(
        "name",
        ["lander_combined.yaml", "lander_adversarial_defaults.yaml", "bandit_smoke.yaml"],
    )
    def test_parses_and_builds(self, name):
        root = os.path.join(os.path.dirname(__file__), "..", "configs")
        cfg = ExperimentConfig.load(os.path.join(root, name))
        space, frozen = cfg.build_space()
        assert space.dimension >= 1
        cfg.build_env()

    def test_bandit_smoke_runs_end_to_end(self, tmp_path):
        root = os.path.join(os.path.dirname(__file__), "..", "configs")
        cfg = ExperimentConfig.load(os.path.join(root, "bandit_smoke.yaml"))
        outdir = str(tmp_path / "bandit")
        for k in range(cfg.protocol.optimization_seeds):
            result = run_optimization(cfg, k, outdir)
            assert result.exhausted
        reports = evaluate_incumbents(cfg, outdir)
        assert sum(len(r.task_means) for r in reports) == 6
        # the tuned bandit policies should be near the closed-form optimum
        assert all(np.mean(r.task_means) > -0.2 for r in reports)


class TestResumeCombinedRs:
    def test_rs_draws_replay_identically(self, tmp_path):
        cfg = ExperimentConfig.load(write_config(tmp_path, arm="combined-rs"))
        full = run_optimization(cfg, 0, str(tmp_path / "full"))
        part = str(tmp_path / "part")
        run_optimization(cfg, 0, part, max_evaluations=4)
        resumed = resume_optimization(cfg, 0, part)
        with open(full.journal_path, "rb") as fa, open(resumed.journal_path, "rb") as fb:
            assert fa.read() == fb.read()
