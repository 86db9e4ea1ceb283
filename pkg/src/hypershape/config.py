"""Experiment configuration: YAML schema, overrides, hashing.

The config file is the single external interface for declaring an
experiment: environment constants, reward components and defaults, trainer
baselines, the optimized search space, optimizer settings, the experiment
arm, and the seed protocol.  See ``configs/`` for annotated examples.
"""

from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import dataclass
from typing import Any, Mapping

import yaml

from .bandit import BanditConfig, BanditEnv
from .lander import DEFAULT_WEIGHTS, LanderConfig, LanderEnv
from .shaping import RewardParams, implicit_ranges
from .space import (
    ROLE_HYPERPARAMETER,
    ROLE_REWARD_SCALE,
    ROLE_REWARD_WEIGHT,
    ParamSpec,
    SearchSpace,
    weight_search_range,
)

CONFIG_VERSION = 1

ARMS = ("hpo-only", "rpo-only", "combined", "combined-rs")
METRICS = ("so", "mo")
SCALING_MODES = ("none", "explicit", "implicit")


class ConfigError(ValueError):
    """Malformed or inconsistent experiment configuration."""


@dataclass(frozen=True)
class OptimizerSettings:
    eta: int = 3
    num_rungs: int = 3
    total_budget: float = 133.0  # full-training equivalents
    mutation_factor: float = 0.5
    crossover_prob: float = 0.5
    metric: str = "so"
    fitness_seeds: int = 3
    fitness_seed_mode: str = "fresh"  # "fresh" | "fixed"
    eval_episodes: int = 30
    in_flight: int = 1
    std_ddof: int = 1  # 1 = sample std, 0 = population std


@dataclass(frozen=True)
class ProtocolSettings:
    optimization_seeds: int = 5
    evaluation_trainings: int = 10
    evaluation_episodes: int = 30


@dataclass
class ExperimentConfig:
    raw: dict[str, Any]
    arm: str
    master_seed: int
    env_name: str
    env_overrides: dict[str, Any]
    reward_defaults: dict[str, float]
    alpha_default: float
    scaling_mode: str
    trainer_baselines: dict[str, Any]
    max_budget: int
    space_entries: dict[str, list[dict[str, Any]]]
    optimizer: OptimizerSettings
    protocol: ProtocolSettings

    # -- construction --------------------------------------------------------

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "ExperimentConfig":
        data = copy.deepcopy(dict(data))
        version = data.get("version", CONFIG_VERSION)
        if version != CONFIG_VERSION:
            raise ConfigError(f"unsupported config version {version}")
        arm = data.get("arm", "combined")
        if arm not in ARMS:
            raise ConfigError(f"unknown arm {arm!r}, expected one of {ARMS}")

        env_block = data.get("environment", {})
        env_name = env_block.get("name", "lander")
        if env_name not in ("lander", "bandit"):
            raise ConfigError(f"unknown environment {env_name!r}")
        reward_defaults = {
            str(k): float(v)
            for k, v in env_block.get(
                "reward_defaults", DEFAULT_WEIGHTS if env_name == "lander" else {}
            ).items()
        }
        scaling_mode = env_block.get("reward_scaling", "none")
        if scaling_mode not in SCALING_MODES:
            raise ConfigError(f"unknown reward_scaling {scaling_mode!r}")
        declared_signs = env_block.get("component_signs")
        if declared_signs is not None:
            actual = LanderEnv().component_signs if env_name == "lander" else {}
            declared = {str(k): int(v) for k, v in declared_signs.items()}
            if declared != actual:
                raise ConfigError(
                    f"declared component signs {declared} do not match the "
                    f"environment's definition {actual}"
                )

        trainer_block = data.get("trainer", {})
        baselines = dict(trainer_block.get("baselines", {}))
        max_budget = int(trainer_block.get("max_budget", 9000))

        opt_block = data.get("optimizer", {})
        try:
            optimizer = OptimizerSettings(**opt_block)
        except TypeError as exc:
            raise ConfigError(f"bad optimizer block: {exc}") from None
        if optimizer.metric not in METRICS:
            raise ConfigError(f"unknown metric {optimizer.metric!r}")
        if optimizer.fitness_seed_mode not in ("fresh", "fixed"):
            raise ConfigError(f"unknown fitness_seed_mode {optimizer.fitness_seed_mode!r}")
        if optimizer.in_flight < 1:
            raise ConfigError("in_flight must be at least 1")

        proto_block = data.get("protocol", {})
        try:
            protocol = ProtocolSettings(**proto_block)
        except TypeError as exc:
            raise ConfigError(f"bad protocol block: {exc}") from None

        space_block = data.get("space", {})
        entries = {
            "hyperparameters": list(space_block.get("hyperparameters", [])),
            "reward_weights": list(space_block.get("reward_weights", [])),
        }
        scale_entry = space_block.get("reward_scale")
        entries["reward_scale"] = [scale_entry] if scale_entry else []

        return cls(
            raw=data,
            arm=arm,
            master_seed=int(data.get("master_seed", 0)),
            env_name=env_name,
            env_overrides=dict(env_block.get("overrides", {})),
            reward_defaults=reward_defaults,
            alpha_default=float(env_block.get("alpha", 1.0)),
            scaling_mode=scaling_mode,
            trainer_baselines=baselines,
            max_budget=max_budget,
            space_entries=entries,
            optimizer=optimizer,
            protocol=protocol,
        )

    @classmethod
    def load(cls, path: str, overrides: list[str] | None = None) -> "ExperimentConfig":
        try:
            with open(path, encoding="utf-8") as fh:
                data = yaml.safe_load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
        except yaml.YAMLError as exc:
            raise ConfigError(f"config is not valid YAML: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("config root must be a mapping")
        for item in overrides or []:
            apply_override(data, item)
        return cls.from_dict(data)

    # -- derived objects ------------------------------------------------------

    def config_hash(self) -> str:
        canon = json.dumps(self.raw, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()[:16]

    def build_env(self):
        if self.env_name == "lander":
            try:
                return LanderEnv(LanderConfig(**self.env_overrides))
            except TypeError as exc:
                raise ConfigError(f"bad environment overrides: {exc}") from None
        try:
            return BanditEnv(BanditConfig(**self.env_overrides))
        except TypeError as exc:
            raise ConfigError(f"bad environment overrides: {exc}") from None

    def default_reward_params(self) -> RewardParams:
        return RewardParams(alpha=self.alpha_default, weights=dict(self.reward_defaults))

    def hyperparameter_specs(self) -> list[ParamSpec]:
        specs = []
        for entry in self.space_entries["hyperparameters"]:
            entry = dict(entry)
            name = entry.pop("name", None)
            if name is None:
                raise ConfigError("hyperparameter entry without a name")
            if "choices" in entry:
                specs.append(
                    ParamSpec(
                        name=name,
                        kind="categorical",
                        choices=tuple(entry["choices"]),
                        role=ROLE_HYPERPARAMETER,
                    )
                )
            else:
                specs.append(
                    ParamSpec(
                        name=name,
                        lo=float(entry["lo"]),
                        hi=float(entry["hi"]),
                        log_scale=bool(entry.get("log", False)),
                        role=ROLE_HYPERPARAMETER,
                    )
                )
        return specs

    def reward_weight_specs(self) -> list[ParamSpec]:
        specs = []
        for entry in self.space_entries["reward_weights"]:
            entry = dict(entry)
            name = entry.pop("name", None)
            if name is None:
                raise ConfigError("reward weight entry without a name")
            if "lo" in entry and "hi" in entry:
                lo, hi = float(entry["lo"]), float(entry["hi"])
            else:
                default = entry.get("default", self.reward_defaults.get(name))
                if default is None:
                    raise ConfigError(
                        f"reward weight {name!r} needs a default or explicit bounds"
                    )
                lo, hi = weight_search_range(float(default))
            specs.append(
                ParamSpec(
                    name=name,
                    lo=lo,
                    hi=hi,
                    log_scale=bool(entry.get("log", False)),
                    role=ROLE_REWARD_WEIGHT,
                )
            )
        return specs

    def reward_scale_spec(self) -> ParamSpec | None:
        entries = self.space_entries["reward_scale"]
        if not entries:
            return None
        entry = dict(entries[0])
        if not entry.get("optimize", True):
            return None
        return ParamSpec(
            name="alpha",
            lo=float(entry.get("lo", 0.0)),
            hi=float(entry.get("hi", 10.0)),
            role=ROLE_REWARD_SCALE,
        )

    def build_space(self) -> tuple[SearchSpace, dict[str, Any]]:
        """Search space for this arm plus the experiment's frozen values.

        hpo-only freezes reward parameters at the environment defaults;
        rpo-only freezes hyperparameters at the trainer baselines; combined
        optimizes both; combined-rs gives the optimizer the hyperparameters
        and leaves reward weights for per-evaluation uniform sampling.
        """
        hyper = self.hyperparameter_specs()
        weights = self.reward_weight_specs()
        scale = self.reward_scale_spec()

        frozen: dict[str, Any] = {}
        specs: list[ParamSpec]
        if self.arm == "hpo-only":
            specs = hyper
            frozen.update(self.reward_defaults)
            frozen["alpha"] = self.alpha_default
        elif self.arm == "rpo-only":
            specs = weights + ([scale] if scale else [])
            frozen.update(self.trainer_baselines)
            if scale is None:
                frozen["alpha"] = self.alpha_default
        elif self.arm == "combined":
            specs = hyper + weights + ([scale] if scale else [])
            if scale is None:
                frozen["alpha"] = self.alpha_default
        else:  # combined-rs: reward values sampled uniformly per evaluation
            specs = hyper
            frozen["alpha"] = self.alpha_default
        if not specs:
            raise ConfigError(f"arm {self.arm!r} leaves nothing to optimize")
        space = SearchSpace(tuple(specs))
        if self.scaling_mode == "implicit":
            norm = sum(abs(w) for w in self.reward_defaults.values())
            space = implicit_ranges(space, norm)
            frozen["alpha"] = 1.0
        return space, frozen

    def rs_sampling_space(self) -> SearchSpace | None:
        """Reward-parameter space sampled uniformly in the combined-rs arm."""
        if self.arm != "combined-rs":
            return None
        weights = self.reward_weight_specs()
        scale = self.reward_scale_spec()
        return SearchSpace(tuple(weights + ([scale] if scale else [])))


def apply_override(data: dict[str, Any], item: str) -> None:
    """Apply one ``--set dotted.key=value`` override in place."""
    if "=" not in item:
        raise ConfigError(f"override {item!r} is not of the form key=value")
    key, _, raw_value = item.partition("=")
    try:
        value = yaml.safe_load(raw_value)
    except yaml.YAMLError:
        value = raw_value
    node = data
    parts = key.split(".")
    for part in parts[:-1]:
        nxt = node.get(part)
        if not isinstance(nxt, dict):
            nxt = {}
            node[part] = nxt
        node = nxt
    node[parts[-1]] = value
