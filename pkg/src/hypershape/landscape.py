"""Pairwise parameter landscapes: grid sweeps and best-response lines.

One axis is typically a trainer hyperparameter and the other a reward
weight; every grid cell trains fresh policies with that pair substituted
into a frozen baseline configuration and records the mean task score.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Callable, Mapping, Sequence

import numpy as np

from .journal import EvalRecord, JournalWriter, STATUS_FAILED, STATUS_OK
from .lander import DIRECTION_MINIMIZE
from .shaping import RewardParams, ShapingError
from .space import ParamSpec
from .trainer import TrainerSpec, TrainingDivergedError, evaluate, train
from .seeding import derive_seed


class LandscapeError(ValueError):
    pass


@dataclass(frozen=True)
class GridAxis:
    """Grid points along one parameter, equidistant in value or in log."""

    spec: ParamSpec
    values: tuple[float, ...]

    @property
    def name(self) -> str:
        return self.spec.name

    @property
    def resolution(self) -> int:
        return len(self.values)


def make_axis(spec: ParamSpec, resolution: int) -> GridAxis:
    """Arithmetic progression over [lo, hi], geometric for log-scale specs;
    the endpoints are always included exactly."""
    if resolution < 2:
        raise LandscapeError(f"resolution must be >= 2, got {resolution}")
    if spec.kind != "continuous":
        raise LandscapeError(f"{spec.name}: landscape axes must be continuous")
    if spec.log_scale:
        if spec.lo <= 0:
            raise LandscapeError(f"{spec.name}: log axis requires lo > 0")
        values = np.geomspace(spec.lo, spec.hi, resolution)
    else:
        values = np.linspace(spec.lo, spec.hi, resolution)
    values[0] = spec.lo
    values[-1] = spec.hi
    return GridAxis(spec=spec, values=tuple(float(v) for v in values))


@dataclass
class LandscapeGrid:
    """Mean/std task score per (axis_a value, axis_b value) cell."""

    axis_a: GridAxis
    axis_b: GridAxis
    mean: np.ndarray     # (res_a, res_b)
    std: np.ndarray
    n_seeds: np.ndarray  # per-cell completed trainings
    failed: np.ndarray   # bool mask
    frozen_values: dict[str, Any]
    direction: str


def sweep(
    axis_a: GridAxis,
    axis_b: GridAxis,
    frozen_values: Mapping[str, Any],
    seeds: Sequence[int],
    env,
    base_spec: TrainerSpec,
    budget: int,
    *,
    eval_episodes: int = 10,
    build_reward_params: Callable[[Mapping[str, Any]], RewardParams] | None = None,
    journal: JournalWriter | None = None,
) -> LandscapeGrid:
    """Train at every grid cell and record mean/std task performance.

    ``frozen_values`` holds every parameter the grid does not vary; the same
    ``seeds`` are reused for every cell so any cell can be reproduced as a
    standalone training.  Failed trainings mark the cell failed instead of
    aborting the sweep.
    """
    if axis_a.name == axis_b.name:
        raise LandscapeError(f"axes must reference distinct parameters, got {axis_a.name}")
    if len(seeds) < 1:
        raise LandscapeError("sweep needs at least one seed")
    if callable(env):
        env = env()
    if build_reward_params is None:
        default = env.default_reward_params

        def build_reward_params(values: Mapping[str, Any]) -> RewardParams:
            weights = {
                name: float(values.get(name, w)) for name, w in default.weights.items()
            }
            return RewardParams(alpha=float(values.get("alpha", default.alpha)), weights=weights)

    res_a, res_b = axis_a.resolution, axis_b.resolution
    mean = np.full((res_a, res_b), np.nan)
    std = np.full((res_a, res_b), np.nan)
    n_seeds = np.zeros((res_a, res_b), dtype=int)
    failed = np.zeros((res_a, res_b), dtype=bool)
    seq = 0
    for i, va in enumerate(axis_a.values):
        for j, vb in enumerate(axis_b.values):
            values = dict(frozen_values)
            values[axis_a.name] = va
            values[axis_b.name] = vb
            cell_scores = []
            for seed in seeds:
                spec = base_spec.with_values(values)
                spec = TrainerSpec(
                    learning_rate=spec.learning_rate,
                    discounting=spec.discounting,
                    entropy_coef=spec.entropy_coef,
                    batch_size=spec.batch_size,
                    budget=budget,
                    seed=int(seed),
                )
                status = STATUS_OK
                score = None
                try:
                    params = build_reward_params(values)
                    policy = train(env, params, spec)
                    pairs = evaluate(
                        policy, env, params, eval_episodes, derive_seed(int(seed), 0xE7A1)
                    )
                    score = float(np.mean([p[0] for p in pairs]))
                    cell_scores.append(score)
                except (TrainingDivergedError, ShapingError):
                    status = STATUS_FAILED
                if journal is not None:
                    journal.write(
                        EvalRecord(
                            seq=seq,
                            config_id=f"cell-{i}-{j}",
                            unit=[],
                            values={**values, "_seed": int(seed)},
                            budget=budget,
                            fitness_seeds=[int(seed)],
                            per_seed=[score] if score is not None else [],
                            fitness=score,
                            status=status,
                        )
                    )
                seq += 1
            if cell_scores:
                sample = np.asarray(cell_scores)
                mean[i, j] = sample.mean()
                std[i, j] = sample.std(ddof=1) if sample.size > 1 else 0.0
                n_seeds[i, j] = sample.size
            else:
                failed[i, j] = True
    return LandscapeGrid(
        axis_a=axis_a,
        axis_b=axis_b,
        mean=mean,
        std=std,
        n_seeds=n_seeds,
        failed=failed,
        frozen_values=dict(frozen_values),
        direction=env.direction,
    )


def best_response(grid: LandscapeGrid, along: str = "a") -> list[int]:
    """Best cell index per grid line, under the environment's direction.

    ``along='a'`` scans each row of axis_a (returning the best axis_b index
    per axis_a value); ``along='b'`` scans columns.  Failed cells count as
    worst; ties break toward the lower index.
    """
    if along not in ("a", "b"):
        raise LandscapeError(f"along must be 'a' or 'b', got {along!r}")
    minimize = grid.direction == DIRECTION_MINIMIZE
    worst = math.inf if minimize else -math.inf
    scores = np.where(grid.failed | np.isnan(grid.mean), worst, grid.mean)
    if along == "b":
        scores = scores.T
    picker = np.argmin if minimize else np.argmax
    return [int(picker(row)) for row in scores]


def grid_to_rows(grid: LandscapeGrid) -> list[dict[str, Any]]:
    rows = []
    for i, va in enumerate(grid.axis_a.values):
        for j, vb in enumerate(grid.axis_b.values):
            rows.append(
                {
                    grid.axis_a.name: float(va),
                    grid.axis_b.name: float(vb),
                    "mean": None if math.isnan(grid.mean[i, j]) else float(grid.mean[i, j]),
                    "std": None if math.isnan(grid.std[i, j]) else float(grid.std[i, j]),
                    "n": int(grid.n_seeds[i, j]),
                    "failed": bool(grid.failed[i, j]),
                }
            )
    return rows


def write_grid_csv(grid: LandscapeGrid, path: str) -> None:
    """Cell CSV: (param_a, param_b, mean, std, n, failed); headers carry the
    parameter names and their scale kind."""
    scale_a = "log" if grid.axis_a.spec.log_scale else "linear"
    scale_b = "log" if grid.axis_b.spec.log_scale else "linear"
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(
            f"{grid.axis_a.name}[{scale_a}],{grid.axis_b.name}[{scale_b}],mean,std,n,failed\n"
        )
        for row in grid_to_rows(grid):
            mean = "" if row["mean"] is None else repr(row["mean"])
            std = "" if row["std"] is None else repr(row["std"])
            fh.write(
                f"{row[grid.axis_a.name]!r},{row[grid.axis_b.name]!r},"
                f"{mean},{std},{row['n']},{str(row['failed']).lower()}\n"
            )


def write_best_response_csv(grid: LandscapeGrid, path: str) -> None:
    """Companion CSV: the best partner value along each axis line."""
    best_b = best_response(grid, along="a")
    best_a = best_response(grid, along="b")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"line_along,line_value,best_{grid.axis_b.name},best_{grid.axis_a.name}\n")
        for i, va in enumerate(grid.axis_a.values):
            fh.write(f"{grid.axis_a.name},{va!r},{grid.axis_b.values[best_b[i]]!r},\n")
        for j, vb in enumerate(grid.axis_b.values):
            fh.write(f"{grid.axis_b.name},{vb!r},,{grid.axis_a.values[best_a[j]]!r}\n")
