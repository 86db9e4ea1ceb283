"""Self-contained 2D landing environment.

A point mass with attitude descends toward a pad at the origin under
semi-implicit Euler dynamics.  Every step emits a decomposed reward
(distance progress, speed, tilt, leg contact, fuel, terminal bonus) so the
shaping layer can weight the parts; the task objective is landing in as few
steps as possible, with crashes and timeouts scored at the episode cap.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import _core
from ._core import (
    ACTION_DIM,
    FEATURE_DIM,
    FLAG_CRASHED,
    FLAG_LANDED,
    FLAG_RUNNING,
    FLAG_TIMEOUT,
    FLAG_TRUNCATED,
)
from .shaping import RewardComponents, RewardParams, shaped_reward

COMPONENT_ORDER = ("dist", "vel", "tilt", "contact", "fuel")
COMPONENT_SIGNS = {"dist": 1, "vel": -1, "tilt": -1, "contact": 1, "fuel": -1}
UNWEIGHTED_COMPONENTS = frozenset({"fuel"})
DEFAULT_WEIGHTS = {"dist": 100.0, "vel": 100.0, "tilt": 100.0, "contact": 10.0}

DIRECTION_MINIMIZE = "minimize"
DIRECTION_MAXIMIZE = "maximize"


class LanderError(ValueError):
    """Contract violation in environment usage."""


@dataclass(frozen=True)
class LanderConfig:
    """Environment constants.  The defaults are frozen; experiments may
    override them in config but tests pin behaviour against these values."""

    gravity: float = 1.62
    dt: float = 0.05
    main_accel: float = 6.0
    side_accel: float = 0.45
    side_torque: float = 3.0
    pad_half_width: float = 1.0
    leg_spread: float = 0.3
    leg_contact_height: float = 0.12
    leg_tilt_gate: float = 0.6
    max_land_speed: float = 2.0
    max_land_tilt: float = 0.35
    fuel_rate: float = 1.0
    terminal_bonus: float = 100.0
    terminal_penalty: float = 100.0
    episode_cap: int = 1000
    spawn_height: float = 3.0
    spawn_x_jitter: float = 0.5
    spawn_v_jitter: float = 0.1
    spawn_tilt_jitter: float = 0.05
    pos_scale: float = 3.0
    vel_scale: float = 3.0

    def step_params(self) -> np.ndarray:
        """Flat parameter vector consumed by the rollout backends."""
        return np.array(
            [
                self.gravity, self.dt, self.main_accel, self.side_accel,
                self.side_torque, self.pad_half_width, self.leg_spread,
                self.leg_contact_height, self.leg_tilt_gate,
                self.max_land_speed, self.max_land_tilt, self.fuel_rate,
                self.terminal_bonus, self.terminal_penalty,
                float(self.episode_cap), self.pos_scale, self.vel_scale,
            ]
        )


@dataclass(frozen=True)
class LanderState:
    x: float
    y: float
    vx: float
    vy: float
    theta: float
    omega: float
    legs_contact: tuple[bool, bool] = (False, False)
    fuel_used: float = 0.0
    step_count: int = 0

    def as_tuple(self) -> tuple:
        return (
            self.x, self.y, self.vx, self.vy, self.theta, self.omega,
            1.0 if self.legs_contact[0] else 0.0,
            1.0 if self.legs_contact[1] else 0.0,
            self.fuel_used, self.step_count,
        )


@dataclass(frozen=True)
class LanderAction:
    main_thrust: float
    side_thrust: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "main_thrust", min(max(self.main_thrust, 0.0), 1.0))
        object.__setattr__(self, "side_thrust", min(max(self.side_thrust, -1.0), 1.0))


@dataclass
class Trajectory:
    """Episode record of (state, action, shaped reward) triples."""

    steps: list[tuple[LanderState, LanderAction, float]]
    flag: int
    final_state: LanderState
    episode_cap: int

    @property
    def terminal(self) -> str:
        return {FLAG_LANDED: "landed", FLAG_CRASHED: "crashed", FLAG_TIMEOUT: "timeout"}.get(
            self.flag, "truncated"
        )

    @property
    def shaped_return(self) -> float:
        return float(sum(r for _, _, r in self.steps))


@dataclass
class Episode:
    """Fused rollout output used by the trainer (arrays over steps)."""

    features: np.ndarray      # (T, FEATURE_DIM)
    raw_actions: np.ndarray   # (T, ACTION_DIM) pre-clip samples
    base: np.ndarray          # (T,) sparse/terminal reward
    shaping: dict[str, np.ndarray]
    flag: int
    steps: int
    final_state: tuple
    episode_cap: int


class LanderEnv:
    """Stateless environment facade: states are passed explicitly."""

    name = "lander"
    direction = DIRECTION_MINIMIZE
    feature_dim = FEATURE_DIM
    action_dim = ACTION_DIM
    component_signs = COMPONENT_SIGNS
    unweighted_components = UNWEIGHTED_COMPONENTS

    def __init__(self, config: LanderConfig | None = None):
        self.config = config or LanderConfig()
        self._params = self.config.step_params()

    @property
    def episode_cap(self) -> int:
        return self.config.episode_cap

    @property
    def default_reward_params(self) -> RewardParams:
        return RewardParams(alpha=1.0, weights=dict(DEFAULT_WEIGHTS))

    def reset(self, seed: int) -> LanderState:
        """Deterministic spawn above the pad with seed-jittered offset."""
        cfg = self.config
        rng = np.random.default_rng(seed)
        x = rng.uniform(-cfg.spawn_x_jitter, cfg.spawn_x_jitter)
        vx = rng.uniform(-cfg.spawn_v_jitter, cfg.spawn_v_jitter)
        vy = rng.uniform(-cfg.spawn_v_jitter, 0.0)
        theta = rng.uniform(-cfg.spawn_tilt_jitter, cfg.spawn_tilt_jitter)
        return LanderState(x=x, y=cfg.spawn_height, vx=vx, vy=vy, theta=theta, omega=0.0)

    def step(
        self, state: LanderState, action: LanderAction
    ) -> tuple[LanderState, RewardComponents, int]:
        """Advance one step; returns (state', components, flag)."""
        out = _core.step_scalars(
            self._params, *state.as_tuple(), action.main_thrust, action.side_thrust
        )
        (x, y, vx, vy, th, om, leg0, leg1, fuel, steps,
         base, c_dist, c_vel, c_tilt, c_contact, c_fuel, flag) = out
        new_state = LanderState(
            x=x, y=y, vx=vx, vy=vy, theta=th, omega=om,
            legs_contact=(leg0 > 0.5, leg1 > 0.5), fuel_used=fuel, step_count=steps,
        )
        comps = RewardComponents(
            base=base,
            shaping={"dist": c_dist, "vel": c_vel, "tilt": c_tilt,
                     "contact": c_contact, "fuel": c_fuel},
        )
        return new_state, comps, flag

    def features(self, state: LanderState) -> np.ndarray:
        return np.array(_core.state_features(self._params, *state.as_tuple()[:8]))

    def episode_task_score(self, episode: Episode) -> float:
        return task_score(episode)

    def run_episode(
        self,
        policy_weights: np.ndarray,
        policy_log_std: np.ndarray,
        rng: np.random.Generator,
        max_steps: int | None = None,
        state: LanderState | None = None,
        reset_seed: int | None = None,
    ) -> Episode:
        """Fused rollout through the active backend.

        The per-step Gaussian noise is pre-drawn for the whole horizon so the
        generator advances by the same amount regardless of episode length.
        """
        if state is None:
            if reset_seed is None:
                reset_seed = int(rng.integers(0, 2**31 - 1))
            state = self.reset(reset_seed)
        cap = self.config.episode_cap - state.step_count
        horizon = cap if max_steps is None else min(max_steps, cap)
        noise = rng.standard_normal((max(horizon, 1), ACTION_DIM))
        feats, raw, comp, flag, steps, final_state = _core.simulate_episode(
            self._params, state.as_tuple(), policy_weights, policy_log_std, noise, horizon
        )
        shaping = {name: comp[:, i + 1] for i, name in enumerate(COMPONENT_ORDER)}
        return Episode(
            features=feats, raw_actions=raw, base=comp[:, 0], shaping=shaping,
            flag=flag, steps=state.step_count + steps, final_state=final_state,
            episode_cap=self.config.episode_cap,
        )


def run_trajectory(
    env: LanderEnv,
    controller: Callable[[LanderState], LanderAction],
    seed: int,
    reward_params: RewardParams | None = None,
) -> Trajectory:
    """Step-by-step rollout of a deterministic controller (test/fixture path)."""
    params = reward_params or env.default_reward_params
    state = env.reset(seed)
    steps: list[tuple[LanderState, LanderAction, float]] = []
    flag = FLAG_RUNNING
    while flag == FLAG_RUNNING:
        action = controller(state)
        next_state, comps, flag = env.step(state, action)
        reward = shaped_reward(comps, params, COMPONENT_SIGNS, UNWEIGHTED_COMPONENTS)
        steps.append((state, action, reward))
        state = next_state
    return Trajectory(steps=steps, flag=flag, final_state=state, episode_cap=env.episode_cap)


def task_score(trajectory: Trajectory | Episode) -> float:
    """Landing time in steps; crashes and timeouts score the episode cap."""
    if isinstance(trajectory, Trajectory):
        steps = trajectory.final_state.step_count
    else:
        steps = trajectory.steps
    return task_score_from_outcome(trajectory.flag, steps, trajectory.episode_cap)


def task_score_from_outcome(flag: int, steps: int, episode_cap: int) -> float:
    if flag in (FLAG_RUNNING, FLAG_TRUNCATED):
        raise LanderError("cannot score an incomplete trajectory")
    return float(steps) if flag == FLAG_LANDED else float(episode_cap)


def descend_hover_controller(cfg: LanderConfig) -> Callable[[LanderState], LanderAction]:
    """Scripted soft-landing controller: brake vertical speed, hold attitude."""

    def act(state: LanderState) -> LanderAction:
        # Vertical speed tracking plus attitude damping; no lateral correction
        # (the spawn jitter keeps the craft over the pad already, and lateral
        # maneuvering costs more speed penalty than it saves).
        target_vy = -0.6 - 0.8 * min(state.y, 2.0)
        hover = cfg.gravity / cfg.main_accel
        main = hover + 2.5 * (target_vy - state.vy)
        side = 2.0 * state.theta + 1.2 * state.omega
        return LanderAction(main_thrust=main, side_thrust=side)

    return act


def do_nothing_controller(state: LanderState) -> LanderAction:
    return LanderAction(main_thrust=0.0, side_thrust=0.0)
