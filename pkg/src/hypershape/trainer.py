"""Policy-gradient trainer over a linear-Gaussian controller.

The inner loop the outer optimizer tunes: REINFORCE with a moving-average
baseline, batch advantage normalization, and an entropy bonus.  Its
hyperparameters play the same roles the outer search spaces expose
(learning rate, discounting = 1 - gamma, entropy coefficient, batch size).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .lander import Episode
from .seeding import derive_seed
from .shaping import RewardParams, shaped_reward_steps

LOG_STD_INIT = math.log(0.5)
LOG_STD_MIN = -4.0
LOG_STD_MAX = 1.0


class TrainingDivergedError(RuntimeError):
    """Non-finite gradients or parameters; the evaluation counts as failed."""


@dataclass(frozen=True)
class TrainerSpec:
    """Inner-loop hyperparameters plus the step budget and seed."""

    learning_rate: float = 3e-4
    discounting: float = 0.01  # 1 - gamma
    entropy_coef: float = 0.01
    batch_size: int = 4  # episodes per policy update
    budget: int = 10_000  # environment steps
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0.0 < self.discounting < 1.0:
            raise ValueError(f"discounting must be in (0, 1), got {self.discounting}")
        if self.budget < 0:
            raise ValueError("budget must be non-negative")
        if self.batch_size < 1:
            raise ValueError("batch_size must be at least 1")

    @property
    def gamma(self) -> float:
        return 1.0 - self.discounting

    def with_values(self, values: dict) -> "TrainerSpec":
        """Override hyperparameter fields from a decoded-values map."""
        known = {k: v for k, v in values.items() if k in _HYPERPARAMETER_FIELDS}
        if "batch_size" in known:
            known["batch_size"] = int(known["batch_size"])
        return replace(self, **known)


_HYPERPARAMETER_FIELDS = ("learning_rate", "discounting", "entropy_coef", "batch_size")


@dataclass
class Policy:
    """Linear-Gaussian controller: mean = weights @ features, learned log-std."""

    weights: np.ndarray  # (action_dim, feature_dim)
    log_std: np.ndarray  # (action_dim,)

    def copy(self) -> "Policy":
        return Policy(self.weights.copy(), self.log_std.copy())


def initial_policy(env) -> Policy:
    return Policy(
        weights=np.zeros((env.action_dim, env.feature_dim)),
        log_std=np.full(env.action_dim, LOG_STD_INIT),
    )


def reinforce_gradient(
    policy: Policy,
    features: np.ndarray,
    raw_actions: np.ndarray,
    advantages: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """Likelihood-ratio gradient of the expected advantage-weighted return.

    With raw rewards as advantages this is the plain REINFORCE estimator of
    the gradient of expected reward, which is what the finite-difference
    check validates.
    """
    sigma = np.exp(policy.log_std)
    mu = features @ policy.weights.T  # (T, A)
    z = (raw_actions - mu) / sigma
    score_mu = z / sigma  # d log pi / d mu
    grad_w = (advantages[:, None] * score_mu).T @ features / len(advantages)
    grad_log_std = np.mean(advantages[:, None] * (z * z - 1.0), axis=0)
    return grad_w, grad_log_std


def discounted_returns(rewards: np.ndarray, gamma: float) -> np.ndarray:
    out = np.empty_like(rewards)
    acc = 0.0
    for t in range(len(rewards) - 1, -1, -1):
        acc = rewards[t] + gamma * acc
        out[t] = acc
    return out


class _Adam:
    """Per-parameter step-size control; raw likelihood-ratio gradients scale
    with 1/sigma and blow up as the policy sharpens."""

    def __init__(self, shape, beta1=0.9, beta2=0.999, eps=1e-8):
        self.m = np.zeros(shape)
        self.v = np.zeros(shape)
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.t = 0

    def step(self, grad: np.ndarray, lr: float) -> np.ndarray:
        self.t += 1
        self.m = self.beta1 * self.m + (1 - self.beta1) * grad
        self.v = self.beta2 * self.v + (1 - self.beta2) * grad * grad
        m_hat = self.m / (1 - self.beta1**self.t)
        v_hat = self.v / (1 - self.beta2**self.t)
        return lr * m_hat / (np.sqrt(v_hat) + self.eps)


def train(env, reward_params: RewardParams, spec: TrainerSpec) -> Policy:
    """Train a policy on the shaped reward within the step budget.

    Consumes at most ``spec.budget`` environment steps (the final episode is
    truncated at the boundary) and is bit-reproducible for a fixed spec.
    """
    if callable(env):
        env = env()
    rng = np.random.default_rng(spec.seed)
    policy = initial_policy(env)
    signs = env.component_signs
    unweighted = env.unweighted_components
    opt_w = _Adam(policy.weights.shape)
    opt_ls = _Adam(policy.log_std.shape)

    steps_used = 0
    baseline = 0.0
    baseline_ready = False
    while steps_used < spec.budget:
        episodes: list[Episode] = []
        for _ in range(spec.batch_size):
            remaining = spec.budget - steps_used
            if remaining <= 0:
                break
            ep = env.run_episode(policy.weights, policy.log_std, rng, max_steps=remaining)
            steps_used += len(ep.base)
            episodes.append(ep)
        if not episodes:
            break

        returns = []
        for ep in episodes:
            rewards = shaped_reward_steps(ep.base, ep.shaping, reward_params, signs, unweighted)
            returns.append(discounted_returns(rewards, spec.gamma))
        all_returns = np.concatenate(returns)
        batch_mean = float(all_returns.mean())
        if not baseline_ready:
            baseline = batch_mean
            baseline_ready = True
        advantages = all_returns - baseline
        baseline = 0.8 * baseline + 0.2 * batch_mean
        scale = float(advantages.std())
        if scale > 0:
            advantages = advantages / scale

        feats = np.concatenate([ep.features for ep in episodes])
        raws = np.concatenate([ep.raw_actions for ep in episodes])
        grad_w, grad_log_std = reinforce_gradient(policy, feats, raws, advantages)
        grad_log_std = grad_log_std + spec.entropy_coef

        policy.weights = policy.weights + opt_w.step(grad_w, spec.learning_rate)
        policy.log_std = np.clip(
            policy.log_std + opt_ls.step(grad_log_std, spec.learning_rate),
            LOG_STD_MIN,
            LOG_STD_MAX,
        )
        if not (np.all(np.isfinite(policy.weights)) and np.all(np.isfinite(policy.log_std))):
            raise TrainingDivergedError(
                f"non-finite policy parameters after {steps_used} steps"
            )
    return policy


def evaluate(
    policy: Policy,
    env,
    reward_params: RewardParams,
    n_episodes: int,
    seed: int,
) -> list[tuple[float, float]]:
    """Run evaluation episodes; returns (task score, default-shaped return) pairs.

    Episode seeds are derived from ``seed`` so repeated calls are identical.
    The rollouts themselves do not depend on ``reward_params``; the reported
    return is always computed with the environment's default reward shape.
    """
    if callable(env):
        env = env()
    if n_episodes < 1:
        raise ValueError("n_episodes must be at least 1")
    default = env.default_reward_params
    out: list[tuple[float, float]] = []
    for i in range(n_episodes):
        reset_seed = derive_seed(seed, i, 0)
        noise_rng = np.random.default_rng(derive_seed(seed, i, 1))
        ep = env.run_episode(policy.weights, policy.log_std, noise_rng, reset_seed=reset_seed)
        score = env.episode_task_score(ep)
        ret = float(
            np.sum(
                shaped_reward_steps(
                    ep.base, ep.shaping, default, env.component_signs, env.unweighted_components
                )
            )
        )
        out.append((score, ret))
    return out
