"""Episode-throughput benchmark: compiled rollout core vs Python fallback.

Usage:
    python benchmarks/bench_backend.py [--episodes N]

Runs identical batches of lander rollouts through both backends (the
compiled extension must be built; forcing the fallback only needs the env
var) and reports steps/second plus the speedup. Also times one REINFORCE
training through the public trainer API under the active backend.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from hypershape._core import _pyfallback
from hypershape.lander import LanderEnv
from hypershape.shaping import RewardParams
from hypershape.trainer import TrainerSpec, train

try:
    from hypershape._core import _landercore
except ImportError:
    _landercore = None


def bench_backend(simulate, env, episodes: int) -> tuple[float, int]:
    params = env.config.step_params()
    rng = np.random.default_rng(0)
    weights = rng.normal(0.0, 0.4, (2, 9))
    log_std = np.array([-0.7, -0.7])
    cap = env.config.episode_cap
    states = [env.reset(seed).as_tuple() for seed in range(episodes)]
    noises = [np.random.default_rng(seed).standard_normal((cap, 2)) for seed in range(episodes)]

    start = time.perf_counter()
    steps = 0
    for state, noise in zip(states, noises):
        out = simulate(params, state, weights, log_std, noise, cap)
        steps += out[4]
    elapsed = time.perf_counter() - start
    return elapsed, steps


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--episodes", type=int, default=2000)
    args = parser.parse_args()

    env = LanderEnv()
    rows = []
    py_elapsed, py_steps = bench_backend(_pyfallback.simulate_episode, env, args.episodes)
    rows.append(("python", py_elapsed, py_steps))
    if _landercore is not None:
        c_elapsed, c_steps = bench_backend(_landercore.simulate_episode, env, args.episodes)
        assert c_steps == py_steps, "backends disagree on trajectory lengths"
        rows.append(("compiled", c_elapsed, c_steps))

    print(f"{'backend':>9}  {'episodes':>9}  {'steps':>10}  {'time [s]':>9}  {'steps/s':>12}")
    for name, elapsed, steps in rows:
        print(f"{name:>9}  {args.episodes:>9}  {steps:>10}  {elapsed:>9.3f}  {steps / elapsed:>12,.0f}")
    if _landercore is not None:
        print(f"\nspeedup (compiled / python): {py_elapsed / rows[1][1]:.1f}x")
    else:
        print("\ncompiled core not built; only the fallback was timed")

    spec = TrainerSpec(learning_rate=0.03, batch_size=8, budget=100_000, seed=0)
    params = RewardParams(alpha=1.0, weights={"dist": 30.0, "vel": 10.0, "tilt": 5.0, "contact": 10.0})
    start = time.perf_counter()
    train(env, params, spec)
    elapsed = time.perf_counter() - start
    print(f"\none 100k-step training via the active backend: {elapsed:.2f}s "
          f"({spec.budget / elapsed:,.0f} steps/s end to end)")


if __name__ == "__main__":
    main()
