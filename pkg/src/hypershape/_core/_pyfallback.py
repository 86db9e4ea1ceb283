"""Pure-Python lander rollout core.

This is the reference implementation of the episode hot loop.  The compiled
extension (``_landercore.pyx``) mirrors these formulas operation for
operation; both must produce bit-identical trajectories, so keep the order
of arithmetic unchanged when editing either file.

Step parameter array layout (float64, length 17):
  0 gravity        5 pad_half_width      10 max_land_tilt   15 pos_scale
  1 dt             6 leg_spread          11 fuel_rate       16 vel_scale
  2 main_accel     7 leg_contact_height  12 terminal_bonus
  3 side_accel     8 leg_tilt_gate       13 terminal_penalty
  4 side_torque    9 max_land_speed      14 episode_cap
"""

from __future__ import annotations

import math

import numpy as np

FEATURE_DIM = 9
ACTION_DIM = 2

FLAG_RUNNING = 0
FLAG_LANDED = 1
FLAG_CRASHED = 2
FLAG_TIMEOUT = 3
FLAG_TRUNCATED = 4


def step_scalars(p, x, y, vx, vy, th, om, leg0, leg1, fuel, steps, a_main, a_side):
    """Advance the lander one control step (semi-implicit Euler).

    Returns the new state scalars followed by the reward components
    (base, dist, vel, tilt, contact, fuel_step) and the terminal flag.
    """
    m = 0.0 if a_main < 0.0 else (1.0 if a_main > 1.0 else a_main)
    s = -1.0 if a_side < -1.0 else (1.0 if a_side > 1.0 else a_side)

    dist0 = math.sqrt(x * x + y * y)
    sin_th = math.sin(th)
    cos_th = math.cos(th)
    thrust = m * p[2]
    ax = -thrust * sin_th + s * p[3] * cos_th
    ay = thrust * cos_th + s * p[3] * sin_th - p[0]

    om2 = om - s * p[4] * p[1]
    th2 = th + om2 * p[1]
    vx2 = vx + ax * p[1]
    vy2 = vy + ay * p[1]
    x2 = x + vx2 * p[1]
    y2 = y + vy2 * p[1]
    steps2 = steps + 1
    fuel_step = (m + abs(s)) * p[11] * p[1]
    fuel2 = fuel + fuel_step

    sin_th2 = math.sin(th2)
    h_left = y2 - p[6] * sin_th2
    h_right = y2 + p[6] * sin_th2
    gate = abs(th2) <= p[8]
    new_leg0 = 1.0 if (gate and h_left <= p[7]) else 0.0
    new_leg1 = 1.0 if (gate and h_right <= p[7]) else 0.0
    newly = 0.0
    if new_leg0 > 0.5 and leg0 < 0.5:
        newly += 1.0
    if new_leg1 > 0.5 and leg1 < 0.5:
        newly += 1.0

    speed = math.sqrt(vx2 * vx2 + vy2 * vy2)
    flag = FLAG_RUNNING
    base = 0.0
    if y2 <= 0.0:
        if abs(x2) <= p[5] and speed <= p[9] and abs(th2) <= p[10]:
            flag = FLAG_LANDED
            base = p[12]
        else:
            flag = FLAG_CRASHED
            base = -p[13]
    elif steps2 >= int(p[14]):
        flag = FLAG_TIMEOUT

    c_dist = dist0 - math.sqrt(x2 * x2 + y2 * y2)
    return (
        x2, y2, vx2, vy2, th2, om2, new_leg0, new_leg1, fuel2, steps2,
        base, c_dist, speed, abs(th2), newly, fuel_step, flag,
    )


def state_features(p, x, y, vx, vy, th, om, leg0, leg1):
    """Policy observation vector for one state."""
    return (
        x / p[15], y / p[15], vx / p[16], vy / p[16],
        th, om, leg0, leg1, 1.0,
    )


def simulate_episode(params, state0, weights, log_std, noise, max_steps):
    """Roll out one episode under a linear-Gaussian controller.

    ``noise`` must hold at least ``max_steps`` rows of standard-normal draws,
    one per action dimension; consuming it in step order is what makes the
    rollout deterministic and backend-independent.
    """
    p = params
    w = weights
    x, y, vx, vy, th, om, leg0, leg1, fuel, steps = state0
    sig0 = math.exp(log_std[0])
    sig1 = math.exp(log_std[1])

    feats = np.empty((max_steps, FEATURE_DIM))
    raw = np.empty((max_steps, ACTION_DIM))
    comp = np.empty((max_steps, 6))  # base, dist, vel, tilt, contact, fuel

    t = 0
    flag = FLAG_TRUNCATED
    while t < max_steps:
        f = state_features(p, x, y, vx, vy, th, om, leg0, leg1)
        mu0 = 0.0
        mu1 = 0.0
        for j in range(FEATURE_DIM):
            mu0 += w[0, j] * f[j]
            mu1 += w[1, j] * f[j]
        a0 = mu0 + sig0 * noise[t, 0]
        a1 = mu1 + sig1 * noise[t, 1]

        (x, y, vx, vy, th, om, leg0, leg1, fuel, steps,
         base, c_dist, c_vel, c_tilt, c_contact, c_fuel, step_flag) = step_scalars(
            p, x, y, vx, vy, th, om, leg0, leg1, fuel, steps, a0, a1
        )
        for j in range(FEATURE_DIM):
            feats[t, j] = f[j]
        raw[t, 0] = a0
        raw[t, 1] = a1
        comp[t, 0] = base
        comp[t, 1] = c_dist
        comp[t, 2] = c_vel
        comp[t, 3] = c_tilt
        comp[t, 4] = c_contact
        comp[t, 5] = c_fuel
        t += 1
        if step_flag != FLAG_RUNNING:
            flag = step_flag
            break

    final_state = (x, y, vx, vy, th, om, leg0, leg1, fuel, steps)
    return feats[:t], raw[:t], comp[:t], flag, t, final_state
