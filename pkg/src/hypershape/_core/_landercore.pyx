# cython: boundscheck=False, wraparound=False, cdivision=False
"""Compiled lander rollout core.

Mirrors ``_pyfallback.simulate_episode`` operation for operation; both
backends must produce bit-identical trajectories.  See the fallback module
for the parameter array layout.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, fabs, sin, cos, sqrt

cnp.import_array()

FEATURE_DIM = 9
ACTION_DIM = 2

FLAG_RUNNING = 0
FLAG_LANDED = 1
FLAG_CRASHED = 2
FLAG_TIMEOUT = 3
FLAG_TRUNCATED = 4


def simulate_episode(params, state0, weights, log_std, noise, max_steps):
    cdef double[::1] p = np.ascontiguousarray(params, dtype=np.float64)
    cdef double[:, ::1] w = np.ascontiguousarray(weights, dtype=np.float64)
    cdef double[::1] ls = np.ascontiguousarray(log_std, dtype=np.float64)
    cdef double[:, ::1] z = np.ascontiguousarray(noise, dtype=np.float64)
    cdef Py_ssize_t n_steps = max_steps

    cdef double x = state0[0]
    cdef double y = state0[1]
    cdef double vx = state0[2]
    cdef double vy = state0[3]
    cdef double th = state0[4]
    cdef double om = state0[5]
    cdef double leg0 = state0[6]
    cdef double leg1 = state0[7]
    cdef double fuel = state0[8]
    cdef long steps = state0[9]

    cdef double sig0 = exp(ls[0])
    cdef double sig1 = exp(ls[1])

    feats_arr = np.empty((n_steps, 9))
    raw_arr = np.empty((n_steps, 2))
    comp_arr = np.empty((n_steps, 6))
    cdef double[:, ::1] feats = feats_arr
    cdef double[:, ::1] raw = raw_arr
    cdef double[:, ::1] comp = comp_arr

    cdef long cap = <long> p[14]
    cdef double f0, f1, f2, f3, f4, f5, f6, f7, f8
    cdef double mu0, mu1, a0, a1, m, s
    cdef double dist0, sin_th, cos_th, thrust, ax, ay
    cdef double om2, th2, vx2, vy2, x2, y2, fuel_step
    cdef double sin_th2, h_left, h_right, new_leg0, new_leg1, newly
    cdef double speed, base, c_dist
    cdef int gate, step_flag
    cdef Py_ssize_t t = 0
    cdef int flag = FLAG_TRUNCATED

    while t < n_steps:
        f0 = x / p[15]
        f1 = y / p[15]
        f2 = vx / p[16]
        f3 = vy / p[16]
        f4 = th
        f5 = om
        f6 = leg0
        f7 = leg1
        f8 = 1.0
        mu0 = 0.0
        mu1 = 0.0
        mu0 += w[0, 0] * f0; mu1 += w[1, 0] * f0
        mu0 += w[0, 1] * f1; mu1 += w[1, 1] * f1
        mu0 += w[0, 2] * f2; mu1 += w[1, 2] * f2
        mu0 += w[0, 3] * f3; mu1 += w[1, 3] * f3
        mu0 += w[0, 4] * f4; mu1 += w[1, 4] * f4
        mu0 += w[0, 5] * f5; mu1 += w[1, 5] * f5
        mu0 += w[0, 6] * f6; mu1 += w[1, 6] * f6
        mu0 += w[0, 7] * f7; mu1 += w[1, 7] * f7
        mu0 += w[0, 8] * f8; mu1 += w[1, 8] * f8
        a0 = mu0 + sig0 * z[t, 0]
        a1 = mu1 + sig1 * z[t, 1]

        m = 0.0 if a0 < 0.0 else (1.0 if a0 > 1.0 else a0)
        s = -1.0 if a1 < -1.0 else (1.0 if a1 > 1.0 else a1)

        dist0 = sqrt(x * x + y * y)
        sin_th = sin(th)
        cos_th = cos(th)
        thrust = m * p[2]
        ax = -thrust * sin_th + s * p[3] * cos_th
        ay = thrust * cos_th + s * p[3] * sin_th - p[0]

        om2 = om - s * p[4] * p[1]
        th2 = th + om2 * p[1]
        vx2 = vx + ax * p[1]
        vy2 = vy + ay * p[1]
        x2 = x + vx2 * p[1]
        y2 = y + vy2 * p[1]
        steps = steps + 1
        fuel_step = (m + fabs(s)) * p[11] * p[1]
        fuel = fuel + fuel_step

        sin_th2 = sin(th2)
        h_left = y2 - p[6] * sin_th2
        h_right = y2 + p[6] * sin_th2
        gate = fabs(th2) <= p[8]
        new_leg0 = 1.0 if (gate and h_left <= p[7]) else 0.0
        new_leg1 = 1.0 if (gate and h_right <= p[7]) else 0.0
        newly = 0.0
        if new_leg0 > 0.5 and leg0 < 0.5:
            newly += 1.0
        if new_leg1 > 0.5 and leg1 < 0.5:
            newly += 1.0

        speed = sqrt(vx2 * vx2 + vy2 * vy2)
        step_flag = FLAG_RUNNING
        base = 0.0
        if y2 <= 0.0:
            if fabs(x2) <= p[5] and speed <= p[9] and fabs(th2) <= p[10]:
                step_flag = FLAG_LANDED
                base = p[12]
            else:
                step_flag = FLAG_CRASHED
                base = -p[13]
        elif steps >= cap:
            step_flag = FLAG_TIMEOUT

        c_dist = dist0 - sqrt(x2 * x2 + y2 * y2)

        feats[t, 0] = f0
        feats[t, 1] = f1
        feats[t, 2] = f2
        feats[t, 3] = f3
        feats[t, 4] = f4
        feats[t, 5] = f5
        feats[t, 6] = f6
        feats[t, 7] = f7
        feats[t, 8] = f8
        raw[t, 0] = a0
        raw[t, 1] = a1
        comp[t, 0] = base
        comp[t, 1] = c_dist
        comp[t, 2] = speed
        comp[t, 3] = fabs(th2)
        comp[t, 4] = newly
        comp[t, 5] = fuel_step

        x = x2
        y = y2
        vx = vx2
        vy = vy2
        th = th2
        om = om2
        leg0 = new_leg0
        leg1 = new_leg1
        t += 1
        if step_flag != FLAG_RUNNING:
            flag = step_flag
            break

    final_state = (x, y, vx, vy, th, om, leg0, leg1, fuel, int(steps))
    return feats_arr[:t], raw_arr[:t], comp_arr[:t], flag, int(t), final_state
