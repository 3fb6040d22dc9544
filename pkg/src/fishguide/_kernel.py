"""Compiled fast path for long training runs and rollouts.

Mirrors env.env_step / fishsim.advance_school / rl.train operation for
operation and draw for draw, so for the same generator state it produces
bit-identical trajectories and Q-tables (checked in the test suite). State
lives in small float arrays to keep the compiled signatures simple.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

from .env import EnvConfig, VirtualMode
from .fishsim import BehaviorParams
from .kinematics import LagParams

# parameter vector layout
P_W, P_DWMAX, P_SUBSTEPS, P_GAIN_V, P_SNAP, P_SCHEDULE = 0, 1, 2, 3, 4, 5
P_THETA, P_PIGNORE, P_DXMAX, P_DYMAX, P_MAXTICKS, P_GAIN_R = 6, 7, 8, 9, 10, 11
P_OFFSET, P_STIMULUS, P_STEPSEC = 12, 13, 14
N_PARAMS = 15

# world vector layout
X_R, Y_R, TX, TY, TICKS, X_V, Y_V, DIR, STEP = 0, 1, 2, 3, 4, 5, 6, 7, 8
N_WORLD = 9

# policy codes
TRAIN, GREEDY, THREE_AHEAD, STAY_AT_EDGE, NO_STIMULUS = 0, 1, 2, 3, 4
POLICY_CODES = {"learned": GREEDY, "three_ahead": THREE_AHEAD, "stay_at_edge": STAY_AT_EDGE, "none": NO_STIMULUS}

LOG_COLUMNS = 11


def pack_params(cfg: EnvConfig, behavior: BehaviorParams, stimulus: bool = True, offset: int = 3) -> np.ndarray:
    p = np.zeros(N_PARAMS)
    p[P_W] = cfg.W
    p[P_DWMAX] = cfg.dw_max
    p[P_SUBSTEPS] = cfg.substeps
    p[P_GAIN_V] = LagParams(cfg.inv_tau_virtual).gain(cfg.substep_seconds)
    p[P_SNAP] = 1.0 if cfg.virtual_mode == VirtualMode.SNAP else 0.0
    p[P_SCHEDULE] = cfg.direction_schedule
    p[P_THETA] = behavior.theta
    p[P_PIGNORE] = behavior.p_ignore
    p[P_DXMAX] = behavior.dx_max
    p[P_DYMAX] = behavior.dy_max
    p[P_MAXTICKS] = behavior.max_ticks
    p[P_GAIN_R] = behavior.lag.gain(cfg.substep_seconds)
    p[P_OFFSET] = offset
    p[P_STIMULUS] = 1.0 if stimulus else 0.0
    p[P_STEPSEC] = cfg.step_seconds
    return p


def initial_world(cfg: EnvConfig, direction: int = 1) -> np.ndarray:
    w = np.zeros(N_WORLD)
    w[X_R] = w[TX] = cfg.school_x0
    w[Y_R] = w[TY] = cfg.school_y0
    w[X_V] = cfg.virtual_x0
    w[Y_V] = cfg.virtual_y0
    w[DIR] = direction
    return w


@njit(cache=True)
def _clamp01(v):
    if v < 0.0:
        return 0.0
    if v > 1.0:
        return 1.0
    return v


@njit(cache=True)
def _lag(pos, target, gain):
    return _clamp01(pos + (target - pos) * gain)


@njit(cache=True)
def _cell_of(x, W, d):
    if d > 0:
        w = math.floor(x * W)
    else:
        w = W - math.ceil(x * W)
    if w < 0:
        return 0
    if w > W - 1:
        return W - 1
    return int(w)


@njit(cache=True)
def _cell_center(w, W, d):
    if d > 0:
        return (w + 0.5) / W
    return (W - w - 0.5) / W


@njit(cache=True)
def _step(world, prm, rng, dw):
    """One MDP step; mutates ``world`` and returns the reward."""
    W = int(prm[P_W])
    d = world[DIR]
    wv = _cell_of(world[X_V], W, d)
    wt = wv + dw
    if wt < 0:
        wt = 0
    elif wt > W - 1:
        wt = W - 1
    vtx = _cell_center(wt, W, d)
    vty = world[Y_R]
    vx = world[X_V]
    vy = world[Y_V]
    if prm[P_SNAP] > 0.5:
        vx = _clamp01(vtx)
        vy = _clamp01(vty)
    stimulus = prm[P_STIMULUS] > 0.5
    gain_v = prm[P_GAIN_V]
    gain_r = prm[P_GAIN_R]
    maxticks = int(prm[P_MAXTICKS])
    xr = world[X_R]
    yr = world[Y_R]
    tx = world[TX]
    ty = world[TY]
    ticks = int(world[TICKS])
    for _ in range(int(prm[P_SUBSTEPS])):
        if ticks == 0:
            ticks = 1 + int(rng.random() * maxticks)
            if ticks > maxticks:
                ticks = maxticks
            u = rng.random()
            ux = rng.random()
            uy = rng.random()
            react = False
            if stimulus:
                ddx = xr - vx
                ddy = yr - vy
                if math.sqrt(ddx * ddx + ddy * ddy) <= prm[P_THETA] and u >= prm[P_PIGNORE]:
                    react = True
            if react:
                tx = vx
                ty = vy
            else:
                tx = _clamp01(xr + prm[P_DXMAX] * (2.0 * ux - 1.0))
                ty = _clamp01(yr + prm[P_DYMAX] * (2.0 * uy - 1.0))
        if prm[P_SNAP] < 0.5:
            vx = _lag(vx, vtx, gain_v)
            vy = _lag(vy, vty, gain_v)
        xr = _lag(xr, tx, gain_r)
        yr = _lag(yr, ty, gain_r)
        ticks -= 1
    world[X_R] = xr
    world[Y_R] = yr
    world[TX] = tx
    world[TY] = ty
    world[TICKS] = ticks
    world[X_V] = vx
    world[Y_V] = vy
    world[STEP] += 1.0
    if d > 0:
        return 2.0 * (xr - 0.5)
    return 2.0 * (0.5 - xr)


@njit(cache=True)
def _pick(Q, wr, wv, u):
    row = Q[wr, wv]
    best = row.max()
    k = 0
    for i in range(row.shape[0]):
        if row[i] == best:
            k += 1
    j = int(u * k)
    if j > k - 1:
        j = k - 1
    for i in range(row.shape[0]):
        if row[i] == best:
            if j == 0:
                return i
            j -= 1
    return 0


@njit(cache=True)
def run(Q, world, prm, rng, n_steps, policy, alpha, gamma, log):
    """Run ``n_steps`` steps and return the summed reward.

    ``policy == TRAIN`` performs epsilon-greedy Q-learning in place on ``Q``.
    ``log`` is either empty or an ``(n_steps, LOG_COLUMNS)`` array to fill.
    """
    W = int(prm[P_W])
    dw_max = int(prm[P_DWMAX])
    n_actions = 2 * dw_max + 1
    schedule = int(prm[P_SCHEDULE])
    offset = int(prm[P_OFFSET])
    logging = log.shape[0] > 0
    total = 0.0
    d = world[DIR]
    wr = _cell_of(world[X_R], W, d)
    wv = _cell_of(world[X_V], W, d)
    for n in range(n_steps):
        if policy == TRAIN:
            if n_steps == 1:
                eps = 1.0
            else:
                eps = 1.0 - n / (n_steps - 1)
            explore = rng.random() < eps
            u = rng.random()
            if explore:
                ai = int(u * n_actions)
                if ai > n_actions - 1:
                    ai = n_actions - 1
            else:
                ai = _pick(Q, wr, wv, u)
            dw = ai - dw_max
        elif policy == GREEDY:
            ai = _pick(Q, wr, wv, rng.random())
            dw = ai - dw_max
        elif policy == THREE_AHEAD:
            dw = wr + offset - wv
            if dw < -dw_max:
                dw = -dw_max
            elif dw > dw_max:
                dw = dw_max
            ai = dw + dw_max
        elif policy == STAY_AT_EDGE:
            dw = dw_max
            ai = dw + dw_max
        else:
            dw = 0
            ai = dw_max
        r = _step(world, prm, rng, dw)
        total += r
        nwr = _cell_of(world[X_R], W, d)
        nwv = _cell_of(world[X_V], W, d)
        if policy == TRAIN:
            old = Q[wr, wv, ai]
            Q[wr, wv, ai] = old + alpha * (r + gamma * Q[nwr, nwv].max() - old)
        if logging:
            log[n, 0] = world[STEP]
            log[n, 1] = world[STEP] * prm[P_STEPSEC]
            log[n, 2] = d
            log[n, 3] = world[X_R]
            log[n, 4] = world[Y_R]
            log[n, 5] = world[X_V]
            log[n, 6] = world[Y_V]
            log[n, 7] = nwr
            log[n, 8] = nwv
            log[n, 9] = dw
            log[n, 10] = r
        if int(world[STEP]) % schedule == 0:
            d = -d
            world[DIR] = d
            wr = _cell_of(world[X_R], W, d)
            wv = _cell_of(world[X_V], W, d)
        else:
            wr = nwr
            wv = nwv
    return total
