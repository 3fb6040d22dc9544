"""Simulation entry points backed by the compiled kernel."""

from __future__ import annotations

from typing import Optional

import numpy as np

from . import _kernel as K
from .env import EnvConfig
from .fishsim import BehaviorParams
from .rl import LearnParams, QTable

_NO_LOG = np.zeros((0, K.LOG_COLUMNS))


def train_agent(
    cfg: EnvConfig,
    behavior: BehaviorParams,
    learn: LearnParams,
    rng: np.random.Generator,
    init: Optional[QTable] = None,
    record: bool = False,
) -> tuple[QTable, Optional[np.ndarray]]:
    """Q-learning for ``learn.N`` steps from a fresh world.

    Returns the table and, with ``record=True``, the per-step log (columns as
    env.TRAJECTORY_COLUMNS).
    """
    if init is not None:
        if init.values.shape != (cfg.W, cfg.W, cfg.n_actions):
            raise ValueError(
                f"initial Q-table has shape {init.values.shape}, expected {(cfg.W, cfg.W, cfg.n_actions)}"
            )
        Q = init.copy()
    else:
        Q = QTable.for_cells(cfg.W, cfg.dw_max)
    log = np.zeros((learn.N, K.LOG_COLUMNS)) if record else _NO_LOG
    K.run(Q.values, K.initial_world(cfg), K.pack_params(cfg, behavior), rng,
          learn.N, K.TRAIN, learn.alpha, learn.gamma, log)
    return Q, (log if record else None)


def simulate(
    cfg: EnvConfig,
    behavior: BehaviorParams,
    policy: str,
    steps: int,
    rng: np.random.Generator,
    Q: Optional[QTable] = None,
    offset: int = 3,
    record: bool = False,
) -> tuple[float, Optional[np.ndarray]]:
    """Follow a named policy for ``steps`` steps; returns (mean reward, log)."""
    if steps < 1:
        raise ValueError("steps must be >= 1")
    try:
        code = K.POLICY_CODES[policy]
    except KeyError:
        raise ValueError(f"unknown policy {policy!r}") from None
    if code == K.GREEDY:
        if Q is None:
            raise ValueError("policy 'learned' needs a Q-table")
        values = Q.values
    else:
        values = np.zeros((cfg.W, cfg.W, cfg.n_actions))
    prm = K.pack_params(cfg, behavior, stimulus=code != K.NO_STIMULUS, offset=offset)
    log = np.zeros((steps, K.LOG_COLUMNS)) if record else _NO_LOG
    total = K.run(values, K.initial_world(cfg), prm, rng, steps, code, 0.0, 0.0, log)
    return total / steps, (log if record else None)
