"""Tabular Q-learning with a linearly decaying epsilon-greedy schedule."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np


@dataclass(frozen=True)
class LearnParams:
    gamma: float = 0.9
    alpha: float = 0.1
    N: int = 1800

    def __post_init__(self):
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError(f"gamma must lie in [0, 1], got {self.gamma}")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.N < 1:
            raise ValueError(f"N must be >= 1, got {self.N}")


class QTable:
    """Dense action values indexed by ``state + (action_index,)``.

    For the fish task the state is ``(w_real, w_virtual)`` and action index
    ``i`` stands for the cell displacement ``i - dw_max``.
    """

    def __init__(self, values: np.ndarray, actions: Sequence[int]):
        values = np.ascontiguousarray(values, dtype=np.float64)
        if values.shape[-1] != len(actions):
            raise ValueError("last axis must match the number of actions")
        if not np.all(np.isfinite(values)):
            raise ValueError("Q-table entries must be finite")
        self.values = values
        self.actions = tuple(int(a) for a in actions)

    @classmethod
    def zeros(cls, state_shape: tuple[int, ...], actions: Sequence[int]) -> "QTable":
        return cls(np.zeros(tuple(state_shape) + (len(actions),)), actions)

    @classmethod
    def for_cells(cls, W: int, dw_max: int) -> "QTable":
        return cls.zeros((W, W), range(-dw_max, dw_max + 1))

    @property
    def n_actions(self) -> int:
        return len(self.actions)

    def index(self, action: int) -> int:
        return self.actions.index(action)

    def row(self, s) -> np.ndarray:
        return self.values[tuple(s)]

    def copy(self) -> "QTable":
        return QTable(self.values.copy(), self.actions)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, QTable)
            and self.actions == other.actions
            and np.array_equal(self.values, other.values)
        )

    def to_csv(self) -> str:
        if self.values.ndim != 3:
            raise ValueError("CSV export is defined for (w_real, w_virtual, action) tables")
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["w_real", "w_virtual", "dw", "q"])
        W1, W2, _ = self.values.shape
        for i in range(W1):
            for j in range(W2):
                for k, a in enumerate(self.actions):
                    w.writerow([i, j, a, repr(float(self.values[i, j, k]))])
        return buf.getvalue()

    def save(self, path) -> None:
        Path(path).write_text(self.to_csv())

    @classmethod
    def load(cls, path) -> "QTable":
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        if not rows:
            raise ValueError(f"{path}: empty Q-table")
        try:
            wr = [int(r["w_real"]) for r in rows]
            wv = [int(r["w_virtual"]) for r in rows]
            dw = [int(r["dw"]) for r in rows]
            q = [float(r["q"]) for r in rows]
        except (KeyError, ValueError) as exc:
            raise ValueError(f"{path}: malformed Q-table row ({exc})") from exc
        actions = sorted(set(dw))
        values = np.full((max(wr) + 1, max(wv) + 1, len(actions)), np.nan)
        for i, j, a, v in zip(wr, wv, dw, q):
            values[i, j, actions.index(a)] = v
        if np.isnan(values).any():
            raise ValueError(f"{path}: Q-table has missing entries")
        return cls(values, actions)


def q_update(Q: QTable, s, a_index: int, r: float, s_next, params: LearnParams) -> float:
    """One Q-learning backup toward ``r + gamma * max_a' Q(s', a')``; returns the new value."""
    if not math.isfinite(r):
        raise ValueError(f"non-finite reward {r!r}")
    idx = tuple(s) + (a_index,)
    old = Q.values[idx]
    target = r + params.gamma * Q.values[tuple(s_next)].max()
    Q.values[idx] = old + params.alpha * (target - old)
    return Q.values[idx]


def epsilon_schedule(n: int, N: int) -> float:
    if N < 2:
        raise ValueError(f"epsilon schedule needs N >= 2, got {N}")
    if not 0 <= n <= N - 1:
        raise ValueError(f"step {n} outside 0..{N - 1}")
    return 1.0 - n / (N - 1)


def _argmax_set(row: np.ndarray) -> np.ndarray:
    return np.flatnonzero(row == row.max())


def greedy_index(Q: QTable, s, rng) -> int:
    """Uniform choice among the maximizing actions (one uniform draw)."""
    best = _argmax_set(Q.row(s))
    u = rng.random()
    return int(best[min(int(u * len(best)), len(best) - 1)])


def epsilon_greedy_index(Q: QTable, s, eps: float, rng) -> int:
    """Explore uniformly with probability ``eps``, else act greedily (two uniform draws)."""
    if not 0.0 <= eps <= 1.0:
        raise ValueError(f"epsilon must lie in [0, 1], got {eps}")
    explore = rng.random() < eps
    u = rng.random()
    if explore:
        return min(int(u * Q.n_actions), Q.n_actions - 1)
    best = _argmax_set(Q.row(s))
    return int(best[min(int(u * len(best)), len(best) - 1)])


def greedy_action(Q: QTable, s, rng) -> int:
    return Q.actions[greedy_index(Q, s, rng)]


def epsilon_greedy_action(Q: QTable, s, eps: float, rng) -> int:
    return Q.actions[epsilon_greedy_index(Q, s, eps, rng)]


def action_distribution(Q: QTable, s, eps: float) -> np.ndarray:
    """Exact probabilities epsilon_greedy_index assigns to each action index."""
    best = _argmax_set(Q.row(s))
    probs = np.full(Q.n_actions, eps / Q.n_actions)
    probs[best] += (1.0 - eps) / len(best)
    return probs


def _default_epsilon(n: int, N: int) -> float:
    return 1.0 if N == 1 else epsilon_schedule(n, N)


def train(
    env,
    learn: LearnParams,
    rng,
    init: Optional[QTable] = None,
    epsilon: Callable[[int, int], float] = _default_epsilon,
    on_step: Callable[[int, float, float], None] | None = None,
) -> QTable:
    """Run ``learn.N`` steps of Q-learning against ``env``.

    ``env`` needs ``state_shape``, ``actions``, ``reset() -> s``,
    ``step(action) -> (s_next, r)`` and ``state() -> s`` (the state to act
    from next, which may differ from ``s_next`` when the environment changes
    its frame between steps). ``on_step(n, eps, r)`` is called after every
    update.
    """
    Q = init.copy() if init is not None else QTable.zeros(env.state_shape, env.actions)
    s = env.reset()
    for n in range(learn.N):
        eps = epsilon(n, learn.N)
        ai = epsilon_greedy_index(Q, s, eps, rng)
        s_next, r = env.step(Q.actions[ai])
        q_update(Q, s, ai, r, s_next, learn)
        if on_step is not None:
            on_step(n, eps, r)
        s = env.state()
    return Q
