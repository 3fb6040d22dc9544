"""Probabilistic model of the real-fish school centroid.

The school moves in straight-ish segments: at the start of each segment it
picks a duration and a target point, then lags toward that target. When the
virtual fish are within ``theta`` the school follows them unless it ignores
them (probability ``p_ignore``); otherwise it wanders to a random nearby
point.

Every retarget consumes exactly four uniform draws from ``rng.random()``
(duration, react/ignore, dx, dy) whether or not they are used, so the random
stream stays aligned across policies and directions.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

from .geometry import ViewportPoint
from .kinematics import SUBSTEP_SECONDS, LagParams, lag_toward

# virtual position provider: sub-step index -> centroid, or None when no stimulus is shown
VirtualProvider = Callable[[int], Optional[ViewportPoint]]


@dataclass(frozen=True)
class BehaviorParams:
    dt_max: float = 3.0
    theta: float = 0.3
    p_ignore: float = 0.0
    dx_max: float = 0.2
    dy_max: float = 0.2
    inv_tau_real: float = 1.0

    def __post_init__(self):
        for name in ("dt_max", "theta", "dx_max", "dy_max", "inv_tau_real"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be positive and finite, got {v!r}")
        if not 0.0 <= self.p_ignore <= 1.0:
            raise ValueError(f"p_ignore must lie in [0, 1], got {self.p_ignore!r}")

    @property
    def max_ticks(self) -> int:
        """Longest segment, in sub-steps."""
        return max(1, math.floor(self.dt_max / SUBSTEP_SECONDS + 1e-9))

    @property
    def lag(self) -> LagParams:
        return LagParams(self.inv_tau_real)


@dataclass(frozen=True)
class SchoolState:
    pos: ViewportPoint
    target: ViewportPoint
    segment_ticks: int = 0

    @property
    def segment_remaining(self) -> float:
        return self.segment_ticks * SUBSTEP_SECONDS

    @classmethod
    def at(cls, x: float = 0.5, y: float = 0.5) -> "SchoolState":
        p = ViewportPoint(x, y)
        return cls(p, p, 0)


def trial_rng(base_seed: int, *keys: int) -> np.random.Generator:
    """Independent generator for one trial, derived from integer keys."""
    return np.random.default_rng(np.random.SeedSequence([int(base_seed), *map(int, keys)]))


def stable_key(*parts) -> int:
    """Stable 32-bit key for mixing non-integer values (e.g. p) into a seed."""
    digest = hashlib.sha256(repr(parts).encode()).digest()
    return int.from_bytes(digest[:4], "little")


def sample_segment_ticks(rng, params: BehaviorParams) -> int:
    n = params.max_ticks
    return min(n, 1 + int(rng.random() * n))


def sample_segment_duration(rng, params: BehaviorParams) -> float:
    """Uniform on (0, dt_max], rounded up to the 0.1 s sub-step grid."""
    return sample_segment_ticks(rng, params) * SUBSTEP_SECONDS


def _retarget(pos: ViewportPoint, virtual_pos: Optional[ViewportPoint], params: BehaviorParams, u, ux, uy):
    in_range = virtual_pos is not None and pos.distance(virtual_pos) <= params.theta
    if in_range and u >= params.p_ignore:
        return virtual_pos, True
    dx = params.dx_max * (2.0 * ux - 1.0)
    dy = params.dy_max * (2.0 * uy - 1.0)
    return ViewportPoint(pos.x + dx, pos.y + dy), False


def choose_real_target(
    pos: ViewportPoint, virtual_pos: Optional[ViewportPoint], params: BehaviorParams, rng
) -> ViewportPoint:
    """Next school target. ``virtual_pos=None`` means no stimulus is displayed."""
    u, ux, uy = rng.random(), rng.random(), rng.random()
    return _retarget(pos, virtual_pos, params, u, ux, uy)[0]


def advance_school(
    state: SchoolState,
    virtual_at: VirtualProvider,
    params: BehaviorParams,
    rng,
    duration: float,
    on_retarget: Callable[[bool, bool], None] | None = None,
) -> SchoolState:
    """Run the school model for ``duration`` seconds (a multiple of the sub-step).

    ``virtual_at(k)`` is the virtual centroid at the start of sub-step ``k``.
    ``on_retarget(in_range, reacted)`` is an optional diagnostic hook.
    """
    ticks = round(duration / SUBSTEP_SECONDS)
    if ticks < 0 or not math.isclose(ticks * SUBSTEP_SECONDS, duration, abs_tol=1e-9):
        raise ValueError(f"duration {duration!r} is not a non-negative multiple of {SUBSTEP_SECONDS}")
    gain = params.lag.gain(SUBSTEP_SECONDS)
    pos, target, remaining = state.pos, state.target, state.segment_ticks
    for k in range(ticks):
        if remaining == 0:
            remaining = sample_segment_ticks(rng, params)
            v = virtual_at(k)
            u, ux, uy = rng.random(), rng.random(), rng.random()
            target, reacted = _retarget(pos, v, params, u, ux, uy)
            if on_retarget is not None:
                on_retarget(v is not None and pos.distance(v) <= params.theta, reacted)
        pos = ViewportPoint(lag_toward(pos.x, target.x, gain), lag_toward(pos.y, target.y, gain))
        remaining -= 1
    return replace(state, pos=pos, target=target, segment_ticks=remaining)
