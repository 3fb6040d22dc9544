"""The guidance MDP: cell-pair observation, virtual-fish moves, reward.

One step lasts ``step_seconds`` and is simulated as ``step_seconds /
substep_seconds`` sub-steps. A single Q-table serves both guidance
directions because every cell index is measured toward the current target
edge.
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

from .fishsim import BehaviorParams, SchoolState, advance_school
from .geometry import Direction, ViewportPoint, cell_center_x, cell_of
from .kinematics import SUBSTEP_SECONDS, LagParams, lag_toward


class InvalidActionError(ValueError):
    pass


class VirtualMode(str, enum.Enum):
    LAGGED = "lagged"
    SNAP = "snap"


class EnvState(NamedTuple):
    w_real: int
    w_virtual: int


@dataclass(frozen=True)
class EnvConfig:
    W: int = 10
    dw_max: int = 2
    inv_tau_virtual: float = 3.0
    step_seconds: float = 1.0
    substep_seconds: float = SUBSTEP_SECONDS
    virtual_mode: VirtualMode = VirtualMode.LAGGED
    direction_schedule: int = 150
    school_x0: float = 0.5
    school_y0: float = 0.5
    virtual_x0: float = 0.5
    virtual_y0: float = 0.5

    def __post_init__(self):
        object.__setattr__(self, "virtual_mode", VirtualMode(self.virtual_mode))
        if self.W < 2:
            raise ValueError(f"W must be >= 2, got {self.W}")
        if self.dw_max < 1:
            raise ValueError(f"dw_max must be >= 1, got {self.dw_max}")
        if not (math.isfinite(self.inv_tau_virtual) and self.inv_tau_virtual > 0):
            raise ValueError(f"inv_tau_virtual must be positive, got {self.inv_tau_virtual}")
        if self.substep_seconds != SUBSTEP_SECONDS:
            raise ValueError(f"substep_seconds is fixed at {SUBSTEP_SECONDS}")
        n = self.step_seconds / self.substep_seconds
        if self.step_seconds <= 0 or abs(n - round(n)) > 1e-9:
            raise ValueError("step_seconds must be a positive multiple of substep_seconds")
        if self.direction_schedule < 1:
            raise ValueError("direction_schedule must be >= 1")

    @property
    def substeps(self) -> int:
        return round(self.step_seconds / self.substep_seconds)

    @property
    def n_actions(self) -> int:
        return 2 * self.dw_max + 1

    @property
    def actions(self) -> range:
        return range(-self.dw_max, self.dw_max + 1)


@dataclass
class EnvWorld:
    school: SchoolState
    virtual_pos: ViewportPoint
    direction: Direction = Direction.RIGHT
    n: int = 0
    stimulus: bool = True
    step_seconds: float = field(default=1.0, repr=False)

    @property
    def t(self) -> float:
        return self.n * self.step_seconds

    @classmethod
    def initial(cls, cfg: EnvConfig, direction: Direction = Direction.RIGHT, stimulus: bool = True) -> "EnvWorld":
        return cls(
            school=SchoolState.at(cfg.school_x0, cfg.school_y0),
            virtual_pos=ViewportPoint(cfg.virtual_x0, cfg.virtual_y0),
            direction=direction,
            stimulus=stimulus,
            step_seconds=cfg.step_seconds,
        )

    def mirrored(self) -> "EnvWorld":
        s = self.school
        return EnvWorld(
            school=SchoolState(s.pos.mirrored(), s.target.mirrored(), s.segment_ticks),
            virtual_pos=self.virtual_pos.mirrored(),
            direction=self.direction.flipped(),
            n=self.n,
            stimulus=self.stimulus,
            step_seconds=self.step_seconds,
        )


def reward(x_real: float, direction: Direction) -> float:
    if direction == Direction.RIGHT:
        return 2.0 * (x_real - 0.5)
    return 2.0 * (0.5 - x_real)


def observe(world: EnvWorld, cfg: EnvConfig) -> EnvState:
    return EnvState(
        cell_of(world.school.pos.x, cfg.W, world.direction),
        cell_of(world.virtual_pos.x, cfg.W, world.direction),
    )


def _check_action(dw: int, cfg: EnvConfig) -> None:
    if not -cfg.dw_max <= dw <= cfg.dw_max:
        raise InvalidActionError(f"action {dw} outside [-{cfg.dw_max}, {cfg.dw_max}]")


def select_virtual_target(world: EnvWorld, cfg: EnvConfig, dw: int) -> ViewportPoint:
    _check_action(dw, cfg)
    w_virtual = cell_of(world.virtual_pos.x, cfg.W, world.direction)
    w_target = min(max(w_virtual + dw, 0), cfg.W - 1)
    return ViewportPoint(cell_center_x(w_target, cfg.W, world.direction), world.school.pos.y)


def env_step(world: EnvWorld, cfg: EnvConfig, behavior: BehaviorParams, rng, dw: int) -> tuple[EnvState, float]:
    """Execute action ``dw`` for one step, mutating ``world``.

    The reward is taken from the school position at the end of the step and
    the returned state is observed under the direction the step ran in.
    """
    target = select_virtual_target(world, cfg, dw)
    substeps = cfg.substeps
    if cfg.virtual_mode == VirtualMode.SNAP:
        track = [target] * (substeps + 1)
    else:
        gain = LagParams(cfg.inv_tau_virtual).gain(cfg.substep_seconds)
        track = [world.virtual_pos]
        for _ in range(substeps):
            v = track[-1]
            track.append(ViewportPoint(lag_toward(v.x, target.x, gain), lag_toward(v.y, target.y, gain)))

    def virtual_at(k: int) -> Optional[ViewportPoint]:
        return track[k] if world.stimulus else None

    world.school = advance_school(world.school, virtual_at, behavior, rng, cfg.step_seconds)
    world.virtual_pos = track[-1]
    world.n += 1
    return observe(world, cfg), reward(world.school.pos.x, world.direction)


def maybe_switch_direction(world: EnvWorld, cfg: EnvConfig) -> Direction:
    """Flip the guidance direction every ``direction_schedule`` steps."""
    if world.n > 0 and world.n % cfg.direction_schedule == 0:
        world.direction = world.direction.flipped()
    return world.direction


TRAJECTORY_COLUMNS = (
    "n", "t", "direction", "x_real", "y_real", "x_virtual", "y_virtual",
    "w_real", "w_virtual", "action", "reward",
)


class TrajectoryWriter:
    """Per-step CSV log; positions and cells are taken at the end of each step."""

    def __init__(self, fh):
        self._w = csv.writer(fh, lineterminator="\n")
        self._w.writerow(TRAJECTORY_COLUMNS)

    def write(self, n, t, direction, x_real, y_real, x_virtual, y_virtual, w_real, w_virtual, action, r):
        d = "right" if int(direction) > 0 else "left"
        self._w.writerow([
            int(n), f"{t:.1f}", d, f"{x_real:.9f}", f"{y_real:.9f}",
            f"{x_virtual:.9f}", f"{y_virtual:.9f}", int(w_real), int(w_virtual),
            int(action), f"{r:.9f}",
        ])


class FishEnv:
    """Stateful wrapper exposing the MDP to a learning loop.

    ``step`` returns the next state in the frame of the direction the step
    ran in; ``state()`` reflects any direction flip that happened after it.
    """

    def __init__(self, cfg: EnvConfig, behavior: BehaviorParams, rng, stimulus: bool = True,
                 direction: Direction = Direction.RIGHT):
        self.cfg = cfg
        self.behavior = behavior
        self.rng = rng
        self.stimulus = stimulus
        self.start_direction = direction
        self.world = EnvWorld.initial(cfg, direction, stimulus)

    @property
    def state_shape(self) -> tuple[int, int]:
        return (self.cfg.W, self.cfg.W)

    @property
    def actions(self) -> range:
        return self.cfg.actions

    def reset(self) -> EnvState:
        self.world = EnvWorld.initial(self.cfg, self.start_direction, self.stimulus)
        return self.state()

    def state(self) -> EnvState:
        return observe(self.world, self.cfg)

    def step(self, dw: int) -> tuple[EnvState, float]:
        s_next, r = env_step(self.world, self.cfg, self.behavior, self.rng, dw)
        maybe_switch_direction(self.world, self.cfg)
        return s_next, r
