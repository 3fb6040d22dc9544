"""First-order lag motion shared by the virtual fish and the simulated school."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .geometry import ViewportPoint

SUBSTEP_SECONDS = 0.1


class InvalidTimeError(ValueError):
    pass


@dataclass(frozen=True)
class LagParams:
    inv_tau: float

    def __post_init__(self):
        if not (math.isfinite(self.inv_tau) and self.inv_tau > 0):
            raise ValueError(f"inv_tau must be positive and finite, got {self.inv_tau!r}")

    def gain(self, dt: float) -> float:
        """Fraction of the gap to the target closed after ``dt`` seconds."""
        return -math.expm1(-dt * self.inv_tau)


def lag_toward(pos: float, target: float, gain: float) -> float:
    """One axis of the exact solution, given a precomputed ``1 - exp(-dt/tau)``."""
    v = pos + (target - pos) * gain
    return 0.0 if v < 0.0 else 1.0 if v > 1.0 else v


def lag_step(pos: ViewportPoint, target: ViewportPoint, params: LagParams, dt: float) -> ViewportPoint:
    """Advance ``pos`` toward ``target`` for ``dt`` seconds of ``dx/dt = (target - x) / tau``.

    Uses the closed-form solution rather than an integrator, so the result
    does not depend on how ``dt`` is split.
    """
    if dt < 0:
        raise InvalidTimeError(f"negative time step {dt!r}")
    k = params.gain(dt)
    return ViewportPoint(lag_toward(pos.x, target.x, k), lag_toward(pos.y, target.y, k))


def euler_step(pos: ViewportPoint, target: ViewportPoint, params: LagParams, dt: float) -> ViewportPoint:
    """Forward-Euler counterpart of lag_step, kept for convergence checks."""
    f = dt * params.inv_tau
    return ViewportPoint(pos.x + f * (target.x - pos.x), pos.y + f * (target.y - pos.y))
