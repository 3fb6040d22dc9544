"""Fixed comparison policies and the name registry used by configs."""

from __future__ import annotations

from typing import Callable, Optional

from .env import EnvState
from .rl import QTable, greedy_action

POLICY_NAMES = ("learned", "three_ahead", "stay_at_edge", "none")

# (state, rng) -> cell displacement
Policy = Callable[[EnvState, object], int]


class NoStimulus:
    """Marker policy: the virtual fish are not displayed at all."""

    stimulus = False

    def __call__(self, s: EnvState, rng=None) -> int:
        return 0

    def __repr__(self) -> str:
        return "NoStimulus()"


def baseline_three_ahead(s: EnvState, dw_max: int, offset: int = 3) -> int:
    """Move the virtual fish toward the cell ``offset`` ahead of the school."""
    dw = s.w_real + offset - s.w_virtual
    return max(-dw_max, min(dw_max, dw))


def stay_at_edge(s: EnvState, dw_max: int) -> int:
    return dw_max


def no_stimulus() -> NoStimulus:
    return NoStimulus()


def make_policy(name: str, dw_max: int, Q: Optional[QTable] = None, offset: int = 3) -> Policy:
    if name == "learned":
        if Q is None:
            raise ValueError("policy 'learned' needs a Q-table")
        return lambda s, rng: greedy_action(Q, (s.w_real, s.w_virtual), rng)
    if name == "three_ahead":
        return lambda s, rng: baseline_three_ahead(s, dw_max, offset)
    if name == "stay_at_edge":
        return lambda s, rng: stay_at_edge(s, dw_max)
    if name == "none":
        return no_stimulus()
    raise ValueError(f"unknown policy {name!r}; expected one of {', '.join(POLICY_NAMES)}")
