"""Policy evaluation: average-reward sweeps and direction-conditioned reports."""

from __future__ import annotations

import csv
import io
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from .env import EnvConfig
from .fishsim import BehaviorParams, stable_key, trial_rng
from .geometry import Direction
from .rl import LearnParams, QTable
from .runner import simulate, train_agent
from .stats import DegenerateSampleError, bhattacharyya_distance, build_histogram, welch_t_test

log = logging.getLogger(__name__)

ROLE_TRAIN, ROLE_EVAL, ROLE_BASELINE = 0, 1, 2


def rollout_mean_reward(env, policy, M: int, rng) -> float:
    """Mean per-step reward of ``policy(state, rng)`` over ``M`` steps of ``env``."""
    if M < 1:
        raise ValueError("M must be >= 1")
    env.reset()
    total = 0.0
    for _ in range(M):
        _, r = env.step(policy(env.state(), rng))
        total += r
    return total / M


@dataclass(frozen=True)
class SweepSpec:
    p_values: tuple[float, ...] = (0.0, 0.3, 0.6, 0.9)
    N_values: tuple[int, ...] = (10**2, 10**3, 10**4, 10**5, 10**6, 10**7)
    trials: int = 10
    M: int = 9000

    def __post_init__(self):
        object.__setattr__(self, "p_values", tuple(float(p) for p in self.p_values))
        object.__setattr__(self, "N_values", tuple(int(n) for n in self.N_values))
        if self.trials < 1 or self.M < 1:
            raise ValueError("trials and M must be >= 1")
        if not self.p_values or not self.N_values:
            raise ValueError("p_values and N_values must be non-empty")
        if any(not 0.0 <= p <= 1.0 for p in self.p_values):
            raise ValueError("p_values must lie in [0, 1]")
        if any(n < 1 for n in self.N_values):
            raise ValueError("N_values must be >= 1")


@dataclass(frozen=True)
class TrialResult:
    p: float
    N: int
    trial: int
    R: float
    R_hat: float


@dataclass(frozen=True)
class SummaryRow:
    p: float
    N: int
    R_mean: float
    R_hat_mean: float
    ratio: float  # nan when undefined

    @property
    def ratio_defined(self) -> bool:
        return not math.isnan(self.ratio)


def run_trial(p: float, N: int, trial: int, M: int, cfg: EnvConfig, behavior: BehaviorParams,
              learn: LearnParams, base_seed: int, offset: int = 3) -> TrialResult:
    b = BehaviorParams(**{**asdict(behavior), "p_ignore": p})
    key = stable_key(p)
    Q, _ = train_agent(cfg, b, LearnParams(learn.gamma, learn.alpha, N),
                       trial_rng(base_seed, key, N, trial, ROLE_TRAIN))
    R, _ = simulate(cfg, b, "learned", M, trial_rng(base_seed, key, N, trial, ROLE_EVAL), Q=Q)
    R_hat, _ = simulate(cfg, b, "three_ahead", M, trial_rng(base_seed, key, N, trial, ROLE_BASELINE),
                        offset=offset)
    return TrialResult(p, N, trial, R, R_hat)


def _run_trial_args(args) -> TrialResult:
    return run_trial(*args)


@dataclass
class SweepResult:
    trials: list[TrialResult]
    summary: list[SummaryRow] = field(default_factory=list)

    def trials_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["p", "N", "trial", "R", "R_hat"])
        for t in self.trials:
            w.writerow([repr(t.p), t.N, t.trial, repr(t.R), repr(t.R_hat)])
        return buf.getvalue()

    def summary_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["p", "N", "R_mean", "R_hat_mean", "ratio", "ratio_defined"])
        for s in self.summary:
            w.writerow([repr(s.p), s.N, repr(s.R_mean), repr(s.R_hat_mean),
                        repr(s.ratio) if s.ratio_defined else "", int(s.ratio_defined)])
        return buf.getvalue()

    def row(self, p: float, N: int) -> SummaryRow:
        for s in self.summary:
            if s.p == p and s.N == N:
                return s
        raise KeyError((p, N))


def summarize(trials: Sequence[TrialResult]) -> list[SummaryRow]:
    groups: dict[tuple[float, int], list[TrialResult]] = {}
    for t in trials:
        groups.setdefault((t.p, t.N), []).append(t)
    rows = []
    for (p, N), ts in groups.items():
        R = float(np.mean([t.R for t in ts]))
        R_hat = float(np.mean([t.R_hat for t in ts]))
        ratio = R / R_hat if R_hat > 0 else math.nan
        rows.append(SummaryRow(p, N, R, R_hat, ratio))
    return rows


def run_sweep(spec: SweepSpec, cfg: EnvConfig, behavior: BehaviorParams, learn: LearnParams,
              base_seed: int = 0, jobs: int = 1, offset: int = 3) -> SweepResult:
    """Train and evaluate ``spec.trials`` agents for every (p, N) pair.

    Each trial draws from its own generator keyed by (seed, p, N, trial), so
    results do not depend on ``jobs`` or on execution order.
    """
    tasks = [
        (p, N, trial, spec.M, cfg, behavior, learn, base_seed, offset)
        for p in spec.p_values
        for N in spec.N_values
        for trial in range(spec.trials)
    ]
    # largest N first so the pool is not left waiting on a straggler
    order = sorted(range(len(tasks)), key=lambda i: -tasks[i][1])
    results: list[Optional[TrialResult]] = [None] * len(tasks)
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for i, res in zip(order, pool.map(_run_trial_args, [tasks[i] for i in order])):
                results[i] = res
    else:
        for done, i in enumerate(order, 1):
            results[i] = _run_trial_args(tasks[i])
            log.debug("trial %d/%d done: %s", done, len(tasks), results[i])
    return SweepResult(results, summarize(results))


@dataclass(frozen=True)
class GuidanceReport:
    mean_left: float
    mean_right: float
    difference: float  # mean_right - mean_left
    t: float
    df: float
    p_value: float
    bhattacharyya: float
    n_left: int
    n_right: int

    def to_dict(self) -> dict:
        """JSON-safe dict: infinite distances become "inf", undefined statistics None."""
        out = {}
        for k, v in asdict(self).items():
            if isinstance(v, float) and math.isinf(v):
                v = "inf"
            elif isinstance(v, float) and math.isnan(v):
                v = None
            out[k] = v
        return out


def guidance_report(left: Sequence[float], right: Sequence[float], bins: int = 20) -> GuidanceReport:
    """Compare school x positions collected while guiding left vs right."""
    left = np.asarray(left, dtype=float)
    right = np.asarray(right, dtype=float)
    if left.size == 0 or right.size == 0:
        raise ValueError("both sample sets must be non-empty")
    mean_left, mean_right = float(left.mean()), float(right.mean())
    try:
        t, df, p = welch_t_test(right, left)
    except DegenerateSampleError:
        t, df, p = math.nan, math.nan, math.nan
    dist = bhattacharyya_distance(build_histogram(left, bins), build_histogram(right, bins))
    return GuidanceReport(mean_left, mean_right, mean_right - mean_left, t, df, p, dist,
                          int(left.size), int(right.size))


def split_by_direction(log: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """School x samples from a trajectory log, split into (left, right)."""
    x, d = log[:, 3], log[:, 2]
    return x[d == int(Direction.LEFT)], x[d == int(Direction.RIGHT)]


def guidance_run(cfg: EnvConfig, behavior: BehaviorParams, policy: str, steps_per_direction: int,
                 rng: np.random.Generator, Q: Optional[QTable] = None) -> np.ndarray:
    """Trajectory log of ``2 * steps_per_direction`` steps with the usual direction schedule."""
    _, traj = simulate(cfg, behavior, policy, 2 * steps_per_direction, rng, Q=Q, record=True)
    return traj
