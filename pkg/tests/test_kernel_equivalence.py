"""The compiled fast path must reproduce the pure-Python reference bit for bit."""

import numpy as np
import pytest

from fishguide.env import EnvConfig, FishEnv, VirtualMode
from fishguide.evaluation import rollout_mean_reward
from fishguide.fishsim import BehaviorParams
from fishguide.policies import make_policy
from fishguide.rl import LearnParams, QTable, train
from fishguide.runner import simulate, train_agent

CASES = [
    (EnvConfig(), BehaviorParams(p_ignore=0.6)),
    (EnvConfig(inv_tau_virtual=1.0, direction_schedule=40), BehaviorParams(p_ignore=0.3, theta=0.5)),
    (EnvConfig(virtual_mode=VirtualMode.SNAP, W=7, dw_max=3), BehaviorParams(dt_max=1.5, dx_max=0.35)),
]


def python_trajectory(cfg, behavior, learn, seed):
    rng = np.random.default_rng(seed)
    env = FishEnv(cfg, behavior, rng)
    rows = []

    def record(n, eps, r):
        w = env.world
        rows.append((w.school.pos.x, w.school.pos.y, w.virtual_pos.x, w.virtual_pos.y, r))

    Q = train(env, learn, rng, on_step=record)
    return Q, np.array(rows)


@pytest.mark.parametrize("cfg, behavior", CASES)
def test_training_matches_reference(cfg, behavior):
    learn = LearnParams(N=3000)
    Q_py, rows = python_trajectory(cfg, behavior, learn, 77)
    Q_k, log = train_agent(cfg, behavior, learn, np.random.default_rng(77), record=True)
    assert np.array_equal(Q_py.values, Q_k.values)
    assert np.array_equal(rows, log[:, [3, 4, 5, 6, 10]])


@pytest.mark.parametrize("policy", ["learned", "three_ahead", "stay_at_edge", "none"])
@pytest.mark.parametrize("cfg, behavior", CASES)
def test_rollouts_match_reference(cfg, behavior, policy):
    Q = QTable(np.random.default_rng(3).normal(size=(cfg.W, cfg.W, cfg.n_actions)), cfg.actions)
    Q.values[0] = 0.0  # include some ties
    rng = np.random.default_rng(19)
    env = FishEnv(cfg, behavior, rng, stimulus=policy != "none")
    ref = rollout_mean_reward(env, make_policy(policy, cfg.dw_max, Q), 1000, rng)
    fast, _ = simulate(cfg, behavior, policy, 1000, np.random.default_rng(19), Q=Q)
    assert fast == ref
