"""Time-major acquisition of transitions from vectorized lanes."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Protocol

import numpy as np

from .base import VecEnv


class LaneAgent(Protocol):
    """Acts for every lane at once; lane ``i`` is pinned to ``tags[i]``."""

    tags: np.ndarray

    def act(self, obs: np.ndarray, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]: ...

    def value(self, obs: np.ndarray) -> np.ndarray: ...


@dataclass
class RolloutBatch:
    obs: np.ndarray            # (T, n, obs_dim)
    actions: np.ndarray        # (T, n) or (T, n, action_dim)
    logp: np.ndarray           # (T, n) log-prob under the acting policy
    rewards: np.ndarray        # (T, n)
    dones: np.ndarray          # (T, n) terminal or horizon reached
    values: np.ndarray         # (T, n)
    tags: np.ndarray           # (n, tag_dim) latent each lane acted with
    bootstrap: np.ndarray      # (n,) value of the observation after the last step
    episodes: list = field(default_factory=list)   # (lane, return, length) of finished episodes
    truncated: np.ndarray | None = None   # (T, n) horizon reached without a terminal state
    final_values: np.ndarray | None = None  # (T, n) value of the pre-reset observation when truncated

    @property
    def n_steps(self) -> int:
        return self.rewards.shape[0]

    @property
    def n_envs(self) -> int:
        return self.rewards.shape[1]

    def __len__(self):
        return self.rewards.size


def rollout(env: VecEnv, agent: LaneAgent, n_steps: int, rng: np.random.Generator,
            obs: np.ndarray | None = None) -> tuple[RolloutBatch, np.ndarray]:
    """Run ``n_steps`` on every lane; returns the batch and the next observations."""
    if obs is None:
        obs = env.reset()
    obs_buf, act_buf, logp_buf, rew_buf, done_buf, val_buf = [], [], [], [], [], []
    trunc_buf, fval_buf = [], []
    episodes = []
    for _ in range(n_steps):
        actions, logp = agent.act(obs, rng)
        values = agent.value(obs)
        nxt, rew, done, term, finished = env.step(actions)
        trunc = done & ~term
        fval = np.zeros(len(rew))
        if trunc.any():
            fval[trunc] = agent.value(env.final_obs)[trunc]
        trunc_buf.append(trunc)
        fval_buf.append(fval)
        obs_buf.append(obs)
        act_buf.append(actions)
        logp_buf.append(logp)
        rew_buf.append(rew)
        done_buf.append(done)
        val_buf.append(values)
        episodes.extend(finished)
        obs = nxt
    batch = RolloutBatch(np.stack(obs_buf), np.stack(act_buf), np.stack(logp_buf),
                         np.stack(rew_buf).astype(np.float64), np.stack(done_buf),
                         np.stack(val_buf), np.array(agent.tags, dtype=np.float64),
                         agent.value(obs), episodes, np.stack(trunc_buf), np.stack(fval_buf))
    return batch, obs
