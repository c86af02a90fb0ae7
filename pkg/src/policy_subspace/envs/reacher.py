"""Point mass steered towards a fixed goal with continuous 2-d actions.

Exists so the squashed-Gaussian head and the continuous-latent baselines
have a cheap continuous-control target.
"""

import numpy as np

from .base import Family, register_family

DT = 0.1
GOAL = np.array([1.0, 1.0])


@register_family
class PointReacher(Family):
    name = "PointReacher"
    obs_dim = 4
    action_kind = "continuous"
    n_actions = 2
    horizon = 100
    deterministic = True
    knobs = {"action_scale": 1.0, "friction": 0.1}
    variants = {
        "train": {},
        "Weak": {"action_scale": 0.5},
        "Slippery": {"friction": 0.0},
        "Sticky": {"friction": 0.3},
    }

    def reset_state(self, rng):
        return np.zeros(4)

    def step_batch(self, states, actions):
        pos, vel = states[:, :2], states[:, 2:]
        vel = (1.0 - self.p["friction"]) * vel + self.p["action_scale"] * actions
        pos = pos + DT * vel
        reward = -np.linalg.norm(pos - GOAL, axis=1)
        return np.concatenate([pos, vel], axis=1), reward, np.zeros(len(states), dtype=bool)

    def observe(self, states):
        return states.astype(np.float64, copy=True)
