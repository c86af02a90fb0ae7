"""Pendulum swing-up with five discrete torque levels."""

import math

import numpy as np

from .base import Family, register_family

GRAVITY = 10.0
DT = 0.05
MAX_SPEED = 8.0
MAX_TORQUE = 2.0
# normalized actions {-1, -0.5, 0, 0.5, 1} scaled by the torque bound
TORQUES = np.linspace(-1.0, 1.0, 5) * MAX_TORQUE


def angle_normalize(x):
    return ((x + np.pi) % (2 * np.pi)) - np.pi


@register_family
class PendulumDiscrete(Family):
    name = "PendulumDiscrete"
    obs_dim = 3
    action_kind = "discrete"
    n_actions = 5
    horizon = 200
    deterministic = False
    knobs = {"mass": 1.0, "length": 1.0}
    variants = {
        "train": {},
        "Light": {"mass": 0.5},
        "Long": {"length": 1.5},
        "Short": {"length": 0.5},
    }

    def reset_state(self, rng):
        return np.array([rng.uniform(-math.pi, math.pi), rng.uniform(-1.0, 1.0)])

    def step_batch(self, states, actions):
        m, l = self.p["mass"], self.p["length"]
        th, thdot = states.T
        u = TORQUES[actions]
        cost = angle_normalize(th) ** 2 + 0.1 * thdot**2 + 0.001 * u**2
        newthdot = thdot + (3 * GRAVITY / (2 * l) * np.sin(th) + 3.0 / (m * l**2) * u) * DT
        newthdot = np.clip(newthdot, -MAX_SPEED, MAX_SPEED)
        newth = th + newthdot * DT
        return np.stack([newth, newthdot], axis=1), -cost, np.zeros(len(states), dtype=bool)

    def observe(self, states):
        th, thdot = states.T
        return np.stack([np.cos(th), np.sin(th), thdot], axis=1)
