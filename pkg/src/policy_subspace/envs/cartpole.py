"""Cart-pole balancing with the classic Euler update (dt = 0.02)."""

import math

import numpy as np

from .base import Family, register_family

GRAVITY = 9.8
CART_MASS = 1.0
TAU = 0.02
THETA_LIMIT = 12 * 2 * math.pi / 360
X_LIMIT = 2.4


@register_family
class CartPole(Family):
    name = "CartPole"
    obs_dim = 4
    action_kind = "discrete"
    n_actions = 2
    horizon = 200
    deterministic = False
    # "mass" is the pole mass; the cart mass is fixed at 1.0
    knobs = {"mass": 0.1, "length": 0.5, "force": 10.0}
    variants = {
        "train": {},
        "HeavyPole": {"mass": 1.0},
        "LightPole": {"mass": 0.001},
        "LongPole": {"length": 1.0},
        "ShortPole": {"length": 0.05},
        "StrongPush": {"force": 20.0},
        "WeakPush": {"force": 1.0},
    }

    def reset_state(self, rng):
        return rng.uniform(-0.05, 0.05, size=4)

    def step_batch(self, states, actions):
        mass, length, force = self.p["mass"], self.p["length"], self.p["force"]
        x, x_dot, theta, theta_dot = states.T
        f = np.where(actions == 1, force, -force)
        total = CART_MASS + mass
        pml = mass * length
        cos, sin = np.cos(theta), np.sin(theta)
        temp = (f + pml * theta_dot**2 * sin) / total
        theta_acc = (GRAVITY * sin - cos * temp) / (length * (4.0 / 3.0 - mass * cos**2 / total))
        x_acc = temp - pml * theta_acc * cos / total
        nxt = np.stack([x + TAU * x_dot, x_dot + TAU * x_acc,
                        theta + TAU * theta_dot, theta_dot + TAU * theta_acc], axis=1)
        term = (np.abs(nxt[:, 0]) > X_LIMIT) | (np.abs(nxt[:, 2]) > THETA_LIMIT)
        return nxt, np.ones(len(states)), term

    def observe(self, states):
        return states.astype(np.float64, copy=True)
