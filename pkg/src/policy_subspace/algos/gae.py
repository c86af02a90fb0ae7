from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class AdvantageEstimate:
    advantages: np.ndarray
    returns: np.ndarray


def compute_gae(rewards, values, dones, bootstrap, gamma: float, lam: float) -> AdvantageEstimate:
    """Generalized advantage estimation over time-major ``(T, n)`` arrays.

    ``bootstrap`` holds V(s_T) for each lane; a ``done`` step never
    bootstraps through to the next stored state.
    """
    rewards = np.asarray(rewards, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    dones = np.asarray(dones, dtype=bool)
    if not (rewards.shape == values.shape == dones.shape):
        raise ValueError("rewards, values and dones must share one shape")
    bootstrap = np.broadcast_to(np.asarray(bootstrap, dtype=np.float64), rewards.shape[1:])
    not_done = 1.0 - dones.astype(np.float64)
    next_values = np.concatenate([values[1:], bootstrap[None]], axis=0)
    deltas = rewards + gamma * next_values * not_done - values
    adv = np.zeros_like(rewards)
    running = np.zeros(rewards.shape[1:])
    for t in range(rewards.shape[0] - 1, -1, -1):
        running = deltas[t] + gamma * lam * not_done[t] * running
        adv[t] = running
    return AdvantageEstimate(adv, adv + values)
