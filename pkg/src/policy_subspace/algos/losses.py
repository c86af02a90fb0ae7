"""Surrogate objectives on plain arrays.

Every function returns the objective together with its partial derivatives
with respect to the network outputs that feed it, so callers can chain the
result straight into ``mlp_backward``.
"""

from __future__ import annotations

import math

import numpy as np

from ..nn import check_finite


def ppo_clip_objective(logp_new, logp_old, adv, eps: float) -> tuple[float, np.ndarray]:
    """Mean clipped surrogate (to maximize) and its gradient w.r.t. ``logp_new``."""
    logp_new = np.asarray(logp_new, dtype=np.float64)
    adv = np.asarray(adv, dtype=np.float64)
    with np.errstate(over="ignore"):  # overflow is reported by check_finite
        ratio = np.exp(logp_new - np.asarray(logp_old, dtype=np.float64))
    check_finite(ratio=ratio)
    unclipped = ratio * adv
    clipped = np.clip(ratio, 1.0 - eps, 1.0 + eps) * adv
    use_unclipped = unclipped <= clipped
    terms = np.where(use_unclipped, unclipped, clipped)
    n = terms.size
    grad = np.where(use_unclipped, unclipped, 0.0) / n
    return float(terms.mean()), grad


def policy_gradient_objective(logp, adv) -> tuple[float, np.ndarray]:
    """Mean ``logp * adv`` and its gradient w.r.t. ``logp``."""
    logp = np.asarray(logp, dtype=np.float64)
    adv = np.asarray(adv, dtype=np.float64)
    return float(np.mean(logp * adv)), adv / adv.size


def critic_loss(pred, returns) -> tuple[float, np.ndarray]:
    """Mean squared error (to minimize) and its gradient w.r.t. ``pred``."""
    pred = np.asarray(pred, dtype=np.float64)
    returns = np.asarray(returns, dtype=np.float64)
    if pred.shape != returns.shape:
        raise ValueError(f"prediction shape {pred.shape} != target shape {returns.shape}")
    diff = pred - returns
    return float(np.mean(diff**2)), 2.0 * diff / diff.size


def a2c_objective(logp, adv, entropy, pred, returns, entropy_coef: float,
                  critic_coef: float) -> tuple[float, dict[str, np.ndarray]]:
    """``mean(logp*A) + c_H mean(H) - c_V MSE`` with gradients per input."""
    pg, d_logp = policy_gradient_objective(logp, adv)
    entropy = np.asarray(entropy, dtype=np.float64)
    mse, d_pred = critic_loss(pred, returns)
    value = pg + entropy_coef * float(entropy.mean()) - critic_coef * mse
    grads = {"logp": d_logp, "entropy": np.full(entropy.shape, entropy_coef / entropy.size),
             "pred": -critic_coef * d_pred}
    return value, grads


def diayn_reward(r, beta: float, log_p_z_given_s):
    """Task reward plus ``beta`` times the discriminator log-likelihood."""
    return r + beta * log_p_z_given_s


def gaussian_log_density(x, mean, std: float) -> tuple[np.ndarray, np.ndarray]:
    """Elementwise log N(x; mean, std^2) and its gradient w.r.t. ``mean``."""
    diff = np.asarray(x, dtype=np.float64) - np.asarray(mean, dtype=np.float64)
    logq = -0.5 * (diff / std) ** 2 - math.log(std) - 0.5 * math.log(2 * math.pi)
    return logq, diff / std**2


def lc_objective(ppo_value: float, log_q, beta: float, continuous: bool = True) -> float:
    """Clipped surrogate plus ``beta * mean(log q(z | s, pi(s, z)))``."""
    if not continuous:
        raise ValueError("the latent-conditioned objective needs continuous actions")
    if beta == 0:
        return ppo_value
    return ppo_value + beta * float(np.mean(log_q))
