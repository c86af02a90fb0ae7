from __future__ import annotations

import numpy as np


class Adam:
    """Adam over one flat (or stacked) parameter array, updated in place."""

    def __init__(self, params: np.ndarray, lr: float, betas=(0.9, 0.999), eps: float = 1e-8):
        self.params = params
        self.lr = lr
        self.b1, self.b2 = betas
        self.eps = eps
        self.m = np.zeros_like(params)
        self.v = np.zeros_like(params)
        self.t = 0

    def step(self, grad: np.ndarray) -> None:
        """Descend along ``grad``."""
        self.t += 1
        self.m = self.b1 * self.m + (1 - self.b1) * grad
        self.v = self.b2 * self.v + (1 - self.b2) * grad * grad
        m_hat = self.m / (1 - self.b1**self.t)
        v_hat = self.v / (1 - self.b2**self.t)
        self.params -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)

    def state(self) -> dict:
        return {"m": self.m, "v": self.v, "t": self.t}


def clip_grad_norm(grad: np.ndarray, max_norm: float) -> tuple[np.ndarray, float]:
    """Rescale ``grad`` so its global L2 norm is at most ``max_norm``."""
    norm = float(np.sqrt(np.sum(grad * grad)))
    if max_norm is not None and norm > max_norm:
        # the division can land an ulp above max_norm
        grad = grad * (max_norm / norm)
        post = float(np.sqrt(np.sum(grad * grad)))
        if post > max_norm:
            grad = grad * np.nextafter(max_norm / post, 0.0)
    return grad, norm
