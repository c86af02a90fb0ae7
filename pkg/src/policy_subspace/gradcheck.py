"""Finite-difference audit of the gradients used during training.

Every case builds a :class:`Learner` with tiny networks, draws a random
batch and compares the analytic gradient of one training loss against
central differences.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .algos.config import default_config
from .algos.trainer import Learner
from .nn import GradCheck, categorical_log_prob, finite_diff_check, squashed_gaussian_log_prob
from .subspace import cosine_sq_penalty

TOLERANCE = 1e-4

# (loss, family, method)
CASES = [
    ("policy", "CartPole", "single"),
    ("policy", "CartPole", "lop"),
    ("policy", "Maze2d", "bop"),
    ("policy", "Maze2d", "diayn_r"),
    ("policy", "PointReacher", "single"),
    ("policy", "PointReacher", "cop"),
    ("policy", "PointReacher", "lc"),
    ("critic", "CartPole", "lop"),
    ("critic", "PointReacher", "diayn_r_cont"),
    ("penalty", None, None),
    ("discriminator", "Maze2d", "diayn_r"),
    ("discriminator", "CartPole", "diayn_r_cont"),
    ("discriminator", "PointReacher", "lc"),
]


@dataclass
class CaseResult:
    name: str
    instances: int
    worst: GradCheck

    @property
    def passed(self) -> bool:
        return self.worst.max_rel_error <= TOLERANCE


def _learner(family: str, method: str, rng: np.random.Generator) -> Learner:
    algo = "ppo" if family != "CartPole" or rng.random() < 0.5 else "a2c"
    cfg = default_config(family, algo=algo, policy_hidden=(5, 4), critic_hidden=(4,),
                         discriminator_hidden=(4,), beta=float(rng.uniform(0.1, 2.0)),
                         entropy_coef=0.01, seed=int(rng.integers(2**31)))
    return Learner(family, cfg, method)


def _batch(ln: Learner, rng: np.random.Generator, size: int = 6):
    obs = rng.normal(size=(size, ln.fam.obs_dim))
    lat = ln.sample_latents(size, rng)
    x = np.concatenate([obs, lat.cond], axis=1)
    if ln.policy_spec.head == "categorical":
        actions = rng.integers(ln.fam.n_actions, size=size)
    else:
        actions = np.tanh(rng.normal(size=(size, ln.fam.n_actions))) * 0.95
    return obs, lat, x, actions


def check_instance(case: tuple, rng: np.random.Generator, h: float = 1e-6) -> GradCheck:
    kind, family, method = case
    if kind == "penalty":
        anchors = rng.normal(size=(int(rng.integers(2, 5)), int(rng.integers(3, 12))))
        return finite_diff_check(anchors, cosine_sq_penalty, h)
    ln = _learner(family, method, rng)
    obs, lat, x, actions = _batch(ln, rng)
    if kind == "policy":
        out, _ = ln.policy_forward(ln.anchors, x, lat.weights)
        if ln.policy_spec.head == "categorical":
            logp = categorical_log_prob(out, actions)
        else:
            logp = squashed_gaussian_log_prob(out, ln.policy_spec.std, actions)
        logp_old = logp + rng.uniform(-0.3, 0.3, size=logp.shape)
        adv = rng.normal(size=len(x))
        shape = ln.anchors.shape

        def loss(a):
            value, grad, _ = ln.policy_loss(a.reshape(shape), x, lat.weights, actions,
                                            logp_old, adv, lat.labels, ln.disc)
            return value, grad
        return finite_diff_check(ln.anchors, loss, h)
    if kind == "critic":
        xc = np.concatenate([x, lat.critic_z], axis=1)
        returns = rng.normal(size=len(x)) * 3
        return finite_diff_check(ln.critic, lambda c: ln.critic_loss(c, xc, returns), h)
    if kind == "discriminator":
        pa = None
        if ln.disc_kind == "action":
            out, _ = ln.policy_forward(ln.anchors, x, lat.weights)
            pa = np.tanh(out)
        return finite_diff_check(ln.disc, lambda d: ln.disc_loss(d, obs, lat.labels, pa), h)
    raise ValueError(f"unknown case {kind!r}")


def run_suite(n_instances: int = 100, seed: int = 0) -> list[CaseResult]:
    """Check ``n_instances`` random instances spread round-robin over ``CASES``."""
    worst: dict[str, tuple[int, GradCheck]] = {}
    for i in range(n_instances):
        case = CASES[i % len(CASES)]
        rng = np.random.default_rng([seed, i])
        res = check_instance(case, rng)
        name = "/".join(str(c) for c in case if c)
        count, prev = worst.get(name, (0, None))
        if prev is None or res.max_rel_error > prev.max_rel_error:
            prev = res
        worst[name] = (count + 1, prev)
    return [CaseResult(name, n, g) for name, (n, g) in worst.items()]
