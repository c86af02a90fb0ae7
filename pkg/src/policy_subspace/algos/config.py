"""Training hyper-parameters and per-family defaults."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

ALGOS = ("ppo", "a2c")


@dataclass
class TrainConfig:
    algo: str = "ppo"
    gamma: float = 0.99
    gae_lambda: float = 0.95
    clip_eps: float = 0.2
    lr_policy: float = 1e-3
    lr_critic: float = 1e-3
    lr_discriminator: float = 1e-3
    n_envs: int = 32
    n_acq_steps: int = 8
    n_minibatches: int = 1
    update_epochs: int = 1
    entropy_coef: float = 0.0
    critic_coef: float = 1.0
    grad_clip: float = 2.0
    beta: float = 1.0
    action_std: float = 0.5
    normalize_advantages: bool = True
    # bootstrap from the critic when an episode hits the horizon
    bootstrap_truncation: bool = True
    # "linear" decays every learning rate to zero over the run
    lr_schedule: str = "constant"
    policy_hidden: tuple = (64, 64)
    critic_hidden: tuple = (64, 64)
    discriminator_hidden: tuple = (64, 64)
    # output-layer init multipliers
    policy_init_scale: float = 1.0
    critic_init_scale: float = 1.0
    n_skills: int = 10
    # fixed std of the Gaussian density model of the continuous-latent baselines
    latent_std: float = 0.2
    total_steps: int = 100_000
    seed: int = 0
    log_every: int = 1

    def __post_init__(self):
        for name in ("policy_hidden", "critic_hidden", "discriminator_hidden"):
            setattr(self, name, tuple(int(h) for h in getattr(self, name)))
        if self.algo not in ALGOS:
            raise ValueError(f"unknown algo {self.algo!r}")
        if not 0 < self.gamma <= 1 or not 0 <= self.gae_lambda <= 1:
            raise ValueError("need 0 < gamma <= 1 and 0 <= lambda <= 1")
        positive = ("lr_policy", "lr_critic", "lr_discriminator", "n_envs", "n_acq_steps",
                    "n_minibatches", "update_epochs", "grad_clip", "action_std", "latent_std",
                    "total_steps", "clip_eps")
        for name in positive:
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.policy_init_scale < 0 or self.critic_init_scale < 0:
            raise ValueError("init scales must be >= 0")
        if self.beta < 0 or self.entropy_coef < 0 or self.critic_coef < 0:
            raise ValueError("beta and loss coefficients must be >= 0")
        if self.lr_schedule not in ("constant", "linear"):
            raise ValueError(f"unknown lr schedule {self.lr_schedule!r}")
        if self.n_skills < 2:
            raise ValueError("need at least two skills")

    @property
    def steps_per_update(self) -> int:
        return self.n_envs * self.n_acq_steps

    @property
    def n_updates(self) -> int:
        return max(1, self.total_steps // self.steps_per_update)

    def replace(self, **changes) -> "TrainConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        for name in ("policy_hidden", "critic_hidden", "discriminator_hidden"):
            d[name] = list(d[name])
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        unknown = set(d) - {f.name for f in dataclasses.fields(cls)}
        if unknown:
            raise ValueError(f"unknown training keys: {sorted(unknown)}")
        return cls(**d)


# values from the per-environment hyper-parameter tables; unlisted entries
# (budgets, clip ratio, maze network width) are our own choices
FAMILY_DEFAULTS: dict[str, dict] = {
    "CartPole": dict(
        algo="a2c", lr_policy=1e-3, lr_critic=1e-3, lr_discriminator=1e-3, n_envs=32,
        n_acq_steps=8, critic_coef=1.0, entropy_coef=0.001, gamma=0.99, gae_lambda=1.0,
        grad_clip=2.0, policy_hidden=(8, 8), critic_hidden=(32, 32),
        discriminator_hidden=(8, 8), beta=1.0, total_steps=600_000),
    "PendulumDiscrete": dict(
        algo="a2c", lr_policy=1e-3, lr_critic=1e-3, lr_discriminator=1e-3, n_envs=32,
        n_acq_steps=8, critic_coef=1.0, entropy_coef=0.001, gamma=0.99, gae_lambda=0.7,
        grad_clip=2.0, policy_hidden=(16, 16), critic_hidden=(16, 16),
        discriminator_hidden=(16, 16), beta=1.0, total_steps=1_000_000),
    "Maze2d": dict(
        algo="ppo", lr_policy=1e-3, lr_critic=1e-3, lr_discriminator=1e-3, n_envs=32,
        n_acq_steps=16, n_minibatches=4, update_epochs=3, critic_coef=1.0,
        entropy_coef=0.01, gamma=0.99, gae_lambda=0.95, grad_clip=20.0, clip_eps=0.2,
        normalize_advantages=False,
        policy_hidden=(32, 32), critic_hidden=(32, 32), discriminator_hidden=(32, 32),
        beta=1.0, total_steps=300_000),
    "PointReacher": dict(
        algo="ppo", lr_policy=3e-4, lr_critic=3e-4, lr_discriminator=1e-3, n_envs=16,
        n_acq_steps=20, n_minibatches=4, update_epochs=4, clip_eps=0.3, action_std=0.5,
        gamma=0.99, gae_lambda=0.96, grad_clip=10.0, entropy_coef=0.0,
        policy_hidden=(32, 32), critic_hidden=(64, 64), discriminator_hidden=(32, 32),
        beta=1.0, total_steps=100_000),
}


def default_config(family: str, **overrides) -> TrainConfig:
    if family not in FAMILY_DEFAULTS:
        raise KeyError(f"no defaults for family {family!r}")
    return TrainConfig(**{**FAMILY_DEFAULTS[family], **overrides})
