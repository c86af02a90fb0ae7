from . import cartpole, maze, pendulum, reacher  # noqa: F401  (register families)
from .base import (FAMILIES, EnvState, EnvVariant, EpisodeDoneError, StepResult, VecEnv,
                   env_reset, env_step, held_out_variants, make_variant, run_episodes,
                   variant_names)
from .rollout import RolloutBatch, rollout

__all__ = ["FAMILIES", "EnvState", "EnvVariant", "EpisodeDoneError", "RolloutBatch",
           "StepResult", "VecEnv", "env_reset", "env_step", "held_out_variants",
           "make_variant", "rollout", "run_episodes", "variant_names"]
