from .config import FAMILY_DEFAULTS, TrainConfig, default_config
from .gae import AdvantageEstimate, compute_gae
from .losses import (a2c_objective, critic_loss, diayn_reward, gaussian_log_density,
                     lc_objective, ppo_clip_objective)
from .trainer import (METHODS, Candidate, Learner, TrainedModel, TrainResult, train_diayn_r,
                      train_ensemble, train_lc, train_method, train_single, train_subspace)

__all__ = ["FAMILY_DEFAULTS", "METHODS", "AdvantageEstimate", "Candidate", "Learner",
           "TrainConfig", "TrainResult", "TrainedModel", "a2c_objective", "compute_gae",
           "critic_loss", "default_config", "diayn_reward", "gaussian_log_density",
           "lc_objective", "ppo_clip_objective", "train_diayn_r", "train_ensemble", "train_lc",
           "train_method", "train_single", "train_subspace"]
