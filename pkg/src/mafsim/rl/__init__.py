from mafsim.rl.nn import MLP, Adam, clip_by_global_norm, global_norm
from mafsim.rl.policy import (Trajectory, gaussian_log_prob, gaussian_policy,
                              normalize_advantages, ppo_clip_objective,
                              returns_and_advantages, value_loss)

__all__ = ["MLP", "Adam", "clip_by_global_norm", "global_norm", "Trajectory",
           "gaussian_log_prob", "gaussian_policy", "normalize_advantages",
           "ppo_clip_objective", "returns_and_advantages", "value_loss"]
