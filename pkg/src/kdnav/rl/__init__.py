from kdnav.rl.reward import RewardConfig, TransitionOutcome, compute_reward, goal_velocity
from kdnav.rl.gae import gae
from kdnav.rl.rollout import RolloutBuffer, collect_rollouts
from kdnav.rl.ppo import PPODivergence, ppo_update
from kdnav.rl.train import TrainConfig, train

__all__ = [
    "RewardConfig",
    "TransitionOutcome",
    "compute_reward",
    "goal_velocity",
    "gae",
    "RolloutBuffer",
    "collect_rollouts",
    "PPODivergence",
    "ppo_update",
    "TrainConfig",
    "train",
]
