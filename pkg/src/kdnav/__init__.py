"""Decentralized multi-agent navigation engine.

Trains a collision-avoidance policy in two stages (behavior cloning of
pedestrian experts, then PPO with a distillation-shaped reward) and benchmarks
it against an ORCA planner and a pure-RL baseline on randomized circle,
corridor and square scenarios.
"""

from kdnav._kernels import backend_name

__version__ = "0.1.0"

__all__ = ["backend_name", "__version__"]
