"""Step reward: terminal bonuses plus distillation-shaped dense terms.

An agent that reaches its goal earns ``r_arrival``; one that touches any
other non-arrived agent earns ``r_collision``. Otherwise the reward blends
two exponentially decaying error terms: how far the commanded action strays
from what the expert policies would do in the same (unaligned) observation,
and how far the realized velocity strays from the preferred-speed goal
velocity.

Sign note: the scale coefficients must be negative for the exponentials to
*decay* with error; the magnitude ships as 0.85 and the config accepts
either sign for ablations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from kdnav.core import DEGENERATE_DIRECTION


@dataclass
class RewardConfig:
    r_arrival: float = 1.0
    r_collision: float = -0.25
    w_e: float = 0.02
    w_v: float = 0.08
    sigma_e: float = -0.85
    sigma_v: float = -0.85
    v_pref: float = 1.3
    mode: str = "kd"  # "kd" (distillation shaping) or "progress" (RL baseline)
    w_progress: float = 0.2

    def __post_init__(self):
        if self.w_e < 0 or self.w_v < 0:
            raise ValueError("reward weights must be non-negative")
        if self.mode not in ("kd", "progress"):
            raise ValueError(f"unknown reward mode {self.mode!r}")


@dataclass
class TransitionOutcome:
    """Post-step summary of one agent's control window."""

    arrived: bool
    collided: bool
    p_t: np.ndarray       # position when the action was chosen
    p_next: np.ndarray    # position after the window
    v_next: np.ndarray    # velocity applied over the window
    goal: np.ndarray


def goal_velocity(p: np.ndarray, g: np.ndarray, v_pref: float) -> np.ndarray:
    """Preferred-speed velocity pointing at the goal; zero at the goal."""
    d = np.asarray(g, dtype=np.float64) - np.asarray(p, dtype=np.float64)
    dist = float(np.hypot(d[0], d[1]))
    if dist < DEGENERATE_DIRECTION:
        return np.zeros(2)
    return d * (v_pref / dist)


def compute_reward(outcome: TransitionOutcome, action: np.ndarray,
                   expert_obs, config: RewardConfig, experts=()) -> float:
    """Reward for one transition.

    ``action`` must be expressed in the unaligned local frame (rotate
    goal-aligned policy outputs back before calling), so that it shares a
    frame with the expert outputs. ``expert_obs`` is the agent's unaligned
    observation at decision time; it may be None when no distillation term
    is active.
    """
    if outcome.arrived:
        return config.r_arrival
    if outcome.collided:
        return config.r_collision

    if config.mode == "progress":
        d_before = float(np.hypot(*(outcome.goal - outcome.p_t)))
        d_after = float(np.hypot(*(outcome.goal - outcome.p_next)))
        return config.w_progress * (d_before - d_after)

    r = 0.0
    if config.w_e > 0.0:
        if not experts:
            raise ValueError("distillation reward requires at least one expert")
        if expert_obs is None:
            raise ValueError("distillation reward requires the unaligned observation")
        err = 0.0
        for expert in experts:
            fe = expert(expert_obs)
            err += float(np.hypot(action[0] - fe[0], action[1] - fe[1]))
        err /= len(experts)
        r += config.w_e * math.exp(config.sigma_e * err)
    if config.w_v > 0.0:
        v_star = goal_velocity(outcome.p_t, outcome.goal, config.v_pref)
        dv = outcome.v_next - v_star
        r += config.w_v * math.exp(config.sigma_v * float(np.hypot(dv[0], dv[1])))
    return r


def shaping_rewards_batch(config: RewardConfig, behavior_err: np.ndarray,
                          p_t: np.ndarray, p_next: np.ndarray,
                          v_next: np.ndarray, goals: np.ndarray) -> np.ndarray:
    """Vectorized non-terminal rewards for the rollout hot path.

    ``behavior_err`` is the expert-averaged action error per agent (any
    value if w_e is 0).
    """
    if config.mode == "progress":
        d_before = np.hypot(goals[:, 0] - p_t[:, 0], goals[:, 1] - p_t[:, 1])
        d_after = np.hypot(goals[:, 0] - p_next[:, 0], goals[:, 1] - p_next[:, 1])
        return config.w_progress * (d_before - d_after)

    out = np.zeros(len(p_t))
    if config.w_e > 0.0:
        out += config.w_e * np.exp(config.sigma_e * behavior_err)
    if config.w_v > 0.0:
        d = goals - p_t
        dist = np.hypot(d[:, 0], d[:, 1])
        scale = np.where(dist < DEGENERATE_DIRECTION, 0.0,
                         config.v_pref / np.maximum(dist, DEGENERATE_DIRECTION))
        v_star = d * scale[:, None]
        verr = np.hypot(v_next[:, 0] - v_star[:, 0], v_next[:, 1] - v_star[:, 1])
        out += config.w_v * np.exp(config.sigma_v * verr)
    return out
