"""Episode metrics: success rate, extra distance, energy efficiency.

All three are pure functions of a completed EpisodeTrace. Energy follows the
classic locomotion model (rest rate plus a quadratic speed term scaled so
the energy-optimal walking speed is about 1.3 m/s); the efficiency of a step
is the goal-distance reduction divided by the energy spent.
"""

from __future__ import annotations

import numpy as np

from kdnav.sim.world import EpisodeTrace, Status

ENERGY_REST = 2.23    # e_s
ENERGY_MOTION = 1.26  # e_w; sqrt(e_s / e_w) = 1.33 m/s optimal speed


def success_rate(trace: EpisodeTrace) -> float:
    """Fraction of agents that reached their goals."""
    return float(np.mean(trace.final_status == Status.ARRIVED))


def extra_distance(trace: EpisodeTrace, agent: int) -> float | None:
    """Path length beyond the straight line, for arrived agents only.

    Returns None for agents that never arrived. Values may be slightly
    negative because an agent stops within its arrival threshold of the
    goal rather than on it.
    """
    if trace.final_status[agent] != Status.ARRIVED:
        return None
    path = trace.path(agent)
    seg = np.diff(path, axis=0)
    traveled = float(np.sum(np.hypot(seg[:, 0], seg[:, 1])))
    straight = float(np.hypot(*(trace.scenario.goals[agent]
                                - trace.scenario.starts[agent])))
    return traveled - straight


def energy_efficiency(trace: EpisodeTrace, agent: int,
                      e_s: float = ENERGY_REST,
                      e_w: float = ENERGY_MOTION) -> float:
    """Mean per-step ratio of goal progress to locomotion energy."""
    path = trace.path(agent)
    if path.shape[0] < 2:
        return 0.0
    goal = trace.scenario.goals[agent]
    dist = np.hypot(path[:, 0] - goal[0], path[:, 1] - goal[1])
    progress = dist[:-1] - dist[1:]
    vel = trace.velocities[agent]
    speed_sq = vel[:, 0] ** 2 + vel[:, 1] ** 2
    energy = (e_s + e_w * speed_sq) * trace.config.dt_control
    return float(np.mean(progress / energy))
