"""Optimal Reciprocal Collision Avoidance baseline planner.

Each neighbor induces a half-plane constraint in velocity space derived from
the velocity obstacle truncated at the time horizon, with both agents taking
half of the avoidance responsibility. The feasible velocity closest to the
preferred one is found by an incremental 2D linear program; when the
constraints are infeasible, a projection fallback minimizes the worst
constraint violation.

Agent radii are inflated by a safety buffer (20% by default) to keep agents
from shaving past each other.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from kdnav import _kernels
from kdnav.core import DEGENERATE_DIRECTION


@dataclass
class OrcaParams:
    time_horizon: float = 2.0
    radius_buffer: float = 0.20
    neighbor_dist: float = 4.0
    max_speed: float | None = None  # None: the agent's own speed limit
    dt: float = 0.12                # horizon used to resolve current overlaps

    def __post_init__(self):
        if self.time_horizon <= 0:
            raise ValueError("time_horizon must be positive")
        if self.radius_buffer < 0:
            raise ValueError("radius_buffer must be non-negative")


@dataclass
class OrcaLine:
    """Half-plane constraint: feasible velocities lie left of the directed
    line through ``point`` along the unit vector ``direction``."""

    point: np.ndarray
    direction: np.ndarray

    def __post_init__(self):
        self.point = np.asarray(self.point, dtype=np.float64)
        self.direction = np.asarray(self.direction, dtype=np.float64)
        n = float(np.hypot(self.direction[0], self.direction[1]))
        if abs(n - 1.0) > 1e-9:
            raise ValueError(f"direction must be unit length, got norm {n}")


def solve_lp2(lines, preferred, max_speed):
    """Velocity closest to ``preferred`` satisfying the lines and speed disk.

    Returns ``(velocity, feasible_count)``. A count smaller than the number
    of lines means constraint ``feasible_count`` could not be satisfied and
    the caller should fall back to the projection program.
    """
    if max_speed <= 0:
        raise ValueError("max_speed must be positive")
    pts = np.array([l.point for l in lines]).reshape(-1, 2)
    dirs = np.array([l.direction for l in lines]).reshape(-1, 2)
    return _kernels.solve_lp2(pts, dirs, np.asarray(preferred, dtype=np.float64),
                              float(max_speed))


def preferred_velocity(position, goal, v_pref) -> np.ndarray:
    d = np.asarray(goal, dtype=np.float64) - np.asarray(position, dtype=np.float64)
    dist = float(np.hypot(d[0], d[1]))
    if dist < DEGENERATE_DIRECTION:
        return np.zeros(2)
    return d * (v_pref / dist)


def compute_orca_velocity(agent, neighbors, params: OrcaParams | None = None) -> np.ndarray:
    """New velocity for ``agent`` given its visible neighbors.

    ``agent`` and ``neighbors`` are AgentState-like (position, velocity,
    radius, goal, v_pref, v_max). The preferred velocity points at the goal
    at the preferred speed and is zero at the goal.
    """
    params = params or OrcaParams()
    states = [agent] + list(neighbors)
    positions = np.array([s.position for s in states], dtype=np.float64).reshape(-1, 2)
    velocities = np.array([s.velocity for s in states], dtype=np.float64).reshape(-1, 2)
    radii = np.array([s.radius for s in states], dtype=np.float64)
    status = np.zeros(len(states), dtype=np.int8)
    pref = np.zeros((len(states), 2))
    pref[0] = preferred_velocity(agent.position, agent.goal, agent.v_pref)
    max_speed = params.max_speed if params.max_speed is not None else agent.v_max
    max_speeds = np.full(len(states), float(max_speed))
    # only agent 0 is planned for; the rest enter purely as constraints
    status[1:] = 2
    out = _kernels.orca_velocities(
        positions, velocities, radii, status, pref, max_speeds,
        params.time_horizon, params.dt, 1.0 + params.radius_buffer,
        params.neighbor_dist)
    return out[0]


class OrcaPolicy:
    """Drives agents with ORCA; plugs into the episode loop's policy slot."""

    aligned = False

    def __init__(self, params: OrcaParams | None = None):
        self.params = params or OrcaParams()

    def act_world(self, world, ids) -> np.ndarray:
        p = self.params
        rel = world.goals - world.positions
        dist = np.sqrt(rel[:, 0] ** 2 + rel[:, 1] ** 2)
        scale = np.where(dist < DEGENERATE_DIRECTION, 0.0,
                         world.v_pref / np.maximum(dist, DEGENERATE_DIRECTION))
        pref = rel * scale[:, None]
        max_speeds = (world.v_max if p.max_speed is None
                      else np.full(world.n_agents, p.max_speed))
        out = _kernels.orca_velocities(
            world.positions, world.velocities, world.radii, world.status,
            pref, max_speeds, p.time_horizon, p.dt,
            1.0 + p.radius_buffer, p.neighbor_dist)
        return out[ids]

    def __call__(self, obs, state) -> np.ndarray:
        """Single-agent path reconstructing neighbor states from the
        observation (homogeneous radii assumed, as everywhere in this
        engine)."""
        if obs.aligned:
            raise ValueError("ORCA expects unaligned observations")
        rows = obs.neighbors[1:]  # strip dummy

        class _N:  # minimal neighbor record
            __slots__ = ("position", "velocity", "radius")

            def __init__(self, pos, vel, radius):
                self.position = pos
                self.velocity = vel
                self.radius = radius

        neighbors = [
            _N(state.position + rows[j, 0:2],
               state.velocity + rows[j, 2:4], state.radius)
            for j in range(rows.shape[0])
        ]
        return compute_orca_velocity(state, neighbors, self.params)
