"""Observation construction in plain-local and goal-aligned frames.

An observation holds the neighbor records (relative position and velocity of
every non-arrived agent within sensing range) behind an all-zeros dummy
record, plus the goal representation and the agent's own velocity. In the
goal-aligned variant every vector is rotated so the goal sits on the +x axis
and the 2D relative goal collapses to its distance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from kdnav import _kernels
from kdnav.core import DEGENERATE_DIRECTION, LocalFrame


@dataclass
class Observation:
    neighbors: np.ndarray  # (m+1, 4): row 0 is the dummy record
    goal_rep: np.ndarray | float  # relative goal (2,) or scalar distance
    ego_velocity: np.ndarray  # (2,), expressed in the frame
    aligned: bool
    frame: LocalFrame

    def ego_input(self) -> np.ndarray:
        if self.aligned:
            return np.array([float(self.goal_rep),
                             self.ego_velocity[0], self.ego_velocity[1]])
        return np.array([self.goal_rep[0], self.goal_rep[1],
                         self.ego_velocity[0], self.ego_velocity[1]])


@dataclass
class ObservationBatch:
    """Array-of-structs view of the observations of all active agents."""

    ids: np.ndarray        # (B,) agent indices
    ego: np.ndarray        # (B, 3|4) ego inputs
    neighbors: np.ndarray  # (T, 4) real neighbor records, grouped by agent
    counts: np.ndarray     # (B,)
    rotations: np.ndarray  # (B,) frame rotation per agent (0 when unaligned)
    aligned: bool

    def offsets(self) -> np.ndarray:
        out = np.zeros(len(self.counts) + 1, dtype=np.int64)
        np.cumsum(self.counts, out=out[1:])
        return out

    def observation(self, k: int, origin: np.ndarray) -> Observation:
        off = self.offsets()
        rows = self.neighbors[off[k]:off[k + 1]]
        frame = LocalFrame(origin, float(self.rotations[k]))
        if self.aligned:
            goal_rep: np.ndarray | float = float(self.ego[k, 0])
            ego_v = self.ego[k, 1:3].copy()
        else:
            goal_rep = self.ego[k, 0:2].copy()
            ego_v = self.ego[k, 2:4].copy()
        return Observation(neighbors=np.vstack([np.zeros((1, 4)), rows]),
                           goal_rep=goal_rep, ego_velocity=ego_v,
                           aligned=self.aligned, frame=frame)


def _rotate_rows(rows: np.ndarray, cos_r: np.ndarray, sin_r: np.ndarray) -> np.ndarray:
    """Rotate (…, 2) row pairs by -rotation, vectorized per row."""
    out = np.empty_like(rows)
    out[:, 0] = cos_r * rows[:, 0] + sin_r * rows[:, 1]
    out[:, 1] = -sin_r * rows[:, 0] + cos_r * rows[:, 1]
    return out


def build_observation_batch(world, aligned: bool = False,
                            sense_radius: float | None = None) -> ObservationBatch:
    """Observations for every active agent in one kernel pass."""
    r = world.config.sense_radius if sense_radius is None else sense_radius
    ids, counts, rows = _kernels.neighbor_table(
        world.positions, world.velocities, world.status, r)
    rel_goal = world.goals[ids] - world.positions[ids]
    vel = world.velocities[ids]

    if not aligned:
        ego = np.hstack([rel_goal, vel])
        rotations = np.zeros(len(ids))
        return ObservationBatch(ids=ids, ego=ego, neighbors=rows,
                                counts=counts, rotations=rotations, aligned=False)

    dist = np.sqrt(rel_goal[:, 0] ** 2 + rel_goal[:, 1] ** 2)
    rotations = np.where(dist < DEGENERATE_DIRECTION, 0.0,
                         np.arctan2(rel_goal[:, 1], rel_goal[:, 0]))
    cos_r, sin_r = np.cos(rotations), np.sin(rotations)
    ego = np.empty((len(ids), 3))
    ego[:, 0] = dist
    ego[:, 1] = cos_r * vel[:, 0] + sin_r * vel[:, 1]
    ego[:, 2] = -sin_r * vel[:, 0] + cos_r * vel[:, 1]

    if rows.shape[0]:
        cr = np.repeat(cos_r, counts)
        sr = np.repeat(sin_r, counts)
        aligned_rows = np.empty_like(rows)
        aligned_rows[:, 0:2] = _rotate_rows(rows[:, 0:2], cr, sr)
        aligned_rows[:, 2:4] = _rotate_rows(rows[:, 2:4], cr, sr)
    else:
        aligned_rows = rows
    return ObservationBatch(ids=ids, ego=ego, neighbors=aligned_rows,
                            counts=counts, rotations=rotations, aligned=True)


def aligned_view(batch: ObservationBatch) -> ObservationBatch:
    """Goal-aligned reprojection of an unaligned batch (same neighbor set).

    Lets the rollout hot path run the neighbor gather once and serve both
    the expert (unaligned) and the RL policy (aligned) coherently.
    """
    if batch.aligned:
        raise ValueError("batch is already aligned")
    rel_goal = batch.ego[:, 0:2]
    vel = batch.ego[:, 2:4]
    dist = np.sqrt(rel_goal[:, 0] ** 2 + rel_goal[:, 1] ** 2)
    rotations = np.where(dist < DEGENERATE_DIRECTION, 0.0,
                         np.arctan2(rel_goal[:, 1], rel_goal[:, 0]))
    cos_r, sin_r = np.cos(rotations), np.sin(rotations)
    ego = np.empty((len(batch.ids), 3))
    ego[:, 0] = dist
    ego[:, 1] = cos_r * vel[:, 0] + sin_r * vel[:, 1]
    ego[:, 2] = -sin_r * vel[:, 0] + cos_r * vel[:, 1]
    rows = batch.neighbors
    if rows.shape[0]:
        cr = np.repeat(cos_r, batch.counts)
        sr = np.repeat(sin_r, batch.counts)
        aligned_rows = np.empty_like(rows)
        aligned_rows[:, 0:2] = _rotate_rows(rows[:, 0:2], cr, sr)
        aligned_rows[:, 2:4] = _rotate_rows(rows[:, 2:4], cr, sr)
    else:
        aligned_rows = rows
    return ObservationBatch(ids=batch.ids, ego=ego, neighbors=aligned_rows,
                            counts=batch.counts, rotations=rotations,
                            aligned=True)


def build_observation(world, agent_id: int, aligned: bool = False,
                      sense_radius: float | None = None) -> Observation:
    """Observation of one active agent (raises if it is not active)."""
    if world.status[agent_id] != 0:
        raise ValueError(f"agent {agent_id} is not active")
    batch = build_observation_batch(world, aligned=aligned,
                                    sense_radius=sense_radius)
    k = int(np.nonzero(batch.ids == agent_id)[0][0])
    return batch.observation(k, world.positions[agent_id].copy())
