"""Observation-action sample extraction and training-time augmentation.

Samples are drawn at continuous timestamps: ego and neighbor states are
linearly interpolated between grid points, which turns the sparse recorded
trajectories into an effectively continuous supervision source. Flipping
(x and/or y, each with probability 1/2) and a shared random rotation then
randomize orientation without touching the relational structure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from kdnav.core import LocalFrame
from kdnav.data.preprocess import ProcessedTrack
from kdnav.sim.observation import Observation

DEFAULT_SENSE_RADIUS = 4.0


@dataclass
class Sample:
    observation: Observation  # unaligned mode
    action: np.ndarray        # next-step velocity (m/s)


class SampleExtractor:
    """Vectorized interpolation over a set of processed tracks."""

    def __init__(self, tracks: list[ProcessedTrack],
                 sense_radius: float = DEFAULT_SENSE_RADIUS):
        if not tracks:
            raise ValueError("no tracks given")
        self.tracks = list(tracks)
        self.sense_radius = sense_radius
        self.by_ped = {tr.ped_id: idx for idx, tr in enumerate(self.tracks)}

        n = len(self.tracks)
        self.t0 = np.array([tr.t0 for tr in self.tracks])
        self.dt = self.tracks[0].dt
        self.m = np.array([tr.n_grid for tr in self.tracks], dtype=np.int64)
        # latest time at which (position, velocity) interpolation is defined
        self.state_end = self.t0 + (self.m - 2) * self.dt
        self.pos_off = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(self.m, out=self.pos_off[1:])
        self.vel_off = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(self.m - 1, out=self.vel_off[1:])
        self.pos = np.vstack([tr.positions for tr in self.tracks])
        self.vel = np.vstack([tr.velocities for tr in self.tracks])

        self.active_idx = np.array(
            [i for i, tr in enumerate(self.tracks) if tr.active], dtype=np.int64)

    def _states_at(self, t: float, idx: np.ndarray):
        """Interpolated positions and velocities of tracks ``idx`` at time t."""
        u = (t - self.t0[idx]) / self.dt
        k = np.floor(u + 1e-9).astype(np.int64)
        frac = u - k
        frac[frac < 1e-9] = 0.0
        kp = self.pos_off[idx] + k
        kp1 = self.pos_off[idx] + np.minimum(k + 1, self.m[idx] - 1)
        kv = self.vel_off[idx] + k
        kv1 = self.vel_off[idx] + np.minimum(k + 1, self.m[idx] - 2)
        w = frac[:, None]
        p = (1.0 - w) * self.pos[kp] + w * self.pos[kp1]
        v = (1.0 - w) * self.vel[kv] + w * self.vel[kv1]
        return p, v

    def neighbors_at(self, t: float, exclude_idx: int, ego_pos: np.ndarray):
        """Neighbor records [dp, dv] of every other track defined at t and
        within sensing range, in ascending pedestrian order."""
        cover = (self.t0 - 1e-9 <= t) & (t <= self.state_end + 1e-9)
        cover[exclude_idx] = False
        idx = np.nonzero(cover)[0]
        if not len(idx):
            return np.empty((0, 4))
        p, v = self._states_at(t, idx)
        dp = p - ego_pos
        within = dp[:, 0] ** 2 + dp[:, 1] ** 2 <= self.sense_radius ** 2
        if not np.any(within):
            return np.empty((0, 4))
        tr = self.tracks[exclude_idx]
        ego_v = tr.velocity_at(t)
        return np.hstack([dp[within], v[within] - ego_v])

    def extract(self, ped_id: int, t: float) -> Sample:
        if ped_id not in self.by_ped:
            raise KeyError(f"unknown pedestrian id {ped_id}")
        idx = self.by_ped[ped_id]
        tr = self.tracks[idx]
        if not tr.covers_sample(t):
            lo, hi = tr.sample_span()
            raise ValueError(
                f"t={t:.4f}s outside the sample span [{lo:.4f}, {hi:.4f}] "
                f"of pedestrian {ped_id}")
        ego_p = tr.position_at(t)
        ego_v = tr.velocity_at(t)
        action = tr.action_at(t)
        rows = self.neighbors_at(t, idx, ego_p)
        obs = Observation(neighbors=np.vstack([np.zeros((1, 4)), rows]),
                          goal_rep=tr.goal - ego_p, ego_velocity=ego_v,
                          aligned=False, frame=LocalFrame(ego_p, 0.0))
        return Sample(observation=obs, action=action)

    # -- bulk access for training -------------------------------------------

    def grid_index(self) -> list[tuple[int, float]]:
        """All (track index, grid time) pairs usable as supervision."""
        out = []
        for i in self.active_idx:
            tr = self.tracks[i]
            for k in range(tr.n_grid - 2):
                out.append((int(i), tr.t0 + k * tr.dt))
        return out

    def random_times(self, rng: np.random.Generator, count: int, subset=None):
        """Draw (track index, continuous t) pairs, weighted by span length.

        ``subset`` restricts the draw to the given track indices (defaults to
        every active track).
        """
        if subset is None:
            pool = self.active_idx
        else:
            pool = np.asarray(subset, dtype=np.int64)
        spans = np.maximum(0.0, (self.m[pool] - 3) * self.dt)
        total = spans.sum()
        if total <= 0:
            raise ValueError("no track in the pool admits continuous sampling")
        picks = rng.choice(pool, size=count, p=spans / total)
        ts = np.empty(count)
        for j, i in enumerate(picks):
            lo, hi = self.tracks[i].sample_span()
            ts[j] = rng.uniform(lo, hi)
        return picks, ts

    def batch(self, idx_time_pairs):
        """Assemble network-ready arrays for (track index, t) pairs.

        Returns (ego (B,4), neighbors (T,4), counts (B,), actions (B,2)).
        """
        egos, chunks, counts, actions = [], [], [], []
        for i, t in idx_time_pairs:
            tr = self.tracks[i]
            ego_p = tr.position_at(t)
            rows = self.neighbors_at(t, i, ego_p)
            ego_v = tr.velocity_at(t)
            egos.append(np.concatenate([tr.goal - ego_p, ego_v]))
            counts.append(rows.shape[0])
            if rows.shape[0]:
                chunks.append(rows)
            actions.append(tr.action_at(t))
        neighbors = np.vstack(chunks) if chunks else np.empty((0, 4))
        return (np.array(egos), neighbors,
                np.array(counts, dtype=np.int32), np.array(actions))


def extract_sample(tracks, ped_id: int, t: float,
                   sense_radius: float = DEFAULT_SENSE_RADIUS) -> Sample:
    """One-off extraction; builds a throwaway extractor."""
    return SampleExtractor(tracks, sense_radius).extract(ped_id, t)


def _transform(vectors: np.ndarray, sx: float, sy: float,
               cos_t: float, sin_t: float) -> np.ndarray:
    """Flip then rotate (…, 2) vectors."""
    x = sx * vectors[..., 0]
    y = sy * vectors[..., 1]
    out = np.empty_like(vectors)
    out[..., 0] = cos_t * x - sin_t * y
    out[..., 1] = sin_t * x + cos_t * y
    return out


def augment(sample: Sample, rng: np.random.Generator) -> Sample:
    """Randomly flip x/y and rotate every vector in the sample coherently."""
    sx = -1.0 if rng.random() < 0.5 else 1.0
    sy = -1.0 if rng.random() < 0.5 else 1.0
    theta = rng.uniform(-math.pi, math.pi)
    cos_t, sin_t = math.cos(theta), math.sin(theta)

    obs = sample.observation
    neigh = np.empty_like(obs.neighbors)
    neigh[:, 0:2] = _transform(obs.neighbors[:, 0:2], sx, sy, cos_t, sin_t)
    neigh[:, 2:4] = _transform(obs.neighbors[:, 2:4], sx, sy, cos_t, sin_t)
    new_obs = Observation(
        neighbors=neigh,
        goal_rep=_transform(np.asarray(obs.goal_rep), sx, sy, cos_t, sin_t),
        ego_velocity=_transform(obs.ego_velocity, sx, sy, cos_t, sin_t),
        aligned=False, frame=obs.frame)
    return Sample(observation=new_obs,
                  action=_transform(sample.action, sx, sy, cos_t, sin_t))


def augment_batch(ego: np.ndarray, neighbors: np.ndarray, counts: np.ndarray,
                  actions: np.ndarray, rng: np.random.Generator):
    """Batched version of :func:`augment` over extractor arrays."""
    b = ego.shape[0]
    sx = np.where(rng.random(b) < 0.5, -1.0, 1.0)
    sy = np.where(rng.random(b) < 0.5, -1.0, 1.0)
    theta = rng.uniform(-math.pi, math.pi, size=b)
    cos_t, sin_t = np.cos(theta), np.sin(theta)

    def tf(vec, s_x, s_y, c, s):
        x = s_x * vec[:, 0]
        y = s_y * vec[:, 1]
        return np.column_stack([c * x - s * y, s * x + c * y])

    ego_out = np.hstack([tf(ego[:, 0:2], sx, sy, cos_t, sin_t),
                         tf(ego[:, 2:4], sx, sy, cos_t, sin_t)])
    if neighbors.shape[0]:
        rsx, rsy = np.repeat(sx, counts), np.repeat(sy, counts)
        rc, rs = np.repeat(cos_t, counts), np.repeat(sin_t, counts)
        neigh_out = np.hstack([tf(neighbors[:, 0:2], rsx, rsy, rc, rs),
                               tf(neighbors[:, 2:4], rsx, rsy, rc, rs)])
    else:
        neigh_out = neighbors
    act_out = tf(actions, sx, sy, cos_t, sin_t)
    return ego_out, neigh_out, act_out
