"""Synthetic pedestrian dataset generator.

Produces a frame-table file shaped like an open-plaza recording: most
pedestrians cross between edges at individual preferred speeds with gentle
heading wander and reciprocal collision avoidance; the rest stand around or
saunter aimlessly (and should be filtered out by cleansing). Useful for
tests and as a stand-in when no real recording is at hand.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from kdnav import _kernels

WALKER, STANDER, SAUNTERER = 0, 1, 2


class _Ped:
    __slots__ = ("ped_id", "kind", "pos", "goal", "v_pref", "heading_noise",
                 "frames_left", "waypoint", "home")

    def __init__(self, ped_id, kind, pos, goal, v_pref, frames_left):
        self.ped_id = ped_id
        self.kind = kind
        self.pos = pos
        self.goal = goal
        self.v_pref = v_pref
        self.heading_noise = 0.0
        self.frames_left = frames_left
        self.home = pos.copy()
        self.waypoint = goal.copy()


def _edge_point(rng, width, height, side):
    u = rng.uniform(-0.5, 0.5)
    if side == 0:
        return np.array([-width / 2, u * height])
    if side == 1:
        return np.array([width / 2, u * height])
    if side == 2:
        return np.array([u * width, -height / 2])
    return np.array([u * width, height / 2])


def generate_synthetic_dataset(path, n_peds: int = 434, seed: int = 0,
                               fps: float = 25.0, width: float = 28.0,
                               height: float = 16.0,
                               walker_frac: float = 0.70,
                               stander_frac: float = 0.15) -> dict:
    """Write a frame-table dataset; returns simple generation stats."""
    rng = np.random.default_rng(seed)
    dt = 1.0 / fps

    kinds = []
    for _ in range(n_peds):
        u = rng.random()
        if u < walker_frac:
            kinds.append(WALKER)
        elif u < walker_frac + stander_frac:
            kinds.append(STANDER)
        else:
            kinds.append(SAUNTERER)

    spawn_gaps = rng.uniform(0.3, 1.2, size=n_peds)
    spawn_frames = np.floor(np.cumsum(spawn_gaps) / dt).astype(np.int64)

    live: list[_Ped] = []
    rows: list[tuple[int, int, float, float]] = []
    next_ped = 0
    frame = 0
    max_frames = int((spawn_gaps.sum() + 120.0) / dt)

    while (next_ped < n_peds or live) and frame < max_frames:
        # spawn due pedestrians, keeping a little personal space
        while next_ped < n_peds and frame >= spawn_frames[next_ped]:
            kind = kinds[next_ped]
            placed = None
            for _ in range(50):
                if kind == WALKER:
                    s = int(rng.integers(4))
                    g = int((s + int(rng.integers(1, 4))) % 4)
                    pos = _edge_point(rng, width, height, s)
                    goal = _edge_point(rng, width, height, g)
                else:
                    pos = np.array([rng.uniform(-width / 2 + 1, width / 2 - 1),
                                    rng.uniform(-height / 2 + 1, height / 2 - 1)])
                    goal = pos.copy()
                if all(np.hypot(*(p.pos - pos)) > 0.6 for p in live):
                    placed = (pos, goal)
                    break
            if placed is None:
                spawn_frames[next_ped] = frame + 5  # retry shortly
                break
            pos, goal = placed
            v_pref = float(np.clip(rng.normal(1.3, 0.15), 0.9, 1.8))
            if kind == SAUNTERER:
                v_pref = rng.uniform(0.3, 0.5)
            frames_left = int(rng.uniform(15.0, 40.0) / dt)
            live.append(_Ped(next_ped, kind, pos, goal, v_pref, frames_left))
            next_ped += 1

        if live:
            n = len(live)
            positions = np.array([p.pos for p in live])
            velocities = np.zeros((n, 2))
            pref = np.zeros((n, 2))
            for k, p in enumerate(live):
                if p.kind == WALKER:
                    p.heading_noise += (-0.8 * p.heading_noise * dt
                                        + 0.25 * math.sqrt(dt) * rng.standard_normal())
                    d = p.goal - p.pos
                    dist = float(np.hypot(d[0], d[1]))
                    if dist > 1e-9:
                        ang = math.atan2(d[1], d[0]) + p.heading_noise
                        pref[k] = p.v_pref * np.array([math.cos(ang), math.sin(ang)])
                elif p.kind == SAUNTERER:
                    d = p.waypoint - p.pos
                    if float(np.hypot(d[0], d[1])) < 0.3:
                        p.waypoint = p.home + rng.uniform(-1.2, 1.2, size=2)
                        d = p.waypoint - p.pos
                    dist = float(np.hypot(d[0], d[1]))
                    if dist > 1e-9:
                        pref[k] = p.v_pref * d / dist
                else:
                    pref[k] = 0.02 * rng.standard_normal(2)

            radii = np.full(n, 0.1)
            status = np.zeros(n, dtype=np.int8)
            max_speeds = np.full(n, 2.0)
            vel = _kernels.orca_velocities(
                positions, velocities, radii, status, pref, max_speeds,
                2.0, 0.12, 1.1, 3.0)

            done = []
            for k, p in enumerate(live):
                p.pos = p.pos + vel[k] * dt
                rows.append((frame, p.ped_id, float(p.pos[0]), float(p.pos[1])))
                p.frames_left -= 1
                if p.kind == WALKER:
                    if float(np.hypot(*(p.goal - p.pos))) < 0.25:
                        done.append(k)
                elif p.frames_left <= 0:
                    done.append(k)
            for k in reversed(done):
                live.pop(k)

        frame += 1

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        fh.write("# synthetic plaza pedestrian recording\n")
        fh.write(f"fps {fps}\n")
        for fr, ped, x, y in rows:
            fh.write(f"{fr} {ped} {x:.6f} {y:.6f}\n")

    return {"n_peds": n_peds,
            "n_walkers": int(sum(1 for k in kinds if k == WALKER)),
            "n_rows": len(rows), "n_frames": frame}
