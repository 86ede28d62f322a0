"""Simple driving policies for tests and baselines.

The learned policies live elsewhere: experts in :mod:`kdnav.bc`, the
mean-action RL wrapper in :mod:`kdnav.rl.train`, the ORCA planner in
:mod:`kdnav.orca`.
"""

from __future__ import annotations

import numpy as np


class StraightLinePolicy:
    """Preferred-speed velocity straight at the goal, ignoring neighbors."""

    aligned = False

    def __call__(self, obs, state) -> np.ndarray:
        d = np.asarray(obs.goal_rep, dtype=np.float64)
        dist = float(np.hypot(d[0], d[1]))
        if dist < 1e-9:
            return np.zeros(2)
        return d * (state.v_pref / dist)


class ZeroPolicy:
    aligned = False

    def __call__(self, obs, state) -> np.ndarray:
        return np.zeros(2)


class RandomPolicy:
    """Uniform random velocity commands; useful for stress-testing the sim."""

    aligned = False

    def __init__(self, rng: np.random.Generator, speed: float = 1.3):
        self.rng = rng
        self.speed = speed

    def __call__(self, obs, state) -> np.ndarray:
        return self.rng.uniform(-self.speed, self.speed, size=2)

    def act_batch(self, batch) -> np.ndarray:
        return self.rng.uniform(-self.speed, self.speed, size=(len(batch.ids), 2))
