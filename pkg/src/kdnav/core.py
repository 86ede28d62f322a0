"""Geometry primitives shared by the simulator, planners and learners.

2D vectors are plain float64 numpy arrays of shape (2,), or (..., 2) where a
function documents batch support. All physics runs in double precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

Vec2 = np.ndarray  # shape (2,), float64

DEGENERATE_DIRECTION = 1e-9


def vec2(x: float, y: float) -> Vec2:
    return np.array([x, y], dtype=np.float64)


def norm(v: np.ndarray) -> float | np.ndarray:
    """Euclidean norm over the last axis."""
    return np.sqrt(np.sum(np.asarray(v) ** 2, axis=-1))


def normalize_angle(a: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    a = math.fmod(a, 2.0 * math.pi)
    if a <= -math.pi:
        a += 2.0 * math.pi
    elif a > math.pi:
        a -= 2.0 * math.pi
    return a


@dataclass(frozen=True)
class LocalFrame:
    """A local coordinate frame anchored at an agent.

    ``rotation`` is 0 for the plain (translation-only) frame and equals the
    goal bearing for the goal-aligned frame, in which case the goal lies on
    the frame's positive x axis.
    """

    origin: Vec2 = field(default_factory=lambda: np.zeros(2))
    rotation: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "origin", np.asarray(self.origin, dtype=np.float64))
        object.__setattr__(self, "rotation", normalize_angle(float(self.rotation)))


def goal_aligned_frame(position: Vec2, goal: Vec2) -> LocalFrame:
    """Frame whose x axis points from ``position`` toward ``goal``.

    When the agent sits on its goal the bearing is undefined; rotation falls
    back to 0.
    """
    d = np.asarray(goal, dtype=np.float64) - np.asarray(position, dtype=np.float64)
    if float(np.hypot(d[0], d[1])) < DEGENERATE_DIRECTION:
        return LocalFrame(position, 0.0)
    return LocalFrame(position, math.atan2(d[1], d[0]))


def _rotate(xy: np.ndarray, angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    xy = np.asarray(xy, dtype=np.float64)
    out = np.empty_like(xy)
    out[..., 0] = c * xy[..., 0] - s * xy[..., 1]
    out[..., 1] = s * xy[..., 0] + c * xy[..., 1]
    return out


def to_frame(frame: LocalFrame, xy: np.ndarray, is_vector: bool = False) -> np.ndarray:
    """Express world coordinates in ``frame``.

    Points are translated by -origin then rotated by -rotation; vectors
    (velocities) are only rotated. Supports (..., 2) batches.
    """
    xy = np.asarray(xy, dtype=np.float64)
    if not is_vector:
        xy = xy - frame.origin
    return _rotate(xy, -frame.rotation)


def from_frame(frame: LocalFrame, local: np.ndarray, is_vector: bool = False) -> np.ndarray:
    """Inverse of :func:`to_frame`. Supports (..., 2) batches."""
    out = _rotate(np.asarray(local, dtype=np.float64), frame.rotation)
    if not is_vector:
        out = out + frame.origin
    return out


def clamp_speed(v_hat: np.ndarray, v_max: float) -> np.ndarray:
    """Scale a velocity command down to the speed limit if it exceeds it.

    Zero vectors pass through untouched. Supports (..., 2) batches.
    """
    if v_max <= 0:
        raise ValueError(f"v_max must be positive, got {v_max}")
    v_hat = np.asarray(v_hat, dtype=np.float64)
    speed = norm(v_hat)
    if v_hat.ndim == 1:
        if speed <= v_max or speed == 0.0:
            return v_hat.copy()
        return v_hat * (v_max / speed)
    out = v_hat.copy()
    over = speed > v_max
    if np.any(over):
        out[over] *= (v_max / speed[over])[..., None]
    return out
