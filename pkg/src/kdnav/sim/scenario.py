"""Randomized benchmark scenarios: circle crossing, corridor, square crossing.

Placement rules:
  * circle — agents roughly on the circumference (angular and radial jitter
    around evenly spaced base angles), goals near their antipodes;
  * corridor — starts on the two ends, goals at a random position on the
    opposite end; the corridor is horizontal or vertical at random;
  * square — starts on all four sides of a rectangle, goals at a random
    position across the opposite side.

All geometry is drawn fresh per episode from the configured ranges.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, asdict

import numpy as np
import yaml

KINDS = ("circle", "corridor", "square")


class ScenarioError(RuntimeError):
    """Raised when agents cannot be placed with the required separation."""


@dataclass
class ScenarioConfig:
    n_agents: int | None = None  # None: drawn uniformly from agent_count_range
    agent_count_range: tuple[int, int] = (6, 20)
    agent_radius: float = 0.1
    v_max: float = 2.5
    v_pref: float = 1.3
    circle_radius_range: tuple[float, float] = (4.0, 6.0)
    side_range: tuple[float, float] = (8.0, 12.0)
    angle_jitter_deg: float = 5.0
    radial_jitter: float = 0.2
    min_separation_radii: float = 3.0  # in units of agent radius
    max_retries: int = 100


@dataclass
class ScenarioSpec:
    kind: str
    seed: int | None
    n_agents: int
    geometry: dict
    starts: np.ndarray
    goals: np.ndarray
    agent_radius: float = 0.1
    v_max: float = 2.5
    v_pref: float = 1.3

    def __post_init__(self):
        self.starts = np.asarray(self.starts, dtype=np.float64)
        self.goals = np.asarray(self.goals, dtype=np.float64)

    def to_yaml(self, path):
        doc = {
            "kind": self.kind,
            "seed": self.seed,
            "n_agents": self.n_agents,
            "geometry": self.geometry,
            "agent_radius": self.agent_radius,
            "v_max": self.v_max,
            "v_pref": self.v_pref,
            "starts": self.starts.tolist(),
            "goals": self.goals.tolist(),
        }
        with open(path, "w") as fh:
            yaml.safe_dump(doc, fh, sort_keys=False)

    @classmethod
    def from_yaml(cls, path) -> "ScenarioSpec":
        with open(path) as fh:
            doc = yaml.safe_load(fh)
        return cls(kind=doc["kind"], seed=doc.get("seed"),
                   n_agents=doc["n_agents"], geometry=doc["geometry"],
                   starts=np.array(doc["starts"]), goals=np.array(doc["goals"]),
                   agent_radius=doc.get("agent_radius", 0.1),
                   v_max=doc.get("v_max", 2.5), v_pref=doc.get("v_pref", 1.3))


def _min_separation_ok(starts: np.ndarray, min_sep: float) -> bool:
    if len(starts) < 2:
        return True
    diff = starts[:, None, :] - starts[None, :, :]
    d2 = diff[:, :, 0] ** 2 + diff[:, :, 1] ** 2
    np.fill_diagonal(d2, np.inf)
    return bool(d2.min() >= min_sep ** 2)


def _circle(rng: np.random.Generator, n: int, cfg: ScenarioConfig):
    radius = rng.uniform(*cfg.circle_radius_range)
    phase = rng.uniform(0.0, 2.0 * math.pi)
    base = phase + 2.0 * math.pi * np.arange(n) / n
    jit = math.radians(cfg.angle_jitter_deg)

    def ring_points(angles):
        a = angles + rng.uniform(-jit, jit, size=n)
        r = radius + rng.uniform(-cfg.radial_jitter, cfg.radial_jitter, size=n)
        return np.column_stack([r * np.cos(a), r * np.sin(a)])

    starts = ring_points(base)
    goals = ring_points(base + math.pi)
    return starts, goals, {"radius": float(radius)}


def _corridor(rng: np.random.Generator, n: int, cfg: ScenarioConfig):
    width = rng.uniform(*cfg.side_range)
    height = rng.uniform(*cfg.side_range)
    orientation = "horizontal" if rng.integers(2) == 0 else "vertical"
    side = rng.integers(2, size=n)  # 0: negative end, 1: positive end
    sx = np.where(side == 0, -width / 2.0, width / 2.0)
    sy = rng.uniform(-height / 2.0, height / 2.0, size=n)
    gx = -sx
    gy = rng.uniform(-height / 2.0, height / 2.0, size=n)
    starts = np.column_stack([sx, sy])
    goals = np.column_stack([gx, gy])
    if orientation == "vertical":
        starts = starts[:, ::-1].copy()
        goals = goals[:, ::-1].copy()
    return starts, goals, {"width": float(width), "height": float(height),
                           "orientation": orientation}


def _square(rng: np.random.Generator, n: int, cfg: ScenarioConfig):
    width = rng.uniform(*cfg.side_range)
    height = rng.uniform(*cfg.side_range)
    side = rng.integers(4, size=n)  # 0 left, 1 right, 2 bottom, 3 top
    starts = np.empty((n, 2))
    goals = np.empty((n, 2))
    for i in range(n):
        u = rng.uniform(-0.5, 0.5)
        v = rng.uniform(-0.5, 0.5)
        if side[i] == 0:
            starts[i] = (-width / 2.0, u * height)
            goals[i] = (width / 2.0, v * height)
        elif side[i] == 1:
            starts[i] = (width / 2.0, u * height)
            goals[i] = (-width / 2.0, v * height)
        elif side[i] == 2:
            starts[i] = (u * width, -height / 2.0)
            goals[i] = (v * width, height / 2.0)
        else:
            starts[i] = (u * width, height / 2.0)
            goals[i] = (v * width, -height / 2.0)
    return starts, goals, {"width": float(width), "height": float(height)}


_BUILDERS = {"circle": _circle, "corridor": _corridor, "square": _square}


def generate_scenario(kind: str, rng: np.random.Generator | int,
                      config: ScenarioConfig | None = None) -> ScenarioSpec:
    """Draw a randomized scenario; raises ScenarioError if placement fails.

    ``rng`` may be a Generator or an integer seed (recorded in the spec).
    """
    if kind not in KINDS:
        raise ValueError(f"unknown scenario kind {kind!r}; expected one of {KINDS}")
    config = config or ScenarioConfig()
    seed = None
    if isinstance(rng, (int, np.integer)):
        seed = int(rng)
        rng = np.random.default_rng(seed)

    n = config.n_agents
    if n is None:
        lo, hi = config.agent_count_range
        n = int(rng.integers(lo, hi + 1))

    min_sep = config.min_separation_radii * config.agent_radius
    for _ in range(config.max_retries):
        starts, goals, geometry = _BUILDERS[kind](rng, n, config)
        if _min_separation_ok(starts, min_sep):
            return ScenarioSpec(kind=kind, seed=seed, n_agents=n,
                                geometry=geometry, starts=starts, goals=goals,
                                agent_radius=config.agent_radius,
                                v_max=config.v_max, v_pref=config.v_pref)
    raise ScenarioError(
        f"could not place {n} agents in a {kind} scenario with minimum "
        f"start separation {min_sep:.3f} m after {config.max_retries} retries")
