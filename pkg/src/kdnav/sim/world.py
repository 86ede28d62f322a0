"""World state and the fixed-substep episode loop.

Agents are holonomic disks driven by velocity commands issued once per
control period and integrated at a finer simulation step. Collided agents
freeze in place and remain obstacles; arrived agents are removed from every
later neighbor set. Both transitions are absorbing.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from kdnav import _kernels
from kdnav.core import clamp_speed, from_frame, LocalFrame
from kdnav.sim.observation import ObservationBatch, build_observation_batch
from kdnav.sim.scenario import ScenarioSpec


class Status(enum.IntEnum):
    ACTIVE = 0
    ARRIVED = 1
    COLLIDED = 2


@dataclass
class EpisodeConfig:
    dt_sim: float = 0.04
    dt_control: float = 0.12
    time_limit: float = 120.0
    sense_radius: float = 4.0
    arrival_threshold: float | None = None   # None: each agent's radius
    collision_threshold: float | None = None  # None: sum of the pair's radii

    def __post_init__(self):
        ratio = self.dt_control / self.dt_sim
        if abs(ratio - round(ratio)) > 1e-9 or round(ratio) < 1:
            raise ValueError(
                f"dt_control ({self.dt_control}) must be an integer multiple "
                f"of dt_sim ({self.dt_sim})")
        if self.time_limit <= 0:
            raise ValueError("time_limit must be positive")

    @property
    def n_substeps(self) -> int:
        return int(round(self.dt_control / self.dt_sim))

    @property
    def max_control_steps(self) -> int:
        return int(math.floor(self.time_limit / self.dt_control + 1e-9))


@dataclass
class AgentState:
    id: int
    position: np.ndarray
    velocity: np.ndarray
    goal: np.ndarray
    radius: float
    v_max: float
    v_pref: float
    status: Status


@dataclass
class StepResult:
    t: float                 # world time after the step
    events: np.ndarray       # (M, 3) int32: agent, new status, substep index
    arrived: list[int]
    collided: list[int]


class World:
    def __init__(self, scenario: ScenarioSpec, config: EpisodeConfig | None = None):
        self.scenario = scenario
        self.config = config or EpisodeConfig()
        n = scenario.n_agents
        self.n_agents = n
        self.positions = scenario.starts.copy()
        self.velocities = np.zeros((n, 2))
        self.goals = scenario.goals.copy()
        self.radii = np.full(n, scenario.agent_radius)
        self.v_max = np.full(n, scenario.v_max)
        self.v_pref = np.full(n, scenario.v_pref)
        self.status = np.zeros(n, dtype=np.int8)
        self.t = 0.0
        self.step_count = 0

    # -- queries ------------------------------------------------------------

    def active_ids(self) -> np.ndarray:
        return np.nonzero(self.status == Status.ACTIVE)[0]

    def agent(self, i: int) -> AgentState:
        return AgentState(id=i, position=self.positions[i].copy(),
                          velocity=self.velocities[i].copy(),
                          goal=self.goals[i].copy(), radius=float(self.radii[i]),
                          v_max=float(self.v_max[i]), v_pref=float(self.v_pref[i]),
                          status=Status(int(self.status[i])))

    def census(self) -> tuple[int, int, int]:
        return (int(np.sum(self.status == Status.ACTIVE)),
                int(np.sum(self.status == Status.ARRIVED)),
                int(np.sum(self.status == Status.COLLIDED)))

    def arrival_thresholds(self) -> np.ndarray:
        if self.config.arrival_threshold is None:
            return self.radii
        return np.full(self.n_agents, self.config.arrival_threshold)

    # -- stepping -----------------------------------------------------------

    def step(self, actions) -> StepResult:
        """Apply one control window.

        ``actions`` maps agent id to a world-frame velocity command, or is an
        (N, 2) array. Every active agent must have an action; commands are
        clamped to each agent's speed limit before integration.
        """
        act_ids = self.active_ids()
        cmd = np.zeros((self.n_agents, 2))
        if isinstance(actions, dict):
            for i in act_ids:
                if int(i) not in actions:
                    raise KeyError(f"no action provided for active agent {int(i)}")
                cmd[i] = actions[int(i)]
        else:
            cmd[act_ids] = np.asarray(actions)[act_ids]

        for i in act_ids:
            cmd[i] = clamp_speed(cmd[i], float(self.v_max[i]))
        return self._integrate(cmd)

    def step_from_rows(self, ids, clamped_actions) -> StepResult:
        """Hot-path variant: pre-clamped world-frame actions, one row per id."""
        cmd = np.zeros((self.n_agents, 2))
        cmd[ids] = clamped_actions
        return self._integrate(cmd)

    def _integrate(self, cmd: np.ndarray) -> StepResult:
        events = _kernels.integrate_window(
            self.positions, self.velocities, self.goals, self.radii,
            self.status, cmd, self.config.dt_sim, self.config.n_substeps,
            self.arrival_thresholds(),
            -1.0 if self.config.collision_threshold is None
            else float(self.config.collision_threshold))
        self.step_count += 1
        self.t = self.step_count * self.config.dt_control
        arrived = [int(a) for a, s, _ in events if s == Status.ARRIVED]
        collided = [int(a) for a, s, _ in events if s == Status.COLLIDED]
        return StepResult(t=self.t, events=events, arrived=arrived,
                          collided=collided)


@dataclass
class EpisodeTrace:
    """Per-agent trajectories at control-step resolution.

    For each agent, row k of its arrays describes the k-th control window in
    which it acted: the position at the window's end, the applied (clamped)
    velocity, the raw commanded action, and the status after the window.
    """

    scenario: ScenarioSpec
    config: EpisodeConfig
    steps: list[np.ndarray]       # per agent: control-step indices
    positions: list[np.ndarray]   # per agent: (M, 2) end-of-window positions
    velocities: list[np.ndarray]  # per agent: (M, 2) applied velocities
    actions: list[np.ndarray]     # per agent: (M, 2) raw commands (world frame)
    statuses: list[np.ndarray]    # per agent: (M,) status after the window
    final_status: np.ndarray      # (N,)
    census: np.ndarray            # (T, 3) active/arrived/collided per step
    n_control_steps: int
    duration: float

    @property
    def n_agents(self) -> int:
        return self.scenario.n_agents

    def path(self, i: int) -> np.ndarray:
        """Start position followed by end-of-window positions while acting."""
        return np.vstack([self.scenario.starts[i][None, :], self.positions[i]])


def _policy_for(policies, agent_id: int):
    if isinstance(policies, dict):
        return policies[agent_id]
    return policies


def run_episode(policies, scenario: ScenarioSpec,
                config: EpisodeConfig | None = None) -> EpisodeTrace:
    """Run one episode until all non-collided agents arrive or time runs out.

    ``policies`` is a single policy shared by all agents or a map from agent
    id to policy. A policy is a callable ``policy(obs, state) -> action`` in
    the observation's frame; it may expose ``aligned`` (observation mode,
    default False) and the batch fast paths ``act_batch(obs_batch)`` or
    ``act_world(world, ids)`` (world-frame actions, used by the ORCA planner).
    """
    config = config or EpisodeConfig()
    world = World(scenario, config)
    n = world.n_agents

    rec_steps = [[] for _ in range(n)]
    rec_pos = [[] for _ in range(n)]
    rec_vel = [[] for _ in range(n)]
    rec_act = [[] for _ in range(n)]
    rec_status = [[] for _ in range(n)]
    census_rows = []

    groups: dict[int, tuple[object, list[int]]] = {}

    while world.t < config.time_limit - 1e-9 and len(world.active_ids()):
        act_ids = world.active_ids()
        groups.clear()
        for i in act_ids:
            pol = _policy_for(policies, int(i))
            key = id(pol)
            if key not in groups:
                groups[key] = (pol, [])
            groups[key][1].append(int(i))

        actions = np.zeros((n, 2))
        batches: dict[bool, ObservationBatch] = {}
        for pol, ids in groups.values():
            aligned = bool(getattr(pol, "aligned", False))
            if hasattr(pol, "act_world"):
                actions[ids] = pol.act_world(world, np.array(ids))
                continue
            if aligned not in batches:
                batches[aligned] = build_observation_batch(world, aligned=aligned)
            batch = batches[aligned]
            index_of = {int(a): k for k, a in enumerate(batch.ids)}
            ks = [index_of[i] for i in ids]
            if hasattr(pol, "act_batch"):
                sub = ObservationBatch(
                    ids=batch.ids[ks], ego=batch.ego[ks],
                    neighbors=_subset_rows(batch, ks),
                    counts=batch.counts[ks], rotations=batch.rotations[ks],
                    aligned=batch.aligned)
                out = pol.act_batch(sub)
            else:
                out = np.empty((len(ids), 2))
                for row, (i, k) in enumerate(zip(ids, ks)):
                    obs = batch.observation(k, world.positions[i].copy())
                    out[row] = pol(obs, world.agent(i))
            if aligned:
                rot = batch.rotations[ks]
                c, s = np.cos(rot), np.sin(rot)
                world_out = np.empty_like(out)
                world_out[:, 0] = c * out[:, 0] - s * out[:, 1]
                world_out[:, 1] = s * out[:, 0] + c * out[:, 1]
                out = world_out
            actions[ids] = out

        pre_status = world.status.copy()
        world.step(actions)
        k = world.step_count - 1
        for i in np.nonzero(pre_status == Status.ACTIVE)[0]:
            rec_steps[i].append(k)
            rec_pos[i].append(world.positions[i].copy())
            rec_vel[i].append(clamp_speed(actions[i], float(world.v_max[i])))
            rec_act[i].append(actions[i].copy())
            rec_status[i].append(int(world.status[i]))
        census_rows.append(world.census())

    return EpisodeTrace(
        scenario=scenario, config=config,
        steps=[np.array(s, dtype=np.int64) for s in rec_steps],
        positions=[np.array(p).reshape(-1, 2) for p in rec_pos],
        velocities=[np.array(v).reshape(-1, 2) for v in rec_vel],
        actions=[np.array(a).reshape(-1, 2) for a in rec_act],
        statuses=[np.array(s, dtype=np.int8) for s in rec_status],
        final_status=world.status.copy(),
        census=np.array(census_rows, dtype=np.int64).reshape(-1, 3),
        n_control_steps=world.step_count,
        duration=world.t)


def _subset_rows(batch: ObservationBatch, ks) -> np.ndarray:
    off = batch.offsets()
    parts = [batch.neighbors[off[k]:off[k + 1]] for k in ks]
    if parts:
        return np.vstack(parts) if any(p.shape[0] for p in parts) else np.empty((0, 4))
    return np.empty((0, 4))
