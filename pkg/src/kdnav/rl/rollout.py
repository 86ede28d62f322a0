"""Synchronous distributed rollout collection.

Each worker owns a private world and read-only snapshots of the policy,
value and expert parameters. Workers run randomized episodes (scenario kind
drawn uniformly, 6 to 20 agents) until they hit their transition budget,
bootstrapping truncated streams with the value estimate of the next
observation. Results merge at a synchronization barrier in worker order, so
collection is deterministic under fixed seeds regardless of scheduling.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from kdnav.core import clamp_speed
from kdnav.rl.gae import gae
from kdnav.rl.reward import RewardConfig, shaping_rewards_batch
from kdnav.sim.observation import aligned_view, build_observation_batch
from kdnav.sim.scenario import KINDS, ScenarioConfig, generate_scenario
from kdnav.sim.world import EpisodeConfig, Status, World


@dataclass
class RolloutBuffer:
    ego: np.ndarray            # (M, 3) aligned ego inputs
    neighbors: np.ndarray      # (T, 4) aligned neighbor records
    counts: np.ndarray         # (M,)
    actions: np.ndarray        # (M, 2) raw actions in the aligned frame
    log_probs: np.ndarray      # (M,)
    rewards: np.ndarray        # (M,)
    values: np.ndarray         # (M,)
    dones: np.ndarray          # (M,) bool
    agent_ids: np.ndarray      # (M,)
    episode_ids: np.ndarray    # (M,)
    stream_offsets: np.ndarray     # (S+1,) transitions grouped by stream
    bootstrap_values: np.ndarray   # (S,)
    episodes: list = field(default_factory=list)  # completed-episode stats
    advantages: np.ndarray | None = None
    returns: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self.rewards)

    def neighbor_offsets(self) -> np.ndarray:
        out = np.zeros(len(self.counts) + 1, dtype=np.int64)
        np.cumsum(self.counts, out=out[1:])
        return out

    def compute_advantages(self, gamma: float, lam: float):
        """GAE per stream, then per-update normalization of advantages."""
        adv = np.empty(len(self))
        ret = np.empty(len(self))
        for s in range(len(self.stream_offsets) - 1):
            a, b = self.stream_offsets[s], self.stream_offsets[s + 1]
            vals = np.append(self.values[a:b], self.bootstrap_values[s])
            adv[a:b], ret[a:b] = gae(self.rewards[a:b], vals,
                                     self.dones[a:b], gamma, lam)
        mean = adv.mean()
        std = adv.std()
        self.advantages = (adv - mean) / (std + 1e-8)
        self.returns = ret
        return self.advantages, self.returns


class _StreamAccum:
    __slots__ = ("ego", "rows", "counts", "actions", "log_probs", "rewards",
                 "values", "dones", "agent_id")

    def __init__(self, agent_id: int):
        self.agent_id = agent_id
        self.ego = []
        self.rows = []
        self.counts = []
        self.actions = []
        self.log_probs = []
        self.rewards = []
        self.values = []
        self.dones = []


def _expert_errors(experts, a_world: np.ndarray, batch_un) -> np.ndarray:
    """Expert-averaged distillation error per agent, in the unaligned frame."""
    err = np.zeros(len(a_world))
    for expert in experts:
        fe = expert.forward_arrays(batch_un.ego, batch_un.neighbors,
                                   batch_un.counts)
        err += np.hypot(a_world[:, 0] - fe[:, 0], a_world[:, 1] - fe[:, 1])
    return err / len(experts)


def collect_once(policy, value_net, experts, reward_cfg: RewardConfig,
                 episode_cfg: EpisodeConfig, scenario_cfg: ScenarioConfig,
                 rng: np.random.Generator, min_steps: int) -> dict:
    """Run episodes in-process until at least ``min_steps`` transitions."""
    streams: list[_StreamAccum] = []
    bootstraps: list[float] = []
    stream_episode: list[int] = []
    episodes = []
    total = 0
    episode_idx = 0
    need_experts = reward_cfg.mode == "kd" and reward_cfg.w_e > 0.0
    if need_experts and not experts:
        raise ValueError("distillation reward requires at least one expert")

    while total < min_steps:
        kind = KINDS[rng.integers(len(KINDS))]
        scenario = generate_scenario(kind, rng, scenario_cfg)
        world = World(scenario, episode_cfg)
        ep_streams = {int(i): _StreamAccum(int(i)) for i in range(world.n_agents)}
        truncated = False

        while world.t < episode_cfg.time_limit - 1e-9 and len(world.active_ids()):
            batch_un = build_observation_batch(world, aligned=False)
            batch_al = aligned_view(batch_un)
            ids = batch_al.ids
            off = batch_al.offsets()

            mu, _ = policy.net.forward_batch(batch_al.ego, batch_al.neighbors,
                                             batch_al.counts)
            actions_al, logps = policy.sample_batch(mu, rng)
            vals, _ = value_net.forward_batch(batch_al.ego, batch_al.neighbors,
                                              batch_al.counts)
            vals = vals[:, 0]

            c, s = np.cos(batch_al.rotations), np.sin(batch_al.rotations)
            a_world = np.empty_like(actions_al)
            a_world[:, 0] = c * actions_al[:, 0] - s * actions_al[:, 1]
            a_world[:, 1] = s * actions_al[:, 0] + c * actions_al[:, 1]

            if need_experts:
                behavior_err = _expert_errors(experts, a_world, batch_un)
            else:
                behavior_err = np.zeros(len(ids))

            v_applied = np.array([clamp_speed(a_world[k], float(world.v_max[i]))
                                  for k, i in enumerate(ids)])
            p_t = world.positions[ids].copy()
            goals = world.goals[ids]

            world.step_from_rows(ids, v_applied)
            p_next = world.positions[ids]
            status_now = world.status[ids]

            shaped = shaping_rewards_batch(reward_cfg, behavior_err, p_t,
                                           p_next, v_applied, goals)
            for k, i in enumerate(ids):
                st = ep_streams[int(i)]
                if status_now[k] == Status.ARRIVED:
                    r, done = reward_cfg.r_arrival, True
                elif status_now[k] == Status.COLLIDED:
                    r, done = reward_cfg.r_collision, True
                else:
                    r, done = float(shaped[k]), False
                st.ego.append(batch_al.ego[k])
                st.rows.append(batch_al.neighbors[off[k]:off[k + 1]])
                st.counts.append(int(batch_al.counts[k]))
                st.actions.append(actions_al[k])
                st.log_probs.append(float(logps[k]))
                st.rewards.append(r)
                st.values.append(float(vals[k]))
                st.dones.append(done)
            total += len(ids)
            if total >= min_steps:
                truncated = True
                break

        # bootstrap values for streams cut while their agent was still active
        boot = {}
        active = world.active_ids()
        if len(active):
            batch_un = build_observation_batch(world, aligned=False)
            batch_al = aligned_view(batch_un)
            vals, _ = value_net.forward_batch(batch_al.ego, batch_al.neighbors,
                                              batch_al.counts)
            boot = {int(i): float(vals[k, 0]) for k, i in enumerate(batch_al.ids)}

        for i in range(world.n_agents):
            st = ep_streams[i]
            if not st.rewards:
                continue
            streams.append(st)
            stream_episode.append(episode_idx)
            bootstraps.append(boot.get(i, 0.0))

        if not truncated:
            n = world.n_agents
            arrived = int(np.sum(world.status == Status.ARRIVED))
            collided = int(np.sum(world.status == Status.COLLIDED))
            episodes.append({"kind": kind, "n_agents": n,
                             "success_rate": arrived / n,
                             "collision_rate": collided / n,
                             "duration": world.t})
        episode_idx += 1

    # flatten streams in (episode, agent) order
    ego = np.vstack([e for st in streams for e in st.ego]).reshape(-1, 3)
    row_chunks = [r for st in streams for r in st.rows if r.shape[0]]
    neighbors = np.vstack(row_chunks) if row_chunks else np.empty((0, 4))
    counts = np.array([c for st in streams for c in st.counts], dtype=np.int32)
    actions = np.vstack([a for st in streams for a in st.actions]).reshape(-1, 2)
    log_probs = np.array([x for st in streams for x in st.log_probs])
    rewards = np.array([x for st in streams for x in st.rewards])
    values = np.array([x for st in streams for x in st.values])
    dones = np.array([x for st in streams for x in st.dones], dtype=bool)
    agent_ids = np.concatenate([np.full(len(st.rewards), st.agent_id,
                                        dtype=np.int32) for st in streams])
    episode_ids = np.concatenate([np.full(len(st.rewards), e, dtype=np.int32)
                                  for st, e in zip(streams, stream_episode)])
    lengths = np.array([len(st.rewards) for st in streams], dtype=np.int64)
    stream_offsets = np.zeros(len(streams) + 1, dtype=np.int64)
    np.cumsum(lengths, out=stream_offsets[1:])

    return {"ego": ego, "neighbors": neighbors, "counts": counts,
            "actions": actions, "log_probs": log_probs, "rewards": rewards,
            "values": values, "dones": dones, "agent_ids": agent_ids,
            "episode_ids": episode_ids, "stream_offsets": stream_offsets,
            "bootstrap_values": np.array(bootstraps), "episodes": episodes}


def _worker(payload) -> dict:
    (policy, value_net, experts, reward_cfg, episode_cfg, scenario_cfg,
     seed_seq, min_steps) = payload
    rng = np.random.default_rng(seed_seq)
    return collect_once(policy, value_net, experts, reward_cfg, episode_cfg,
                        scenario_cfg, rng, min_steps)


def _merge(parts: list[dict]) -> RolloutBuffer:
    episode_base = 0
    merged_eps = []
    for part in parts:
        part["episode_ids"] = part["episode_ids"] + episode_base
        episode_base = int(part["episode_ids"].max()) + 1 if len(part["episode_ids"]) else episode_base
        merged_eps.extend(part["episodes"])

    offsets = [parts[0]["stream_offsets"]]
    base = parts[0]["stream_offsets"][-1]
    for part in parts[1:]:
        offsets.append(part["stream_offsets"][1:] + base)
        base += part["stream_offsets"][-1]

    cat = lambda key: np.concatenate([p[key] for p in parts])
    vcat = lambda key: np.vstack([p[key] for p in parts])
    return RolloutBuffer(
        ego=vcat("ego"), neighbors=vcat("neighbors"), counts=cat("counts"),
        actions=vcat("actions"), log_probs=cat("log_probs"),
        rewards=cat("rewards"), values=cat("values"), dones=cat("dones"),
        agent_ids=cat("agent_ids"), episode_ids=cat("episode_ids"),
        stream_offsets=np.concatenate(offsets),
        bootstrap_values=cat("bootstrap_values"), episodes=merged_eps)


def collect_rollouts(policy, value_net, experts, reward_cfg: RewardConfig,
                     episode_cfg: EpisodeConfig, scenario_cfg: ScenarioConfig,
                     n_workers: int, steps_per_worker: int,
                     seed) -> RolloutBuffer:
    """Gather at least ``n_workers * steps_per_worker`` transitions.

    ``seed`` may be an int or a numpy SeedSequence; each worker derives an
    independent child stream from it. A failing worker is retried once with
    the same seed before the collection aborts.
    """
    seq = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    children = seq.spawn(n_workers)
    payloads = [(policy, value_net, experts, reward_cfg, episode_cfg,
                 scenario_cfg, children[w], steps_per_worker)
                for w in range(n_workers)]

    if n_workers <= 1:
        parts = [_worker(payloads[0])]
    else:
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            futures = [pool.submit(_worker, p) for p in payloads]
            parts = []
            for w, fut in enumerate(futures):
                try:
                    parts.append(fut.result())
                except Exception:
                    retry = pool.submit(_worker, payloads[w])
                    parts.append(retry.result())  # second failure propagates
    return _merge(parts)
