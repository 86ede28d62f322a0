"""Stage 2 driver: alternate rollout collection, GAE, and PPO updates.

Training runs until a transition budget is exhausted, periodically
evaluating the deterministic (mean-action) policy on pinned scenarios and
retaining the checkpoint with the best evaluation success rate. A columnar
metrics log captures one row per update.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

from kdnav.nn.checkpoint import load_checkpoint, save_checkpoint
from kdnav.nn.optim import Adam
from kdnav.nn.setnet import GaussianPolicy, SetNet, make_policy_net, make_value_net
from kdnav.rl.ppo import PPODivergence, ppo_update
from kdnav.rl.reward import RewardConfig
from kdnav.rl.rollout import collect_rollouts
from kdnav.sim.scenario import KINDS, ScenarioConfig, generate_scenario
from kdnav.sim.world import EpisodeConfig, Status, run_episode

log = logging.getLogger(__name__)

METRICS_COLUMNS = ("update", "steps", "mean_episode_reward", "success_rate",
                   "policy_loss", "value_loss", "entropy", "clip_fraction",
                   "approx_kl", "log_std0", "log_std1", "eval_success")


@dataclass
class TrainConfig:
    total_steps: int = 5_000_000
    n_workers: int = 8
    steps_per_worker: int = 2048
    gamma: float = 0.9
    lam: float = 0.95
    clip_eps: float = 0.2
    entropy_beta: float = 0.1
    lr: float = 1e-4
    ppo_epochs: int = 4
    minibatch: int = 1024
    seed: int = 0
    hidden: int = 64
    embed_dim: int = 64
    log_std_init: float = math.log(0.5)
    eval_every: int = 10       # updates between deterministic evaluations
    eval_episodes: int = 6
    eval_seed: int = 9090
    reward: RewardConfig = field(default_factory=RewardConfig)
    episode: EpisodeConfig = field(default_factory=EpisodeConfig)
    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["scenario"]["n_agents"] = self.scenario.n_agents
        return d


class MeanActionPolicy:
    """Deterministic wrapper driving simulation with the policy mean."""

    aligned = True

    def __init__(self, net: SetNet):
        self.net = net

    def act_batch(self, batch) -> np.ndarray:
        out, _ = self.net.forward_batch(batch.ego, batch.neighbors, batch.counts)
        return out

    def __call__(self, obs, state=None) -> np.ndarray:
        from kdnav.nn.setnet import forward
        return forward(self.net, obs)


def save_policy_bundle(path, policy: GaussianPolicy, value_net: SetNet,
                       meta: dict):
    params = {}
    for k, v in policy.net.state_dict().items():
        params[f"policy.{k}"] = v
    params["log_std"] = policy.log_std
    for k, v in value_net.state_dict().items():
        params[f"value.{k}"] = v
    save_checkpoint(path, params, {"kind": "policy_bundle",
                                   "policy_arch": policy.net.arch(),
                                   "value_arch": value_net.arch(), **meta})


def load_policy_bundle(path):
    params, meta = load_checkpoint(path)
    if meta.get("kind") != "policy_bundle":
        raise ValueError(f"{path} is not a policy bundle checkpoint")
    policy_net = SetNet.from_arch(meta["policy_arch"])
    policy_net.load_state_dict(
        {k[len("policy."):]: v for k, v in params.items()
         if k.startswith("policy.")})
    policy = GaussianPolicy(policy_net)
    policy.log_std[:] = params["log_std"]
    value_net = SetNet.from_arch(meta["value_arch"])
    value_net.load_state_dict(
        {k[len("value."):]: v for k, v in params.items()
         if k.startswith("value.")})
    extra = {k: v for k, v in meta.items()
             if k not in ("kind", "policy_arch", "value_arch")}
    return policy, value_net, extra


def evaluate_policy(net: SetNet, config: TrainConfig, n_episodes: int,
                    seed: int) -> float:
    """Mean success rate of the deterministic policy on pinned scenarios."""
    driver = MeanActionPolicy(net)
    total = 0.0
    for j in range(n_episodes):
        rng = np.random.default_rng(np.random.SeedSequence((seed, j)))
        kind = KINDS[j % len(KINDS)]
        scenario = generate_scenario(kind, rng, config.scenario)
        trace = run_episode(driver, scenario, config.episode)
        total += float(np.mean(trace.final_status == Status.ARRIVED))
    return total / n_episodes


def train(config: TrainConfig, experts, out_dir) -> dict:
    """Full reinforcement stage; returns a summary with checkpoint paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(config.seed)

    policy = GaussianPolicy(
        make_policy_net(aligned=True, hidden=config.hidden,
                        embed_dim=config.embed_dim,
                        seed=int(rng.integers(2 ** 31))),
        log_std_init=config.log_std_init)
    value_net = make_value_net(aligned=True, hidden=config.hidden,
                               embed_dim=config.embed_dim,
                               seed=int(rng.integers(2 ** 31)))
    policy_opt = Adam(policy.net.params() + [policy.log_std], lr=config.lr)
    value_opt = Adam(value_net.params(), lr=config.lr)

    metrics_path = out_dir / "metrics.log"
    with open(metrics_path, "w") as fh:
        fh.write("# kdnav-metrics v1\n")
        fh.write("# " + " ".join(METRICS_COLUMNS) + "\n")

    collect_seq = np.random.SeedSequence((config.seed, 0xC011EC7))
    steps = 0
    update = 0
    best_eval = -1.0
    best_path = out_dir / "policy_best.npz"
    last_path = out_dir / "policy_last.npz"
    eval_success = float("nan")

    def checkpoint(path, tag):
        save_policy_bundle(path, policy, value_net,
                           {"tag": tag, "update": update, "steps": steps,
                            "eval_success": eval_success,
                            "config": config.to_dict()})

    while steps < config.total_steps:
        children = collect_seq.spawn(1)[0]
        buffer = collect_rollouts(policy, value_net, experts, config.reward,
                                  config.episode, config.scenario,
                                  config.n_workers, config.steps_per_worker,
                                  children)
        buffer.compute_advantages(config.gamma, config.lam)
        steps += len(buffer)
        update += 1

        try:
            stats = ppo_update(buffer, policy, value_net, policy_opt,
                               value_opt, rng, clip_eps=config.clip_eps,
                               entropy_beta=config.entropy_beta,
                               epochs=config.ppo_epochs,
                               minibatch=config.minibatch)
        except PPODivergence:
            checkpoint(out_dir / "policy_diverged.npz", "diverged")
            raise

        if buffer.episodes:
            ep_success = float(np.mean([e["success_rate"] for e in buffer.episodes]))
        else:
            ep_success = float("nan")
        mean_reward = float(buffer.rewards.sum() /
                            max(1, len(buffer.stream_offsets) - 1))

        if config.eval_every and update % config.eval_every == 0:
            eval_success = evaluate_policy(policy.net, config,
                                           config.eval_episodes,
                                           config.eval_seed)
            if eval_success >= best_eval:
                best_eval = eval_success
                checkpoint(best_path, "best")

        row = (update, steps, mean_reward, ep_success, stats["policy_loss"],
               stats["value_loss"], stats["entropy"], stats["clip_fraction"],
               stats["approx_kl"], policy.log_std[0], policy.log_std[1],
               eval_success)
        with open(metrics_path, "a") as fh:
            fh.write(" ".join(f"{x:.6g}" if isinstance(x, float) else str(x)
                              for x in row) + "\n")
        if update % 10 == 0:
            log.info("update %d steps %d reward/ep %.3f success %.3f "
                     "eval %.3f", update, steps, mean_reward, ep_success,
                     eval_success)

    eval_success = evaluate_policy(policy.net, config, config.eval_episodes,
                                   config.eval_seed)
    if eval_success >= best_eval:
        best_eval = eval_success
        checkpoint(best_path, "best")
    checkpoint(last_path, "last")

    return {"updates": update, "steps": steps, "best_eval": best_eval,
            "final_eval": eval_success, "best_checkpoint": str(best_path),
            "last_checkpoint": str(last_path),
            "metrics_log": str(metrics_path)}
