"""Permutation-invariant network over a variable-size neighbor set.

Ego and neighbor records pass through separate embedding stacks; the neighbor
embeddings (always including the all-zeros dummy record) are sum-pooled with
the ego embedding before a trunk produces the output head. Summation makes
the result independent of neighbor order and count.

The same topology serves three roles: expert policy (unaligned, 2D output),
RL policy mean (goal-aligned, 2D output) and value function (scalar output).
"""

from __future__ import annotations

import math

import numpy as np

from kdnav.nn.mlp import MlpStack

NEIGHBOR_DIM = 4  # [dpx, dpy, dvx, dvy]
EGO_DIM_ALIGNED = 3  # [goal distance, vx, vy]
EGO_DIM_UNALIGNED = 4  # [goal dx, goal dy, vx, vy]

LOG_STD_INIT = math.log(0.5)
LOG_2PI = math.log(2.0 * math.pi)


def _segment_sum(values: np.ndarray, counts: np.ndarray, out_dim: int) -> np.ndarray:
    out = np.zeros((len(counts), out_dim))
    if values.shape[0]:
        offsets = np.zeros(len(counts), dtype=np.int64)
        np.cumsum(counts[:-1], out=offsets[1:])
        nz = counts > 0
        out[nz] = np.add.reduceat(values, offsets[nz], axis=0)
    return out


class SetNet:
    def __init__(self, ego_dim: int, out_dim: int, hidden: int = 64,
                 embed_dim: int = 64, seed: int = 0):
        rng = np.random.default_rng(seed)
        self.ego_dim = ego_dim
        self.out_dim = out_dim
        self.hidden = hidden
        self.embed_dim = embed_dim
        self.seed = seed
        self.neighbor_embed = MlpStack([NEIGHBOR_DIM, hidden, embed_dim], rng)
        self.ego_embed = MlpStack([ego_dim, hidden, embed_dim], rng)
        self.trunk = MlpStack([embed_dim, hidden, out_dim], rng)

    @property
    def aligned(self) -> bool:
        return self.ego_dim == EGO_DIM_ALIGNED

    def forward_batch(self, ego: np.ndarray, neighbors: np.ndarray,
                      counts: np.ndarray):
        """Batched forward pass.

        ``ego`` is (B, ego_dim); ``neighbors`` holds the concatenated real
        neighbor records (T, 4) grouped per batch row by ``counts`` (B,).
        The dummy record's embedding is added internally, so callers pass
        real neighbors only. Returns (output (B, out_dim), cache).
        """
        ego_out, ego_cache = self.ego_embed.forward(ego)
        dummy_out, dummy_cache = self.neighbor_embed.forward(np.zeros((1, NEIGHBOR_DIM)))
        if neighbors.shape[0]:
            nei_out, nei_cache = self.neighbor_embed.forward(neighbors)
        else:
            nei_out, nei_cache = np.empty((0, self.embed_dim)), None
        pooled = ego_out + dummy_out + _segment_sum(nei_out, counts, self.embed_dim)
        out, trunk_cache = self.trunk.forward(pooled)
        return out, (ego_cache, dummy_cache, nei_cache, trunk_cache, counts)

    def backward_batch(self, cache, dout: np.ndarray, grads: "SetNetGrads"):
        """Accumulate exact gradients of a scalar loss given d(loss)/d(output)."""
        ego_cache, dummy_cache, nei_cache, trunk_cache, counts = cache
        dpooled = self.trunk.backward(trunk_cache, dout, grads.trunk)
        self.ego_embed.backward(ego_cache, dpooled, grads.ego)
        self.neighbor_embed.backward(dummy_cache, dpooled.sum(axis=0, keepdims=True),
                                     grads.neighbor)
        if nei_cache is not None:
            self.neighbor_embed.backward(nei_cache, np.repeat(dpooled, counts, axis=0),
                                         grads.neighbor)

    def params(self):
        return (self.neighbor_embed.params() + self.ego_embed.params()
                + self.trunk.params())

    def zero_grads(self) -> "SetNetGrads":
        return SetNetGrads(self.neighbor_embed.zero_grads(),
                           self.ego_embed.zero_grads(),
                           self.trunk.zero_grads())

    def arch(self) -> dict:
        return {"ego_dim": self.ego_dim, "out_dim": self.out_dim,
                "hidden": self.hidden, "embed_dim": self.embed_dim,
                "seed": self.seed}

    def state_dict(self) -> dict:
        out = {}
        for name, stack in (("neighbor_embed", self.neighbor_embed),
                            ("ego_embed", self.ego_embed),
                            ("trunk", self.trunk)):
            for k in range(stack.n_layers):
                out[f"{name}.w{k}"] = stack.weights[k]
                out[f"{name}.b{k}"] = stack.biases[k]
        return out

    def load_state_dict(self, d: dict):
        for name, stack in (("neighbor_embed", self.neighbor_embed),
                            ("ego_embed", self.ego_embed),
                            ("trunk", self.trunk)):
            for k in range(stack.n_layers):
                stack.weights[k][:] = d[f"{name}.w{k}"]
                stack.biases[k][:] = d[f"{name}.b{k}"]

    @classmethod
    def from_arch(cls, arch: dict) -> "SetNet":
        return cls(arch["ego_dim"], arch["out_dim"], arch["hidden"],
                   arch["embed_dim"], arch.get("seed", 0))


class SetNetGrads:
    def __init__(self, neighbor, ego, trunk):
        self.neighbor = neighbor
        self.ego = ego
        self.trunk = trunk

    def params(self):
        return self.neighbor.params() + self.ego.params() + self.trunk.params()


def make_policy_net(aligned: bool, hidden: int = 64, embed_dim: int = 64,
                    seed: int = 0) -> SetNet:
    ego_dim = EGO_DIM_ALIGNED if aligned else EGO_DIM_UNALIGNED
    return SetNet(ego_dim, 2, hidden, embed_dim, seed)


def make_value_net(aligned: bool, hidden: int = 64, embed_dim: int = 64,
                   seed: int = 0) -> SetNet:
    ego_dim = EGO_DIM_ALIGNED if aligned else EGO_DIM_UNALIGNED
    return SetNet(ego_dim, 1, hidden, embed_dim, seed)


def forward(net: SetNet, obs):
    """Evaluate the net on a single observation.

    Raises if the observation's frame mode does not match the net's ego input.
    """
    if bool(obs.aligned) != net.aligned:
        raise ValueError(
            f"observation mode (aligned={obs.aligned}) does not match "
            f"net ego input width {net.ego_dim}")
    ego = obs.ego_input()[None, :]
    real = obs.neighbors[1:]  # the net adds the dummy embedding itself
    counts = np.array([real.shape[0]], dtype=np.int32)
    out, _ = net.forward_batch(ego, real, counts)
    if net.out_dim == 1:
        return float(out[0, 0])
    return out[0]


class GaussianPolicy:
    """Diagonal Gaussian over 2D actions: state-dependent mean, global std."""

    def __init__(self, mean_net: SetNet, log_std_init: float = LOG_STD_INIT):
        self.net = mean_net
        self.log_std = np.full(2, float(log_std_init))

    @property
    def std(self) -> np.ndarray:
        return np.exp(self.log_std)

    def sample_batch(self, mu: np.ndarray, rng: np.random.Generator):
        eps = rng.standard_normal(mu.shape)
        actions = mu + self.std * eps
        return actions, self.log_prob(mu, actions)

    def log_prob(self, mu: np.ndarray, actions: np.ndarray) -> np.ndarray:
        z = (actions - mu) / self.std
        return np.sum(-0.5 * z ** 2 - self.log_std - 0.5 * LOG_2PI, axis=-1)

    def entropy(self) -> float:
        # independent of the observation: the std is a global parameter
        return float(np.sum(self.log_std + 0.5 * (1.0 + LOG_2PI)))

    def params(self):
        return self.net.params() + [self.log_std]


def sample_action(policy: GaussianPolicy, obs, rng: np.random.Generator):
    """Draw one action for one observation; returns (action, log_prob)."""
    mu = forward(policy.net, obs)
    actions, log_probs = policy.sample_batch(mu[None, :], rng)
    return actions[0], float(log_probs[0])
