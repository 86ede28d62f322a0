"""Clipped-surrogate policy optimization over a merged rollout buffer.

Maximizes mean(min(ratio * A, clip(ratio, 1-eps, 1+eps) * A)) + beta * H
with the entropy bonus pushing the (observation-independent) log-std up, and
regresses the value network onto the GAE returns with squared loss. The
gradient of the surrogate flows through the Gaussian log-density into the
mean network and log-std; both are updated by their own Adam instances.
"""

from __future__ import annotations

import numpy as np

from kdnav.nn.optim import Adam
from kdnav.nn.setnet import GaussianPolicy, SetNet


class PPODivergence(RuntimeError):
    def __init__(self, message, stats=None):
        super().__init__(message)
        self.stats = stats or {}


def _gather_rows(neighbors, offsets, counts, sel):
    lengths = counts[sel].astype(np.int64)
    starts = offsets[sel]
    total = int(lengths.sum())
    if total == 0:
        return np.empty((0, 4)), lengths.astype(np.int32)
    rep_starts = np.repeat(starts, lengths)
    ends = np.cumsum(lengths)
    within = np.arange(total, dtype=np.int64) - np.repeat(ends - lengths, lengths)
    return neighbors[rep_starts + within], lengths.astype(np.int32)


def ppo_update(buffer, policy: GaussianPolicy, value_net: SetNet,
               policy_opt: Adam, value_opt: Adam, rng: np.random.Generator,
               clip_eps: float = 0.2, entropy_beta: float = 0.1,
               epochs: int = 4, minibatch: int = 1024) -> dict:
    """Run the clipped-surrogate epochs over shuffled minibatches.

    ``buffer.compute_advantages`` must have run. Returns aggregate stats;
    raises PPODivergence if any loss goes non-finite.
    """
    if buffer.advantages is None:
        raise ValueError("advantages not computed; call compute_advantages first")

    m = len(buffer)
    offsets = buffer.neighbor_offsets()
    adv = buffer.advantages
    ret = buffer.returns

    stats = {"policy_loss": 0.0, "value_loss": 0.0, "entropy": 0.0,
             "clip_fraction": 0.0, "approx_kl": 0.0}
    n_batches = 0

    for _ in range(epochs):
        order = rng.permutation(m)
        for start in range(0, m, minibatch):
            sel = order[start:start + minibatch]
            b = len(sel)
            rows, lengths = _gather_rows(buffer.neighbors, offsets,
                                         buffer.counts, sel)
            ego = buffer.ego[sel]
            actions = buffer.actions[sel]
            logp_old = buffer.log_probs[sel]
            a = adv[sel]

            mu, cache = policy.net.forward_batch(ego, rows, lengths)
            std = policy.std
            var = std ** 2
            z = (actions - mu) / std
            logp_new = np.sum(-0.5 * z ** 2 - policy.log_std
                              - 0.5 * np.log(2.0 * np.pi), axis=1)
            ratio = np.exp(logp_new - logp_old)

            unclipped = ratio * a
            clipped = np.clip(ratio, 1.0 - clip_eps, 1.0 + clip_eps) * a
            surrogate = float(np.mean(np.minimum(unclipped, clipped)))
            entropy = policy.entropy()
            objective = surrogate + entropy_beta * entropy
            if not np.isfinite(objective):
                raise PPODivergence("policy objective is not finite", stats)

            # d(objective)/d(ratio), then chain through the log-density
            take_unclipped = unclipped <= clipped
            inside = (ratio > 1.0 - clip_eps) & (ratio < 1.0 + clip_eps)
            dratio = np.where(take_unclipped, a, np.where(inside, a, 0.0)) / b
            dlogp = dratio * ratio  # (B,)

            dmu = dlogp[:, None] * (actions - mu) / var
            dlogstd = (dlogp[:, None] * (z ** 2 - 1.0)).sum(axis=0)
            dlogstd += entropy_beta  # dH/dlog_std = 1 per component

            grads = policy.net.zero_grads()
            policy.net.backward_batch(cache, -dmu, grads)  # minimize -objective
            policy_opt.step(grads.params() + [-dlogstd])

            v, vcache = value_net.forward_batch(ego, rows, lengths)
            verr = v[:, 0] - ret[sel]
            value_loss = float(np.mean(verr ** 2))
            if not np.isfinite(value_loss):
                raise PPODivergence("value loss is not finite", stats)
            vgrads = value_net.zero_grads()
            value_net.backward_batch(vcache, (2.0 * verr / b)[:, None], vgrads)
            value_opt.step(vgrads.params())

            stats["policy_loss"] += -surrogate
            stats["value_loss"] += value_loss
            stats["entropy"] += entropy
            stats["clip_fraction"] += float(np.mean(np.abs(ratio - 1.0) > clip_eps))
            stats["approx_kl"] += float(np.mean(logp_old - logp_new))
            n_batches += 1

    for k in stats:
        stats[k] /= max(1, n_batches)
    return stats
