"""Generalized advantage estimation over one transition stream."""

from __future__ import annotations

import numpy as np


def gae(rewards, values, dones, gamma: float, lam: float):
    """Exponentially weighted advantages and value targets for one stream.

    ``values`` must hold one entry per reward plus a bootstrap value beyond
    the final transition (0 for terminal streams, the value estimate of the
    next observation for truncated ones). ``dones`` masks the bootstrap out
    of terminal steps.

    Returns ``(advantages, returns)`` with ``returns = advantages + values``.
    """
    rewards = np.asarray(rewards, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    dones = np.asarray(dones)
    t = len(rewards)
    if len(values) != t + 1:
        raise ValueError(
            f"values must have length len(rewards)+1, got {len(values)} for "
            f"{t} rewards")
    if len(dones) != t:
        raise ValueError(f"dones must have length {t}, got {len(dones)}")

    advantages = np.zeros(t)
    last = 0.0
    for k in range(t - 1, -1, -1):
        nonterminal = 0.0 if dones[k] else 1.0
        delta = rewards[k] + gamma * values[k + 1] * nonterminal - values[k]
        last = delta + gamma * lam * nonterminal * last
        advantages[k] = last
    return advantages, advantages + values[:t]
