"""Stage 1: supervised training of expert policies from pedestrian tracks.

The expert is a deterministic observation-to-velocity map fitted by
minibatch gradient descent on the mean squared error between predicted and
recorded next-step velocities. With augmentation on, every drawn sample is
re-extracted at a fresh continuous timestamp and randomly flipped/rotated;
without it, training iterates over the fixed grid samples.
"""

from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass, field

import numpy as np

from kdnav.data.sampling import SampleExtractor, augment_batch
from kdnav.nn.checkpoint import load_checkpoint, save_checkpoint
from kdnav.nn.optim import Adam
from kdnav.nn.setnet import SetNet, forward, make_policy_net

log = logging.getLogger(__name__)


@dataclass
class ExpertPolicy:
    net: SetNet
    meta: dict = field(default_factory=dict)

    aligned = False  # observation mode expected by the net

    def __call__(self, obs, state=None) -> np.ndarray:
        return expert_action(self, obs)

    def act_batch(self, batch) -> np.ndarray:
        if batch.aligned:
            raise ValueError("expert policies consume unaligned observations")
        out, _ = self.net.forward_batch(batch.ego, batch.neighbors, batch.counts)
        return out

    def forward_arrays(self, ego, neighbors, counts) -> np.ndarray:
        out, _ = self.net.forward_batch(ego, neighbors, counts)
        return out

    def save(self, path):
        save_checkpoint(path, self.net.state_dict(),
                        {"kind": "expert", "arch": self.net.arch(), **self.meta})

    @classmethod
    def load(cls, path) -> "ExpertPolicy":
        params, meta = load_checkpoint(path)
        if meta.get("kind") != "expert":
            raise ValueError(f"{path} is not an expert checkpoint")
        net = SetNet.from_arch(meta["arch"])
        net.load_state_dict(params)
        return cls(net=net, meta={k: v for k, v in meta.items()
                                  if k not in ("kind", "arch")})


def expert_action(expert: ExpertPolicy, obs) -> np.ndarray:
    """Deterministic expert velocity command for an unaligned observation."""
    if obs.aligned:
        raise ValueError("expert policies consume unaligned observations")
    return forward(expert.net, obs)


def dataset_fingerprint(extractor: SampleExtractor) -> str:
    h = hashlib.sha256()
    for tr in extractor.tracks:
        h.update(np.int64(tr.ped_id).tobytes())
        h.update(np.float64(tr.t0).tobytes())
        h.update(tr.positions.tobytes())
        h.update(np.uint8(tr.active).tobytes())
    return h.hexdigest()[:16]


def _mse_and_grad(pred: np.ndarray, target: np.ndarray):
    diff = pred - target
    loss = float(np.mean(np.sum(diff ** 2, axis=1)))
    dout = 2.0 * diff / pred.shape[0]
    return loss, dout


def train_expert(source: SampleExtractor, augment: bool = True,
                 epochs: int = 200, batch_size: int = 256, lr: float = 3e-4,
                 seed: int = 0, hidden: int = 64, embed_dim: int = 64,
                 val_frac: float = 0.1, log_every: int = 10) -> ExpertPolicy:
    """Fit one expert; returns it with training history in ``meta``.

    Raises RuntimeError if the loss diverges to NaN.
    """
    rng = np.random.default_rng(seed)
    active = source.active_idx
    if len(active) == 0:
        raise ValueError("no active tracks to train on")

    # hold out whole pedestrians so no trajectory leaks across the split
    n_val = int(round(val_frac * len(active)))
    perm = rng.permutation(len(active))
    val_tracks = set(int(active[i]) for i in perm[:n_val])
    train_tracks = np.array([int(i) for i in active if int(i) not in val_tracks],
                            dtype=np.int64)
    if len(train_tracks) == 0:
        train_tracks = np.asarray(active, dtype=np.int64)
        val_tracks = set()

    grid = source.grid_index()
    train_grid = [(i, t) for i, t in grid if i in set(train_tracks.tolist())]
    val_grid = [(i, t) for i, t in grid if i in val_tracks]

    net = make_policy_net(aligned=False, hidden=hidden, embed_dim=embed_dim,
                          seed=int(rng.integers(2 ** 31)))
    opt = Adam(net.params(), lr=lr)

    frozen = train_grid[:: max(1, len(train_grid) // 4096)]
    history = []
    batches_per_epoch = max(1, len(train_grid) // batch_size)

    def eval_loss(pairs):
        if not pairs:
            return float("nan")
        total, count = 0.0, 0
        for s in range(0, len(pairs), 4096):
            ego, neigh, counts, act = source.batch(pairs[s:s + 4096])
            out, _ = net.forward_batch(ego, neigh, counts)
            total += float(np.sum((out - act) ** 2))
            count += len(ego)
        return total / count

    for epoch in range(epochs):
        order = rng.permutation(len(train_grid))
        epoch_loss = 0.0
        for b in range(batches_per_epoch):
            if augment:
                idx, ts = source.random_times(rng, batch_size,
                                              subset=train_tracks)
                ego, neigh, counts, act = source.batch(list(zip(idx, ts)))
                ego, neigh, act = augment_batch(ego, neigh, counts, act, rng)
            else:
                sel = order[b * batch_size:(b + 1) * batch_size]
                ego, neigh, counts, act = source.batch(
                    [train_grid[j] for j in sel])
            out, cache = net.forward_batch(ego, neigh, counts)
            loss, dout = _mse_and_grad(out, act)
            if not np.isfinite(loss):
                raise RuntimeError(
                    f"training diverged at epoch {epoch}: loss={loss}")
            grads = net.zero_grads()
            net.backward_batch(cache, dout, grads)
            opt.step(grads.params())
            epoch_loss += loss
        row = {"epoch": epoch,
               "train_loss": epoch_loss / batches_per_epoch,
               "frozen_loss": eval_loss(frozen),
               "val_loss": eval_loss(val_grid)}
        history.append(row)
        if log_every and epoch % log_every == 0:
            log.info("epoch %d: train %.5f frozen %.5f val %.5f", epoch,
                     row["train_loss"], row["frozen_loss"], row["val_loss"])

    meta = {
        "dataset": dataset_fingerprint(source),
        "augment": bool(augment),
        "seed": seed,
        "epochs": epochs,
        "batch_size": batch_size,
        "lr": lr,
        "final_train_loss": history[-1]["train_loss"] if history else None,
        "final_val_loss": history[-1]["val_loss"] if history else None,
        "history": history,
    }
    return ExpertPolicy(net=net, meta=meta)
