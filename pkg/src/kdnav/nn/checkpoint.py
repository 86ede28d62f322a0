"""Self-describing checkpoint container.

A checkpoint is an ``.npz`` holding the parameter tensors plus a JSON
metadata blob (architecture, rng seed, training info). Round-trips are
bit-exact: float64 tensors are stored verbatim.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

_META_KEY = "__meta__"


def save_checkpoint(path, params: dict, meta: dict):
    """Write parameter arrays and metadata; ``meta`` must be JSON-encodable."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = {k: np.asarray(v) for k, v in params.items()}
    payload[_META_KEY] = np.frombuffer(
        json.dumps(meta, sort_keys=True).encode(), dtype=np.uint8)
    with open(path, "wb") as fh:
        np.savez(fh, **payload)


def load_checkpoint(path):
    """Return ``(params, meta)`` as saved."""
    with np.load(path) as data:
        meta = json.loads(bytes(data[_META_KEY]).decode())
        params = {k: data[k] for k in data.files if k != _META_KEY}
    return params, meta
