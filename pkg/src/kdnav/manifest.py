"""Run manifests: every artifact-producing command records what produced it."""

from __future__ import annotations

import hashlib
import json
import sys
import time
from pathlib import Path


def file_sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(path, command: str, config: dict, seeds,
                   inputs: list, outputs: list) -> Path:
    """Write a JSON manifest next to the artifacts; returns its path."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    doc = {
        "command": command,
        "argv": sys.argv,
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
        "config": config,
        "seeds": seeds,
        "inputs": {str(p): file_sha256(p) for p in inputs if Path(p).exists()},
        "outputs": [str(p) for p in outputs],
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path
