"""Pedestrian trajectory ingestion.

Input is a frame-table text file:

    # optional comments
    fps 25
    <frame_id> <ped_id> <x> <y>
    ...

Fields are whitespace- or comma-separated; timestamps are frame_id / fps.
Rows may appear in any order; each pedestrian's track is returned
time-sorted. A duplicated (frame, pedestrian) pair or a malformed row is a
hard error carrying the offending line number.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np


class DataFormatError(RuntimeError):
    pass


@dataclass
class RawTrack:
    ped_id: int
    times: np.ndarray       # strictly increasing, seconds
    positions: np.ndarray   # (M, 2) meters

    @property
    def duration(self) -> float:
        return float(self.times[-1] - self.times[0])


def load_dataset(path, fmt: str = "frame-table") -> list[RawTrack]:
    if fmt != "frame-table":
        raise ValueError(f"unsupported dataset format {fmt!r}")
    path = Path(path)
    fps = None
    rows: dict[int, list[tuple[int, float, float]]] = {}
    seen: set[tuple[int, int]] = set()

    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            parts = text.replace(",", " ").split()
            if fps is None:
                if len(parts) == 2 and parts[0].lower() == "fps":
                    try:
                        fps = float(parts[1])
                    except ValueError:
                        raise DataFormatError(
                            f"{path}:{lineno}: invalid fps value {parts[1]!r}")
                    if fps <= 0:
                        raise DataFormatError(f"{path}:{lineno}: fps must be positive")
                    continue
                raise DataFormatError(
                    f"{path}:{lineno}: expected 'fps <value>' header before data rows")
            if len(parts) != 4:
                raise DataFormatError(
                    f"{path}:{lineno}: expected 'frame ped x y', got {text!r}")
            try:
                frame = int(parts[0])
                ped = int(parts[1])
                x = float(parts[2])
                y = float(parts[3])
            except ValueError:
                raise DataFormatError(f"{path}:{lineno}: malformed row {text!r}")
            key = (frame, ped)
            if key in seen:
                raise DataFormatError(
                    f"{path}:{lineno}: duplicate entry for frame {frame}, "
                    f"pedestrian {ped}")
            seen.add(key)
            rows.setdefault(ped, []).append((frame, x, y))

    if fps is None or not rows:
        raise DataFormatError(f"{path}: no data rows found")

    tracks = []
    for ped in sorted(rows):
        entries = sorted(rows[ped])
        frames = np.array([e[0] for e in entries], dtype=np.float64)
        pos = np.array([[e[1], e[2]] for e in entries])
        tracks.append(RawTrack(ped_id=ped, times=frames / fps, positions=pos))
    return tracks
