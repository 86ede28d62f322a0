"""Artifact export: trace files, histograms, and benchmark reports.

Traces serialize to a columnar text format ("# kdnav-trace v1") with one row
per (control step, agent) while the agent was acting; the header carries
scenario geometry so paths can be reconstructed offline. Reports round-trip
losslessly through JSON and also render as an aligned text table.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from kdnav.evaluation.benchmark import BenchmarkReport, CellStats
from kdnav.sim.scenario import ScenarioSpec
from kdnav.sim.world import EpisodeConfig, EpisodeTrace

_STATUS_NAMES = {0: "active", 1: "arrived", 2: "collided"}
_STATUS_CODES = {v: k for k, v in _STATUS_NAMES.items()}


def trace_to_text(trace: EpisodeTrace, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    sc = trace.scenario
    with open(path, "w") as fh:
        fh.write("# kdnav-trace v1\n")
        fh.write(f"# kind: {sc.kind}\n")
        fh.write(f"# seed: {sc.seed}\n")
        fh.write(f"# n_agents: {sc.n_agents}\n")
        fh.write(f"# dt_control: {trace.config.dt_control!r}\n")
        fh.write(f"# duration: {trace.duration!r}\n")
        for i in range(sc.n_agents):
            fh.write(f"# agent {i} start {sc.starts[i, 0]!r} {sc.starts[i, 1]!r} "
                     f"goal {sc.goals[i, 0]!r} {sc.goals[i, 1]!r} "
                     f"radius {sc.agent_radius!r}\n")
        fh.write("# columns: step t agent x y vx vy ax ay status\n")
        for k in range(trace.n_control_steps):
            t = (k + 1) * trace.config.dt_control
            for i in range(sc.n_agents):
                idx = np.searchsorted(trace.steps[i], k)
                if idx >= len(trace.steps[i]) or trace.steps[i][idx] != k:
                    continue
                p = trace.positions[i][idx]
                v = trace.velocities[i][idx]
                a = trace.actions[i][idx]
                st = _STATUS_NAMES[int(trace.statuses[i][idx])]
                fh.write(f"{k} {t!r} {i} {p[0]!r} {p[1]!r} {v[0]!r} {v[1]!r} "
                         f"{a[0]!r} {a[1]!r} {st}\n")


def trace_from_text(path) -> EpisodeTrace:
    """Rebuild a trace (geometry and per-step rows) from its text form."""
    path = Path(path)
    header: dict = {"agents": {}}
    rows = []
    with open(path) as fh:
        for line in fh:
            text = line.strip()
            if not text:
                continue
            if text.startswith("#"):
                parts = text[1:].split()
                if not parts:
                    continue
                if parts[0] in ("kind:", "seed:", "n_agents:", "dt_control:",
                                "duration:"):
                    header[parts[0][:-1]] = parts[1]
                elif parts[0] == "agent":
                    aid = int(parts[1])
                    header["agents"][aid] = {
                        "start": (float(parts[3]), float(parts[4])),
                        "goal": (float(parts[6]), float(parts[7])),
                        "radius": float(parts[9])}
                continue
            p = text.split()
            rows.append((int(p[0]), int(p[2]), float(p[3]), float(p[4]),
                         float(p[5]), float(p[6]), float(p[7]), float(p[8]),
                         _STATUS_CODES[p[9]]))

    n = int(header["n_agents"])
    seed = None if header.get("seed") in (None, "None") else int(header["seed"])
    starts = np.array([header["agents"][i]["start"] for i in range(n)])
    goals = np.array([header["agents"][i]["goal"] for i in range(n)])
    scenario = ScenarioSpec(kind=header.get("kind", "unknown"), seed=seed,
                            n_agents=n, geometry={}, starts=starts, goals=goals,
                            agent_radius=header["agents"][0]["radius"])
    config = EpisodeConfig(dt_control=float(header["dt_control"]))

    steps = [[] for _ in range(n)]
    pos = [[] for _ in range(n)]
    vel = [[] for _ in range(n)]
    act = [[] for _ in range(n)]
    stat = [[] for _ in range(n)]
    max_step = -1
    for k, i, x, y, vx, vy, ax, ay, st in rows:
        steps[i].append(k)
        pos[i].append((x, y))
        vel[i].append((vx, vy))
        act[i].append((ax, ay))
        stat[i].append(st)
        max_step = max(max_step, k)
    final_status = np.array([s[-1] if s else 0 for s in stat], dtype=np.int8)
    return EpisodeTrace(
        scenario=scenario, config=config,
        steps=[np.array(s, dtype=np.int64) for s in steps],
        positions=[np.array(p).reshape(-1, 2) for p in pos],
        velocities=[np.array(v).reshape(-1, 2) for v in vel],
        actions=[np.array(a).reshape(-1, 2) for a in act],
        statuses=[np.array(s, dtype=np.int8) for s in stat],
        final_status=final_status,
        census=np.empty((0, 3), dtype=np.int64),
        n_control_steps=max_step + 1,
        duration=float(header.get("duration", (max_step + 1) * config.dt_control)))


def histogram_export(trace: EpisodeTrace, path, n_bins: int = 40):
    """Speed and turning-angle histograms as columnar text."""
    speeds = []
    turns = []
    for i in range(trace.n_agents):
        v = trace.velocities[i]
        s = np.hypot(v[:, 0], v[:, 1])
        speeds.extend(s.tolist())
        moving = v[s > 1e-6]
        if len(moving) >= 2:
            ang = np.arctan2(moving[:, 1], moving[:, 0])
            d = np.diff(ang)
            d = np.arctan2(np.sin(d), np.cos(d))  # wrap to (-pi, pi]
            turns.extend(d.tolist())

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        fh.write("# kdnav-histograms v1\n")
        for name, data, lo, hi in (("speed", speeds, 0.0, 2.6),
                                   ("turn_angle", turns, -np.pi, np.pi)):
            counts, edges = np.histogram(np.array(data), bins=n_bins,
                                         range=(lo, hi))
            fh.write(f"# histogram {name} samples {len(data)}\n")
            fh.write(f"# columns: bin_left bin_right count\n")
            for b in range(n_bins):
                fh.write(f"{name} {edges[b]!r} {edges[b + 1]!r} {counts[b]}\n")


def save_report(report: BenchmarkReport, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    doc = {
        "schema": report.schema,
        "trials": report.trials,
        "seed": report.seed,
        "kinds": list(report.kinds),
        "agent_counts": list(report.agent_counts),
        "methods": list(report.methods),
        "cells": {f"{m}|{k}|{n}": stats.to_dict()
                  for (m, k, n), stats in sorted(report.cells.items())},
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_report(path) -> BenchmarkReport:
    with open(path) as fh:
        doc = json.load(fh)
    report = BenchmarkReport(schema=doc["schema"], trials=doc["trials"],
                             seed=doc["seed"], kinds=tuple(doc["kinds"]),
                             agent_counts=tuple(doc["agent_counts"]),
                             methods=list(doc["methods"]))
    for key, stats in doc["cells"].items():
        m, k, n = key.split("|")
        report.cells[(m, k, int(n))] = CellStats.from_dict(stats)
    return report


def report_table(report: BenchmarkReport) -> str:
    """Aligned text table: metric blocks x methods, one column per cell."""
    cols = [(k, n) for k in report.kinds for n in report.agent_counts]
    head = ["metric", "method"] + [f"{n}-{k.capitalize()}" for k, n in cols]
    rows = [head]
    blocks = (("success", "success_mean", "success_std"),
              ("extra_dist", "extra_mean", "extra_std"),
              ("efficiency", "efficiency_mean", "efficiency_std"))
    for label, mean_key, std_key in blocks:
        for m in report.methods:
            row = [label, m]
            for k, n in cols:
                cell = report.cells.get((m, k, n))
                if cell is None or not cell.available:
                    row.append("--")
                else:
                    row.append(f"{getattr(cell, mean_key):.2f}"
                               f"+-{getattr(cell, std_key):.2f}")
            rows.append(row)
    widths = [max(len(r[c]) for r in rows) for c in range(len(head))]
    lines = ["  ".join(r[c].ljust(widths[c]) for c in range(len(head))).rstrip()
             for r in rows]
    return "\n".join(lines) + "\n"
