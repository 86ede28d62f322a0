"""Benchmark harness: methods x scenarios x fixed agent counts, pinned seeds.

Every method sees the identical scenario list (same seeds), so cells are
directly comparable. Success rate aggregates per trial; extra distance and
energy efficiency pool per agent across trials (extra distance over arrived
agents only). Methods whose checkpoints are missing yield unavailable cells
without stopping the run.
"""

from __future__ import annotations

import dataclasses
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from kdnav.evaluation.metrics import energy_efficiency, extra_distance, success_rate
from kdnav.sim.scenario import ScenarioConfig, generate_scenario
from kdnav.sim.world import EpisodeConfig, run_episode

DEFAULT_KINDS = ("circle", "corridor", "square")
DEFAULT_AGENT_COUNTS = (20, 24)


@dataclass
class MethodSpec:
    name: str
    policy: object | None = None   # None marks the method unavailable
    v_max: float | None = None     # test-time speed-limit override


@dataclass
class CellStats:
    available: bool = False
    success_mean: float = float("nan")
    success_std: float = float("nan")
    extra_mean: float = float("nan")
    extra_std: float = float("nan")
    n_arrived: int = 0
    efficiency_mean: float = float("nan")
    efficiency_std: float = float("nan")
    n_agents: int = 0

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "CellStats":
        return cls(**d)


@dataclass
class BenchmarkReport:
    schema: str
    trials: int
    seed: int
    kinds: tuple
    agent_counts: tuple
    methods: list
    cells: dict = field(default_factory=dict)  # (method, kind, n) -> CellStats

    def cell(self, method: str, kind: str, n: int) -> CellStats:
        return self.cells[(method, kind, n)]


SCHEMA = "kdnav-report v1"


def _scenario_for(kind: str, n: int, trial: int, seed: int,
                  scenario_cfg: ScenarioConfig) -> "ScenarioSpec":
    cfg = dataclasses.replace(scenario_cfg, n_agents=n)
    rng = np.random.default_rng(np.random.SeedSequence((seed, trial)))
    return generate_scenario(kind, rng, cfg)


def _run_cell_trial(args):
    method, kind, n, trial, seed, episode_cfg, scenario_cfg = args
    scenario = _scenario_for(kind, n, trial, seed, scenario_cfg)
    if method.v_max is not None:
        scenario = dataclasses.replace(scenario, v_max=method.v_max)
    trace = run_episode(method.policy, scenario, episode_cfg)
    extras = [extra_distance(trace, i) for i in range(n)]
    return (success_rate(trace),
            [e for e in extras if e is not None],
            [energy_efficiency(trace, i) for i in range(n)])


def run_benchmark(methods: list[MethodSpec], kinds=DEFAULT_KINDS,
                  agent_counts=DEFAULT_AGENT_COUNTS, trials: int = 50,
                  seed: int = 0, episode_cfg: EpisodeConfig | None = None,
                  scenario_cfg: ScenarioConfig | None = None,
                  n_jobs: int = 1) -> BenchmarkReport:
    episode_cfg = episode_cfg or EpisodeConfig()
    scenario_cfg = scenario_cfg or ScenarioConfig()
    report = BenchmarkReport(schema=SCHEMA, trials=trials, seed=seed,
                             kinds=tuple(kinds),
                             agent_counts=tuple(agent_counts),
                             methods=[m.name for m in methods])

    for method in methods:
        for kind in kinds:
            for n in agent_counts:
                key = (method.name, kind, n)
                if method.policy is None:
                    report.cells[key] = CellStats(available=False)
                    continue
                tasks = [(method, kind, n, trial, seed, episode_cfg,
                          scenario_cfg) for trial in range(trials)]
                if n_jobs > 1:
                    with ProcessPoolExecutor(max_workers=n_jobs) as pool:
                        results = list(pool.map(_run_cell_trial, tasks))
                else:
                    results = [_run_cell_trial(t) for t in tasks]
                successes = np.array([r[0] for r in results])
                extras = np.array([e for r in results for e in r[1]])
                effs = np.array([e for r in results for e in r[2]])
                report.cells[key] = CellStats(
                    available=True,
                    success_mean=float(successes.mean()),
                    success_std=float(successes.std()),
                    extra_mean=float(extras.mean()) if len(extras) else float("nan"),
                    extra_std=float(extras.std()) if len(extras) else float("nan"),
                    n_arrived=int(len(extras)),
                    efficiency_mean=float(effs.mean()),
                    efficiency_std=float(effs.std()),
                    n_agents=int(len(effs)))
    return report
