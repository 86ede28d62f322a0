from kdnav.sim.world import (
    AgentState,
    EpisodeConfig,
    EpisodeTrace,
    Status,
    StepResult,
    World,
    run_episode,
)
from kdnav.sim.scenario import ScenarioConfig, ScenarioError, ScenarioSpec, generate_scenario
from kdnav.sim.observation import Observation, ObservationBatch, build_observation, build_observation_batch

__all__ = [
    "AgentState",
    "EpisodeConfig",
    "EpisodeTrace",
    "Status",
    "StepResult",
    "World",
    "run_episode",
    "ScenarioConfig",
    "ScenarioError",
    "ScenarioSpec",
    "generate_scenario",
    "Observation",
    "ObservationBatch",
    "build_observation",
    "build_observation_batch",
]
