"""Operator entry point.

Pipeline:

    kdnav synth-data     --out plaza.txt                 # stand-in dataset
    kdnav prepare-data   --dataset plaza.txt --out cache.txt
    kdnav train-expert   --cache cache.txt --out expert.npz
    kdnav train-rl       --expert expert.npz --out runs/kd
    kdnav benchmark      --method orca --method kd=runs/kd/policy_best.npz --out bench/
    kdnav simulate       --method orca --kind circle --agents 6 --out trace.txt

Exit codes: 0 success, 2 configuration/usage errors, 3 data-format errors,
1 other runtime failures. Every artifact-producing command writes a JSON
manifest capturing the effective configuration, seeds and input hashes.
"""

from __future__ import annotations

import dataclasses
import json
import logging
import math
import sys
from pathlib import Path

import click
import numpy as np
import yaml

from kdnav import backend_name
from kdnav.bc import ExpertPolicy, train_expert
from kdnav.data.loader import DataFormatError, load_dataset
from kdnav.data.preprocess import (cleanse, preprocess_dataset,
                                   read_track_cache, write_track_cache)
from kdnav.data.sampling import SampleExtractor
from kdnav.data.synthetic import generate_synthetic_dataset
from kdnav.evaluation.benchmark import MethodSpec, run_benchmark
from kdnav.evaluation.export import (histogram_export, report_table,
                                     save_report, trace_to_text)
from kdnav.manifest import write_manifest
from kdnav.orca import OrcaParams, OrcaPolicy
from kdnav.rl.reward import RewardConfig
from kdnav.rl.train import (MeanActionPolicy, TrainConfig, load_policy_bundle,
                            train)
from kdnav.sim.scenario import KINDS, ScenarioConfig, ScenarioSpec, generate_scenario
from kdnav.sim.world import EpisodeConfig, run_episode


class DataError(click.ClickException):
    exit_code = 3


class RunError(click.ClickException):
    exit_code = 1


def _config_layer(path):
    if not path:
        return {}
    with open(path) as fh:
        return yaml.safe_load(fh) or {}


@click.group()
@click.option("-v", "--verbose", is_flag=True, help="Enable info logging.")
def main(verbose):
    """Decentralized multi-agent navigation: train, benchmark, simulate."""
    logging.basicConfig(
        level=logging.INFO if verbose else logging.WARNING,
        format="%(asctime)s %(name)s %(levelname)s %(message)s")


@main.command("synth-data")
@click.option("--out", required=True, type=click.Path(dir_okay=False))
@click.option("--peds", default=434, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--fps", default=25.0, show_default=True)
def cmd_synth_data(out, peds, seed, fps):
    """Generate a synthetic plaza recording in the frame-table format."""
    stats = generate_synthetic_dataset(out, n_peds=peds, seed=seed, fps=fps)
    click.echo(f"wrote {out}: {stats['n_rows']} rows, {stats['n_peds']} "
               f"pedestrians ({stats['n_walkers']} goal-directed)")
    write_manifest(Path(out).with_suffix(".manifest.json"), "synth-data",
                   {"peds": peds, "fps": fps}, {"seed": seed}, [], [out])


@main.command("prepare-data")
@click.option("--dataset", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", required=True, type=click.Path(dir_okay=False))
@click.option("--dt", default=0.12, show_default=True)
@click.option("--min-displacement", default=2.0, show_default=True)
@click.option("--min-mean-speed", default=0.3, show_default=True)
def cmd_prepare_data(dataset, out, dt, min_displacement, min_mean_speed):
    """Load, resample, and cleanse a pedestrian dataset into a track cache."""
    try:
        raw = load_dataset(dataset)
    except DataFormatError as exc:
        raise DataError(str(exc))
    tracks = preprocess_dataset(raw, dt=dt)
    active, passive = cleanse(tracks, min_displacement, min_mean_speed)
    write_track_cache(out, tracks, dt)
    click.echo(f"{len(raw)} pedestrians -> {len(tracks)} resampled tracks: "
               f"{len(active)} active, {len(passive)} passive (neighbors only)")
    write_manifest(Path(out).with_suffix(".manifest.json"), "prepare-data",
                   {"dt": dt, "min_displacement": min_displacement,
                    "min_mean_speed": min_mean_speed},
                   {}, [dataset], [out])


@main.command("train-expert")
@click.option("--cache", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", required=True, type=click.Path(dir_okay=False))
@click.option("--experts", "n_experts", default=1, show_default=True,
              help="Train this many experts (suffix _e<k> when more than one).")
@click.option("--augment/--no-augment", default=True, show_default=True)
@click.option("--epochs", default=200, show_default=True)
@click.option("--batch-size", default=256, show_default=True)
@click.option("--lr", default=3e-4, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--sense-radius", default=4.0, show_default=True)
def cmd_train_expert(cache, out, n_experts, augment, epochs, batch_size, lr,
                     seed, sense_radius):
    """Behavior-clone expert policies from a prepared track cache."""
    tracks, _dt = read_track_cache(cache)
    source = SampleExtractor(tracks, sense_radius=sense_radius)
    outputs = []
    for e in range(n_experts):
        expert = train_expert(source, augment=augment, epochs=epochs,
                              batch_size=batch_size, lr=lr, seed=seed + e)
        path = Path(out)
        if n_experts > 1:
            path = path.with_name(f"{path.stem}_e{e}{path.suffix}")
        expert.save(path)
        curve = path.with_suffix(".curve.log")
        with open(curve, "w") as fh:
            fh.write("# epoch train_loss frozen_loss val_loss\n")
            for row in expert.meta["history"]:
                fh.write(f"{row['epoch']} {row['train_loss']:.8g} "
                         f"{row['frozen_loss']:.8g} {row['val_loss']:.8g}\n")
        outputs.append(str(path))
        click.echo(f"expert {e}: train {expert.meta['final_train_loss']:.5f} "
                   f"val {expert.meta['final_val_loss']:.5f} -> {path}")
    write_manifest(Path(out).with_suffix(".manifest.json"), "train-expert",
                   {"augment": augment, "epochs": epochs,
                    "batch_size": batch_size, "lr": lr,
                    "experts": n_experts, "sense_radius": sense_radius},
                   {"seed": seed}, [cache], outputs)


@main.command("train-rl")
@click.option("--expert", "expert_paths", multiple=True,
              type=click.Path(dir_okay=False),
              help="Expert checkpoint(s); repeat for an ensemble.")
@click.option("--out", required=True, type=click.Path(file_okay=False))
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False),
              help="YAML file overriding training defaults (flags win).")
@click.option("--steps", default=None, type=int, help="Transition budget.")
@click.option("--workers", default=None, type=int)
@click.option("--seed", default=None, type=int)
@click.option("--no-distill", is_flag=True, help="Ablation: w_e = 0.")
@click.option("--no-velocity", is_flag=True, help="Ablation: w_v = 0.")
@click.option("--reward-mode", type=click.Choice(["kd", "progress"]),
              default=None, help="'progress' is the pure-RL baseline reward.")
@click.option("--agent-v-max", default=None, type=float,
              help="Speed limit during training (RL baseline uses 1.3).")
def cmd_train_rl(expert_paths, out, config_path, steps, workers, seed,
                 no_distill, no_velocity, reward_mode, agent_v_max):
    """Reinforcement stage with distillation-shaped reward."""
    layer = _config_layer(config_path)
    cfg = TrainConfig()
    for key in ("total_steps", "n_workers", "steps_per_worker", "gamma",
                "lam", "clip_eps", "entropy_beta", "lr", "ppo_epochs",
                "minibatch", "seed", "hidden", "embed_dim", "eval_every",
                "eval_episodes"):
        if key in layer:
            setattr(cfg, key, layer[key])
    for key, value in (layer.get("reward") or {}).items():
        setattr(cfg.reward, key, value)
    if steps is not None:
        cfg.total_steps = steps
    if workers is not None:
        cfg.n_workers = workers
    if seed is not None:
        cfg.seed = seed
    if reward_mode is not None:
        cfg.reward.mode = reward_mode
    if no_distill:
        cfg.reward.w_e = 0.0
    if no_velocity:
        cfg.reward.w_v = 0.0
    if agent_v_max is not None:
        cfg.scenario = dataclasses.replace(cfg.scenario, v_max=agent_v_max)

    needs_expert = cfg.reward.mode == "kd" and cfg.reward.w_e > 0.0
    if needs_expert and not expert_paths:
        raise click.UsageError(
            "distillation training requires --expert (or pass --no-distill / "
            "--reward-mode progress)")
    experts = []
    for p in expert_paths:
        if not Path(p).exists():
            raise click.UsageError(f"expert checkpoint not found: {p}")
        experts.append(ExpertPolicy.load(p))

    out = Path(out)
    try:
        result = train(cfg, experts, out)
    except Exception as exc:
        raise RunError(f"training failed: {exc}")
    click.echo(f"trained {result['steps']} steps in {result['updates']} "
               f"updates; best eval success {result['best_eval']:.3f}")
    click.echo(f"best checkpoint: {result['best_checkpoint']}")
    write_manifest(out / "manifest.json", "train-rl", cfg.to_dict(),
                   {"seed": cfg.seed}, list(expert_paths),
                   [result["best_checkpoint"], result["last_checkpoint"],
                    result["metrics_log"]])


def _parse_method(spec: str) -> MethodSpec:
    name, _, path = spec.partition("=")
    name = name.strip().lower()
    if name == "orca":
        return MethodSpec("orca", OrcaPolicy(OrcaParams()))
    if name not in ("sl", "kd", "rl"):
        raise click.UsageError(
            f"unknown method {name!r}; expected orca, sl=<ckpt>, kd=<ckpt>, "
            f"or rl=<ckpt>")
    if not path:
        raise click.UsageError(f"method {name!r} needs a checkpoint: {name}=<path>")
    if not Path(path).exists():
        click.echo(f"warning: checkpoint {path} missing; {name} cells will be "
                   f"unavailable", err=True)
        return MethodSpec(name, None)
    if name == "sl":
        return MethodSpec("sl", ExpertPolicy.load(path))
    policy, _value, _meta = load_policy_bundle(path)
    driver = MeanActionPolicy(policy.net)
    if name == "rl":
        return MethodSpec("rl", driver, v_max=1.3)
    return MethodSpec("kd", driver)


@main.command("benchmark")
@click.option("--method", "method_specs", multiple=True, required=True,
              help="orca | sl=<ckpt> | rl=<ckpt> | kd=<ckpt>; repeatable.")
@click.option("--out", required=True, type=click.Path(file_okay=False))
@click.option("--trials", default=50, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--kinds", default=",".join(KINDS), show_default=True)
@click.option("--counts", default="20,24", show_default=True)
@click.option("--jobs", default=1, show_default=True)
def cmd_benchmark(method_specs, out, trials, seed, kinds, counts, jobs):
    """Reproduce the quantitative comparison grid with pinned seeds."""
    methods = [_parse_method(s) for s in method_specs]
    kind_list = tuple(k.strip() for k in kinds.split(",") if k.strip())
    count_list = tuple(int(c) for c in counts.split(",") if c.strip())
    report = run_benchmark(methods, kinds=kind_list, agent_counts=count_list,
                           trials=trials, seed=seed, n_jobs=jobs)
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    save_report(report, out / "report.json")
    table = report_table(report)
    (out / "report.txt").write_text(table)
    click.echo(table, nl=False)
    write_manifest(out / "manifest.json", "benchmark",
                   {"methods": list(method_specs), "trials": trials,
                    "kinds": list(kind_list), "counts": list(count_list)},
                   {"seed": seed}, [], [str(out / "report.json")])


@main.command("simulate")
@click.option("--method", required=True,
              help="orca | straight | sl=<ckpt> | rl=<ckpt> | kd=<ckpt>.")
@click.option("--scenario", "scenario_path", type=click.Path(exists=True, dir_okay=False),
              help="Scenario YAML; otherwise use --kind/--agents/--seed.")
@click.option("--kind", type=click.Choice(KINDS), default="circle")
@click.option("--agents", default=6, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--out", required=True, type=click.Path(dir_okay=False))
@click.option("--histograms", type=click.Path(dir_okay=False),
              help="Also export speed/turning histograms here.")
def cmd_simulate(method, scenario_path, kind, agents, seed, out, histograms):
    """Run a single episode and export its trajectory."""
    if method.strip().lower() == "straight":
        from kdnav.policies import StraightLinePolicy
        spec = MethodSpec("straight", StraightLinePolicy())
    else:
        spec = _parse_method(method)
    if spec.policy is None:
        raise RunError(f"method {spec.name!r} has no loadable checkpoint")
    if scenario_path:
        scenario = ScenarioSpec.from_yaml(scenario_path)
    else:
        scenario = generate_scenario(
            kind, seed, ScenarioConfig(n_agents=agents))
    if spec.v_max is not None:
        scenario = dataclasses.replace(scenario, v_max=spec.v_max)
    trace = run_episode(spec.policy, scenario, EpisodeConfig())
    trace_to_text(trace, out)
    arrived = int(np.sum(trace.final_status == 1))
    collided = int(np.sum(trace.final_status == 2))
    click.echo(f"{scenario.n_agents} agents, {trace.duration:.2f}s: "
               f"{arrived} arrived, {collided} collided -> {out}")
    outputs = [out]
    if histograms:
        histogram_export(trace, histograms)
        outputs.append(histograms)
    write_manifest(Path(out).with_suffix(".manifest.json"), "simulate",
                   {"method": method, "kind": scenario.kind,
                    "agents": scenario.n_agents}, {"seed": seed},
                   [scenario_path] if scenario_path else [], outputs)


@main.command("backend")
def cmd_backend():
    """Print which kernel backend (compiled or pure) is active."""
    click.echo(backend_name)


if __name__ == "__main__":
    main()
