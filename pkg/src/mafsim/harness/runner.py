"""Seeded training/evaluation runs, metrics CSVs, summaries and checkpoints."""

from __future__ import annotations

import csv
import json
import logging
import time
from collections import deque
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from mafsim.agents import AGENTS, Agent, make_agent
from mafsim.anomaly import AnomalyTimeline, build_timeline
from mafsim.energy import SystemConfig
from mafsim.env import DormancyEnv, RoundOutcome
from mafsim.errors import CheckpointError
from mafsim.harness.config import AgentConfig, ExperimentConfig
from mafsim.rl import checkpoint

log = logging.getLogger(__name__)

METRICS_VERSION = "mafsim-metrics v1"
METRICS_COLUMNS = ("run_id", "agent", "seed", "phase", "episode", "mean_reward",
                   "energy_per_minute", "e_tran", "e_deal", "e_up", "e_abnormal", "mean_t1",
                   "mean_sleep", "accuracy", "rolling_accuracy", "cumulative_energy_per_minute",
                   "rolling_energy_per_minute", "wall_clock_s")
WALL_CLOCK_COLUMNS = ("wall_clock_s", "train_seconds")
SUMMARY_COLUMNS = ("agent", "seed", "train_energy_per_minute", "final_eval_energy_per_minute",
                   "final_eval_accuracy", "first_accuracy_episode", "convergence_episode",
                   "final_mean_reward", "mean_t1_final", "train_seconds")

ACCURACY_WINDOW = 100      # anomaly events
ENERGY_WINDOW = 100        # episodes
CONVERGENCE_WINDOW = 50    # episodes
CONVERGENCE_BAND = 0.05
VERIFY_EPISODES = 1

TRAIN_STREAM, EVAL_STREAM, AGENT_STREAM, VERIFY_STREAM = 1, 2, 3, 4


def derived_seed(*entropy: int) -> int:
    return int(np.random.SeedSequence([int(e) for e in entropy]).generate_state(1)[0])


def training_timeline(cfg: ExperimentConfig, seed: int, episode: int) -> AnomalyTimeline:
    horizon = cfg.rounds_per_episode * cfg.system.round_duration
    return build_timeline(cfg.system, horizon, cfg.timeline_mode,
                          derived_seed(seed, TRAIN_STREAM, episode))


def heldout_timelines(cfg: ExperimentConfig, seed: int, n: int | None = None) -> list[AnomalyTimeline]:
    horizon = cfg.rounds_per_episode * cfg.system.round_duration
    n = cfg.eval_episodes if n is None else n
    return [build_timeline(cfg.system, horizon, cfg.timeline_mode,
                           derived_seed(seed, EVAL_STREAM, j)) for j in range(n)]


def verification_timeline(system: SystemConfig, rounds: int, mode: str) -> AnomalyTimeline:
    return build_timeline(system, rounds * system.round_duration, mode,
                          derived_seed(0, VERIFY_STREAM))


def make_env(cfg: ExperimentConfig) -> DormancyEnv:
    return DormancyEnv(cfg.system, cfg.rounds_per_episode, cfg.extended_observation,
                       cfg.accuracy_penalty)


def build_agent(cfg: ExperimentConfig, agent_cfg: AgentConfig, seed: int, env: DormancyEnv) -> Agent:
    agent_index = list(AGENTS).index(agent_cfg.tag)
    return make_agent(agent_cfg.tag, env, agent_cfg.params,
                      seed=derived_seed(seed, AGENT_STREAM, agent_index),
                      total_rounds=cfg.total_rounds)


@dataclass
class MetricsRecord:
    run_id: str
    agent: str
    seed: int
    phase: str
    episode: int
    mean_reward: float
    energy_per_minute: float
    e_tran: float
    e_deal: float
    e_up: float
    e_abnormal: float
    mean_t1: float
    mean_sleep: float
    accuracy: float
    rolling_accuracy: float
    cumulative_energy_per_minute: float
    rolling_energy_per_minute: float
    wall_clock_s: float

    def row(self) -> list[str]:
        out = []
        for f in fields(self):
            v = getattr(self, f.name)
            out.append(format(v, ".12g") if isinstance(v, float) else str(v))
        return out


def episode_stats(outcomes: list[RoundOutcome], round_duration: float) -> dict:
    minutes = len(outcomes) * round_duration
    caught = sum(o.caught for o in outcomes)
    events = sum(o.total_events for o in outcomes)
    t1 = np.array([o.t1 for o in outcomes])
    return {
        "mean_reward": float(np.mean([o.reward for o in outcomes])),
        "energy_per_minute": sum(o.energy.total for o in outcomes) / minutes,
        "e_tran": sum(o.energy.e_tran for o in outcomes) / minutes,
        "e_deal": sum(o.energy.e_deal for o in outcomes) / minutes,
        "e_up": sum(o.energy.e_up for o in outcomes) / minutes,
        "e_abnormal": sum(o.energy.e_abnormal for o in outcomes) / minutes,
        "mean_t1": float(t1.mean()),
        "mean_sleep": float(round_duration - t1.mean()),
        "caught": caught,
        "events": events,
        "accuracy": 1.0 if events == 0 else caught / events,
    }


def evaluate(agent: Agent, env: DormancyEnv, timelines) -> dict:
    """Greedy (noise-free) rollouts; returns pooled episode statistics and the actions taken."""
    outcomes = []
    for tl in timelines:
        outcomes.extend(agent.run_episode(env, tl, train=False).outcomes)
    stats = episode_stats(outcomes, env.round_duration)
    stats["actions"] = [o.t1 for o in outcomes]
    return stats


def event_flags(outcome: RoundOutcome) -> list[int]:
    """1 for each caught event, 0 for each missed one, in time order."""
    res = outcome.resolution
    events = [(e.occurrence_time, 1) for e in res.caught]
    events += [(e.occurrence_time, 0) for e, _ in res.missed]
    return [flag for _, flag in sorted(events)]


def convergence_episode(rewards, window: int = CONVERGENCE_WINDOW,
                        band: float = CONVERGENCE_BAND) -> int:
    """First episode (1-based) whose trailing moving-average reward is within
    ``band`` (relative) of the final mean reward, the mean of the last
    ``window`` episodes."""
    rewards = np.asarray(rewards, dtype=float)
    if rewards.size == 0:
        raise ValueError("no rewards")
    window = min(window, rewards.size)
    final = rewards[-window:].mean()
    csum = np.concatenate([[0.0], np.cumsum(rewards)])
    for i in range(1, rewards.size + 1):
        lo = max(0, i - window)
        ma = (csum[i] - csum[lo]) / (i - lo)
        if abs(ma - final) <= band * abs(final):
            return i
    return int(rewards.size)


@dataclass
class RunSummary:
    agent: str
    seed: int
    train_energy_per_minute: float
    final_eval_energy_per_minute: float
    final_eval_accuracy: float
    first_accuracy_episode: int
    convergence_episode: int
    final_mean_reward: float
    mean_t1_final: float
    train_seconds: float
    run_dir: str = ""


def run_single(cfg: ExperimentConfig, agent_cfg: AgentConfig, seed: int, out_dir) -> RunSummary:
    """Train one agent with one seed, writing metrics.csv and checkpoint.json into ``out_dir``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    env = make_env(cfg)
    agent = build_agent(cfg, agent_cfg, seed, env)
    eval_set = heldout_timelines(cfg, seed)
    run_id = f"{agent_cfg.tag}-seed{seed}"
    tau = cfg.system.accuracy_threshold
    start = time.perf_counter()

    flags: deque = deque(maxlen=ACCURACY_WINDOW)
    energies: list[float] = []
    rewards: list[float] = []
    first_accuracy = -1
    last_eval = None
    with open(out_dir / "metrics.csv", "w", newline="") as fh:
        fh.write(f"# {METRICS_VERSION}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(METRICS_COLUMNS)
        for episode in range(1, cfg.n_episodes + 1):
            result = agent.run_episode(env, training_timeline(cfg, seed, episode), train=True)
            stats = episode_stats(result.outcomes, env.round_duration)
            for o in result.outcomes:
                flags.extend(event_flags(o))
            rolling_acc = float(np.mean(flags)) if flags else 1.0
            if first_accuracy < 0 and flags and rolling_acc >= tau:
                first_accuracy = episode
            energies.append(stats["energy_per_minute"])
            rewards.append(stats["mean_reward"])
            writer.writerow(MetricsRecord(
                run_id, agent_cfg.tag, seed, "train", episode, stats["mean_reward"],
                stats["energy_per_minute"], stats["e_tran"], stats["e_deal"], stats["e_up"],
                stats["e_abnormal"], stats["mean_t1"], stats["mean_sleep"], stats["accuracy"],
                rolling_acc, float(np.mean(energies)), float(np.mean(energies[-ENERGY_WINDOW:])),
                time.perf_counter() - start).row())
            if episode % cfg.eval_every == 0 or episode == cfg.n_episodes:
                ev = evaluate(agent, env, eval_set)
                last_eval = ev
                writer.writerow(MetricsRecord(
                    run_id, agent_cfg.tag, seed, "eval", episode, ev["mean_reward"],
                    ev["energy_per_minute"], ev["e_tran"], ev["e_deal"], ev["e_up"],
                    ev["e_abnormal"], ev["mean_t1"], ev["mean_sleep"], ev["accuracy"],
                    ev["accuracy"], float(np.mean(energies)),
                    float(np.mean(energies[-ENERGY_WINDOW:])),
                    time.perf_counter() - start).row())
    train_seconds = time.perf_counter() - start

    save_checkpoint(agent, out_dir / "checkpoint.json", cfg, env)
    return RunSummary(
        agent=agent_cfg.tag, seed=seed,
        train_energy_per_minute=float(np.mean(energies)),
        final_eval_energy_per_minute=last_eval["energy_per_minute"],
        final_eval_accuracy=last_eval["accuracy"],
        first_accuracy_episode=first_accuracy,
        convergence_episode=convergence_episode(rewards),
        final_mean_reward=float(np.mean(rewards[-CONVERGENCE_WINDOW:])),
        mean_t1_final=last_eval["mean_t1"],
        train_seconds=train_seconds,
        run_dir=str(out_dir))


# checkpoints

def _params_dict(agent_cfg_params) -> dict | None:
    if agent_cfg_params is None:
        return None
    out = asdict(agent_cfg_params)
    return {k: list(v) if isinstance(v, tuple) else v for k, v in out.items()}


def save_checkpoint(agent: Agent, path, cfg: ExperimentConfig, env: DormancyEnv) -> None:
    """Save the agent plus everything needed to rebuild it and re-check its greedy actions."""
    tl = verification_timeline(cfg.system, cfg.rounds_per_episode, cfg.timeline_mode)
    actions = evaluate(agent, env, [tl])["actions"]
    meta = {
        "system": cfg.system.to_dict(),
        "params": _params_dict(getattr(agent, "params", None)),
        "rounds_per_episode": cfg.rounds_per_episode,
        "total_rounds": cfg.total_rounds,
        "timeline_mode": cfg.timeline_mode,
        "extended_observation": cfg.extended_observation,
        "accuracy_penalty": cfg.accuracy_penalty,
        "verification_actions": actions,
    }
    agent.save(path, meta)


def agent_from_checkpoint(path) -> tuple[Agent, DormancyEnv, dict]:
    tensors, meta = checkpoint.load(path)
    tag = meta.get("agent")
    if tag not in AGENTS:
        raise CheckpointError(f"checkpoint names unknown agent {tag!r}")
    system_dict = {k: tuple(v) if isinstance(v, list) else v for k, v in meta["system"].items()}
    system = SystemConfig(**system_dict)
    env = DormancyEnv(system, meta["rounds_per_episode"], meta["extended_observation"],
                      meta.get("accuracy_penalty", 0.0))
    params_cls = AGENTS[tag][1]
    params = None
    if params_cls is not None:
        raw = {k: tuple(v) if isinstance(v, list) else v for k, v in meta["params"].items()}
        params = params_cls(**raw)
    agent = make_agent(tag, env, params, seed=meta["seed"], total_rounds=meta["total_rounds"])
    checkpoint.check_shapes(agent.state_dict(), tensors)
    agent.load_state_dict(tensors)
    return agent, env, meta


def checkpoint_roundtrip(path) -> dict:
    """Reload a checkpoint and replay its verification timeline greedily.

    The report's ``identical`` flag is true when the reloaded agent takes
    exactly the actions recorded at save time.
    """
    agent, env, meta = agent_from_checkpoint(path)
    tl = verification_timeline(env.config, env.episode_length, meta["timeline_mode"])
    actions = evaluate(agent, env, [tl])["actions"]
    saved = meta["verification_actions"]
    return {"agent": meta["agent"], "identical": actions == saved,
            "saved_actions": saved, "reloaded_actions": actions}


# experiments

@dataclass
class ExperimentSummary:
    runs: list[RunSummary]
    output_dir: str

    def by_agent(self) -> dict[str, dict]:
        out = {}
        for tag in dict.fromkeys(r.agent for r in self.runs):
            rs = [r for r in self.runs if r.agent == tag]
            out[tag] = {
                "train_energy_per_minute": float(np.mean([r.train_energy_per_minute for r in rs])),
                "final_eval_energy_per_minute": float(np.mean([r.final_eval_energy_per_minute for r in rs])),
                "final_eval_accuracy": float(np.mean([r.final_eval_accuracy for r in rs])),
                "min_final_eval_accuracy": float(min(r.final_eval_accuracy for r in rs)),
                "convergence_episode": float(np.mean([r.convergence_episode for r in rs])),
                "first_accuracy_episode": float(np.mean([r.first_accuracy_episode for r in rs])),
                "train_seconds": float(np.sum([r.train_seconds for r in rs])),
            }
        return out


def _run_job(args):
    cfg, agent_cfg, seed, run_dir = args
    return run_single(cfg, agent_cfg, seed, run_dir)


def _write_manifest(out: Path, jobs, done: list[RunSummary], status: str, error: str = "") -> None:
    finished = {(r.agent, r.seed) for r in done}
    manifest = {"version": 1, "status": status, "error": error,
                "runs": [{"agent": a.tag, "seed": s, "dir": str(Path(d).relative_to(out)),
                          "complete": (a.tag, s) in finished} for _, a, s, d in jobs]}
    (out / "manifest.json").write_text(json.dumps(manifest, indent=1) + "\n")


def write_summary(summary: ExperimentSummary, out: Path) -> None:
    with open(out / "summary.csv", "w", newline="") as fh:
        fh.write(f"# mafsim-summary v1\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SUMMARY_COLUMNS)
        for r in summary.runs:
            writer.writerow([r.agent, r.seed] + [
                format(getattr(r, c), ".12g") if isinstance(getattr(r, c), float) else getattr(r, c)
                for c in SUMMARY_COLUMNS[2:]])
    payload = {"runs": [asdict(r) for r in summary.runs], "by_agent": summary.by_agent()}
    (out / "summary.json").write_text(json.dumps(payload, indent=1) + "\n")


def run_experiment(cfg: ExperimentConfig, workers: int = 1) -> ExperimentSummary:
    """Train and evaluate every (agent, seed) pair; per-run outputs live in
    ``<output_dir>/<agent>/seed<k>/``."""
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.ini").write_text(cfg.to_text())
    jobs = [(cfg, a, s, str(out / a.tag / f"seed{s}")) for a in cfg.agents for s in cfg.seeds]
    done: list[RunSummary] = []
    try:
        if workers > 1:
            with ProcessPoolExecutor(workers) as pool:
                for summary in pool.map(_run_job, jobs):
                    done.append(summary)
        else:
            for job in jobs:
                log.info("training %s seed %d", job[1].tag, job[2])
                done.append(_run_job(job))
                _write_manifest(out, jobs, done, "running")
        summary = ExperimentSummary(done, str(out))
        write_summary(summary, out)
    except OSError as exc:
        try:
            _write_manifest(out, jobs, done, "aborted", str(exc))
        finally:
            raise
    _write_manifest(out, jobs, done, "complete")
    return summary


def read_metrics(path) -> list[dict]:
    """Rows of one metrics CSV (values left as strings)."""
    with open(path, newline="") as fh:
        first = fh.readline().strip()
        if first != f"# {METRICS_VERSION}":
            raise ValueError(f"{path}: not a metrics file ({first!r})")
        return list(csv.DictReader(fh))
