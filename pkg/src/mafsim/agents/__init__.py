from mafsim.agents.base import Agent, EpisodeResult
from mafsim.agents.baseline import FullMonitorAgent, full_monitor_policy
from mafsim.agents.ddpg import DDPGAgent, DDPGParams
from mafsim.agents.dqn import DQNAgent, DQNParams
from mafsim.agents.ppo import PPOAgent, PPOParams
from mafsim.agents.replay import ReplayBuffer

AGENTS = {
    "ppo": (PPOAgent, PPOParams),
    "dqn": (DQNAgent, DQNParams),
    "ddpg": (DDPGAgent, DDPGParams),
    "full-monitor": (FullMonitorAgent, None),
}


def make_agent(tag: str, env, params=None, seed: int = 0, total_rounds: int = 15000) -> Agent:
    try:
        cls, params_cls = AGENTS[tag]
    except KeyError:
        raise ValueError(f"unknown agent {tag!r}; expected one of {sorted(AGENTS)}") from None
    if params_cls is None:
        return cls(env, seed=seed, total_rounds=total_rounds)
    return cls(env, params=params or params_cls(), seed=seed, total_rounds=total_rounds)


__all__ = ["AGENTS", "Agent", "EpisodeResult", "FullMonitorAgent", "full_monitor_policy",
           "DDPGAgent", "DDPGParams", "DQNAgent", "DQNParams", "PPOAgent", "PPOParams",
           "ReplayBuffer", "make_agent"]
