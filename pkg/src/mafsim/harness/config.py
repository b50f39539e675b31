"""Experiment configuration files.

Grammar (a strict subset of INI)::

    # comment            ; comment
    [system]             SystemConfig fields
    key = value
    [experiment]         ExperimentConfig scalar fields
    [agent.<tag>]        hyperparameters of one agent (ppo, dqn, ddpg)

Values are numbers, ``true``/``false``, ``none``, or comma-separated lists
(``seeds = 0, 1, 2``; per-device vectors; ``hidden = 64, 64``). Every key
that is not given falls back to its default and the default is logged.
Unknown sections or keys are errors.
"""

from __future__ import annotations

import configparser
import logging
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from mafsim.agents import AGENTS
from mafsim.anomaly import MODES
from mafsim.energy import SystemConfig
from mafsim.errors import ConfigError

log = logging.getLogger(__name__)


# hyperparameters that may be zero or negative
SIGNED_PARAMS = {"entropy_coef", "init_log_std"}


@dataclass(frozen=True)
class AgentConfig:
    tag: str
    params: object = None

    def __post_init__(self):
        if self.tag not in AGENTS:
            raise ConfigError(f"unknown agent tag {self.tag!r}; expected one of {sorted(AGENTS)}")
        params_cls = AGENTS[self.tag][1]
        if params_cls is not None and self.params is None:
            object.__setattr__(self, "params", params_cls())
        if self.params is not None:
            for f in fields(self.params):
                value = getattr(self.params, f.name)
                if isinstance(value, bool):
                    continue
                values = value if isinstance(value, tuple) else (value,)
                if f.name not in SIGNED_PARAMS and any(v <= 0 for v in values):
                    raise ConfigError(f"agent.{self.tag}.{f.name} must be > 0")


@dataclass(frozen=True)
class ExperimentConfig:
    system: SystemConfig = field(default_factory=SystemConfig)
    agents: tuple = ()
    total_rounds: int = 15000
    rounds_per_episode: int = 10
    eval_every: int = 10
    eval_episodes: int = 5
    seeds: tuple = (0,)
    timeline_mode: str = "periodic"
    output_dir: str = "runs"
    extended_observation: bool = False
    accuracy_penalty: float = 0.0

    def __post_init__(self):
        if not self.agents:
            object.__setattr__(self, "agents", tuple(AgentConfig(t) for t in DEFAULT_AGENTS))
        if self.rounds_per_episode < 1 or self.total_rounds < 1:
            raise ConfigError("total_rounds and rounds_per_episode must be >= 1")
        if self.total_rounds % self.rounds_per_episode:
            raise ConfigError("total_rounds must be divisible by rounds_per_episode")
        if self.eval_every < 1 or self.eval_episodes < 1:
            raise ConfigError("eval_every and eval_episodes must be >= 1")
        if self.timeline_mode not in MODES:
            raise ConfigError(f"timeline_mode must be one of {MODES}")
        if not self.seeds:
            raise ConfigError("at least one seed is required")
        if self.accuracy_penalty < 0:
            raise ConfigError("accuracy_penalty must be >= 0")
        tags = [a.tag for a in self.agents]
        if len(set(tags)) != len(tags):
            raise ConfigError("each agent may appear only once")

    @property
    def n_episodes(self) -> int:
        return self.total_rounds // self.rounds_per_episode

    def agent(self, tag: str) -> AgentConfig:
        for a in self.agents:
            if a.tag == tag:
                return a
        raise ConfigError(f"agent {tag!r} not configured")

    def with_overrides(self, seed=None, output_dir=None, agents=None) -> "ExperimentConfig":
        cfg = self
        if seed is not None:
            cfg = replace(cfg, seeds=(int(seed),))
        if output_dir is not None:
            cfg = replace(cfg, output_dir=str(output_dir))
        if agents:
            cfg = replace(cfg, agents=tuple(cfg.agent(t) if t in {a.tag for a in cfg.agents}
                                            else AgentConfig(t) for t in agents))
        return cfg

    def to_text(self) -> str:
        lines = ["[system]"]
        for name in SystemConfig.field_names():
            lines.append(f"{name} = {_format(getattr(self.system, name))}")
        lines += ["", "[experiment]"]
        lines.append(f"agents = {', '.join(a.tag for a in self.agents)}")
        for name in EXPERIMENT_KEYS:
            lines.append(f"{name} = {_format(getattr(self, name))}")
        for a in self.agents:
            if a.params is None:
                continue
            lines += ["", f"[agent.{a.tag}]"]
            for f in fields(a.params):
                lines.append(f"{f.name} = {_format(getattr(a.params, f.name))}")
        return "\n".join(lines) + "\n"


DEFAULT_AGENTS = ("ppo", "ddpg", "dqn", "full-monitor")
EXPERIMENT_KEYS = ("total_rounds", "rounds_per_episode", "eval_every", "eval_episodes", "seeds",
                   "timeline_mode", "output_dir", "extended_observation", "accuracy_penalty")


def _format(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (tuple, list)):
        return ", ".join(_format(v) for v in value)
    return str(value)


def _parse_like(key: str, text: str, default):
    text = text.strip()
    try:
        if text.lower() == "none":
            return None
        if isinstance(default, bool):
            if text.lower() not in ("true", "false", "yes", "no", "1", "0", "on", "off"):
                raise ValueError(text)
            return text.lower() in ("true", "yes", "1", "on")
        if isinstance(default, tuple):
            kind = type(default[0]) if default else float
            return tuple(kind(v) for v in text.split(",") if v.strip())
        if isinstance(default, int):
            return int(text)
        if isinstance(default, float) or default is None:
            if "," in text:
                return tuple(float(v) for v in text.split(","))
            return float(text)
        return text
    except ValueError:
        raise ConfigError(f"cannot parse {key} = {text!r}") from None


def _apply(section_name: str, section, cls, defaults_obj, known: list[str]) -> dict:
    values = {}
    for key, text in section.items():
        if key not in known:
            raise ConfigError(f"unknown key {key!r} in [{section_name}]")
        values[key] = _parse_like(f"{section_name}.{key}", text, getattr(defaults_obj, key))
    for key in known:
        if key not in values:
            log.info("default applied: %s.%s = %s", section_name, key,
                     _format(getattr(defaults_obj, key)))
    return values


def parse_config(text: str) -> ExperimentConfig:
    parser = configparser.ConfigParser(interpolation=None, comment_prefixes=("#", ";"),
                                       inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"config does not parse: {exc}") from None

    system_values = {}
    exp_values = {}
    agent_values: dict[str, dict] = {}
    agent_tags = None
    for name in parser.sections():
        section = parser[name]
        if name == "system":
            system_values = _apply("system", section, SystemConfig, SystemConfig(),
                                   SystemConfig.field_names())
        elif name == "experiment":
            section = dict(section)
            if "agents" in section:
                agent_tags = tuple(t.strip() for t in section.pop("agents").split(",") if t.strip())
            exp_values = _apply("experiment", section, ExperimentConfig, ExperimentConfig(),
                                list(EXPERIMENT_KEYS))
        elif name.startswith("agent."):
            tag = name[len("agent."):]
            if tag not in AGENTS:
                raise ConfigError(f"unknown agent section [{name}]")
            params_cls = AGENTS[tag][1]
            if params_cls is None:
                if len(section):
                    raise ConfigError(f"agent {tag!r} takes no parameters")
                agent_values[tag] = {}
                continue
            defaults = params_cls()
            agent_values[tag] = _apply(name, section, params_cls, defaults,
                                       [f.name for f in fields(params_cls)])
        else:
            raise ConfigError(f"unknown section [{name}]")

    if not parser.has_section("system"):
        _apply("system", {}, SystemConfig, SystemConfig(), SystemConfig.field_names())
    if not parser.has_section("experiment"):
        _apply("experiment", {}, ExperimentConfig, ExperimentConfig(), list(EXPERIMENT_KEYS))
    system = SystemConfig(**system_values)
    if agent_tags is None:
        agent_tags = tuple(dict.fromkeys((*DEFAULT_AGENTS, *agent_values)))
    agents = []
    for tag in agent_tags:
        if tag not in AGENTS:
            raise ConfigError(f"unknown agent tag {tag!r}")
        params_cls = AGENTS[tag][1]
        params = params_cls(**agent_values.get(tag, {})) if params_cls else None
        agents.append(AgentConfig(tag, params))
    return ExperimentConfig(system=system, agents=tuple(agents), **exp_values)


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file {path} does not exist")
    return parse_config(path.read_text())
