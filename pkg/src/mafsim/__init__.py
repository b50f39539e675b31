"""Dormancy-scheduled failure monitoring for sliced IoT clusters: energy model,
anomaly simulator, environment and RL agents."""

from mafsim.anomaly import AnomalyEvent, AnomalyTimeline, build_timeline, resolve_round
from mafsim.energy import (EnergyBreakdown, SystemConfig, abnormal_energy, round_e1,
                           total_round_energy, transmission_rate, upload_frequency)
from mafsim.env import DormancyEnv, RoundOutcome

__version__ = "0.1.0"

__all__ = ["AnomalyEvent", "AnomalyTimeline", "build_timeline", "resolve_round",
           "EnergyBreakdown", "SystemConfig", "abnormal_energy", "round_e1",
           "total_round_energy", "transmission_rate", "upload_frequency", "DormancyEnv",
           "RoundOutcome"]
