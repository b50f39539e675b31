from __future__ import annotations

from mafsim.agents.base import Agent


def full_monitor_policy(state, round_duration: float = 20.0) -> float:
    """Always monitor for the whole round."""
    return float(round_duration)


class FullMonitorAgent(Agent):
    """Always-on reference policy; it has nothing to learn."""

    tag = "full-monitor"

    def act(self, state, explore: bool = True):
        return full_monitor_policy(state, self.round_duration), {}
