from mafsim.harness.config import AgentConfig, ExperimentConfig, load_config, parse_config
from mafsim.harness.plotdata import emit_plot_data
from mafsim.harness.runner import (ExperimentSummary, MetricsRecord, RunSummary,
                                   agent_from_checkpoint, checkpoint_roundtrip, evaluate,
                                   run_experiment, run_single)

__all__ = ["AgentConfig", "ExperimentConfig", "load_config", "parse_config", "emit_plot_data",
           "ExperimentSummary", "MetricsRecord", "RunSummary", "agent_from_checkpoint",
           "checkpoint_roundtrip", "evaluate", "run_experiment", "run_single"]
