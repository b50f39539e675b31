# %% [markdown]
# # Training the four policies
#
# A short run on a 20-device slice trains PPO, DDPG and DQN and compares them
# with always-on monitoring. Pass `--full` to use the default 15000-round
# experiment (a few minutes per seed on one CPU core).

# %%
import sys
import tempfile

from mafsim.harness import parse_config, run_experiment

SHORT = """
[system]
devices_per_slice = 20
abnormal_device_count = 2

[experiment]
total_rounds = 3000
eval_every = 50
"""

text = "" if "--full" in sys.argv else SHORT
out = sys.argv[-1] if len(sys.argv) > 1 and not sys.argv[-1].startswith("--") else tempfile.mkdtemp()
cfg = parse_config(text).with_overrides(output_dir=out)
summary = run_experiment(cfg)

# %% [markdown]
# Training-mean energy per minute summarizes the whole learning curve, so it
# rewards agents that find cheap monitoring durations early.

# %%
for tag, row in summary.by_agent().items():
    print(f"{tag:13s} training mean {row['train_energy_per_minute']:7.2f} kW/min   "
          f"greedy {row['final_eval_energy_per_minute']:7.2f} kW/min   "
          f"accuracy {row['final_eval_accuracy']:.3f}   "
          f"converged ~episode {row['convergence_episode']:.0f}")
print("outputs in", out)
