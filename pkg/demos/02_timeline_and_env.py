# %% [markdown]
# # Anomalies and the dormancy environment
#
# Anomalies are either strictly periodic (every T' minutes) or have uniform
# random gaps with the same mean. Each one hits a random set of devices.

# %%
import numpy as np

from mafsim import SystemConfig
from mafsim.anomaly import build_timeline, resolve_round
from mafsim.env import DormancyEnv

cfg = SystemConfig(anomaly_interval=15.0)
tl = build_timeline(cfg, horizon=100, mode="periodic")
for event in tl.events:
    print(event.occurrence_time, event.affected_devices)

# %% [markdown]
# Round 1 covers minutes [0, 20). Monitoring for 10 minutes misses the event
# at minute 15, which then persists for 5 minutes until the round ends.
# Monitoring for 16 minutes catches it.

# %%
for t1 in (10, 16):
    r = resolve_round(tl, 1, t1, cfg.round_duration)
    print(f"t1={t1}: caught {r.n_caught}, missed {[(e.occurrence_time, t3) for e, t3 in r.missed]}")

# %% [markdown]
# The environment wraps this in reset/step. The state is the per-device
# persistence of the last round's missed anomalies.

# %%
env = DormancyEnv(cfg, episode_length=5)
state = env.reset(build_timeline(cfg, 100, "uniform", seed=1))
rng = np.random.default_rng(0)
while not env.done:
    out = env.step(rng.uniform(1, 20))
    hit = np.flatnonzero(out.state_next)
    print(f"round {out.round_index}: t1={out.t1:5.2f}  total={out.energy.total:7.1f}  "
          f"caught {out.caught}/{out.total_events}  devices still abnormal: {hit.tolist()}")
print("episode accuracy:", env.accuracy())
