# %% [markdown]
# # Energy model walkthrough
#
# One decision round lasts T = 20 minutes. The monitor listens for t1 minutes
# and sleeps for the rest. Listening costs transmission, processing and upload
# energy. Sleeping through an anomaly costs the abnormal devices' power until
# the next round starts.

# %%
import numpy as np

from mafsim import SystemConfig
from mafsim.energy import abnormal_energy, round_e1, total_round_energy

cfg = SystemConfig()
print(cfg.to_dict())

# %% [markdown]
# With the defaults, a fully monitored round costs 1000 + 3400 + 200 kW·min,
# which works out to 50 + 170 + 10 = 230 kW per minute.

# %%
e_tran, e_deal, e_up = round_e1(cfg, cfg.round_duration)
print(f"transmission {e_tran:.1f}, processing {e_deal:.1f}, upload {e_up:.1f} kW*min")
print(f"per minute: {(e_tran + e_deal + e_up) / cfg.round_duration:.1f} kW")

# %% [markdown]
# The first three terms are linear in t1, so shorter monitoring is always
# cheaper. The catch is the fourth term: an anomaly that starts during the
# sleep keeps its devices drawing power until the round ends.

# %%
for t1 in (1, 5, 10, 15, 20):
    e1 = sum(round_e1(cfg, t1))
    # one event 3 minutes before the round ends, if it falls in the sleep window
    missed = [(d, 3.0) for d in range(cfg.abnormal_device_count)] if t1 <= 17 else []
    e2 = abnormal_energy(cfg, missed)
    b = total_round_energy(*round_e1(cfg, t1), e2)
    print(f"t1={t1:4.1f}  E1={e1:8.1f}  E2={e2:5.1f}  total={b.total:8.1f}  "
          f"reward={1 / b.total:.3e}")

# %% [markdown]
# Per-device parameters can be vectors. Halving the transmit power of the
# first half of the devices cuts the transmission term by a quarter.

# %%
p = np.where(np.arange(100) < 50, 0.25, 0.5)
print(round_e1(SystemConfig(device_tx_power=p), 20)[0], "vs", e_tran)
