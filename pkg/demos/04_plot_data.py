# %% [markdown]
# # Plot data from a finished run
#
# The harness does not draw figures. It writes smoothed `.dat` series plus a
# gnuplot script per panel. Usage: `python 04_plot_data.py RUN_DIR [OUT_DIR]`.

# %%
import sys
from pathlib import Path

from mafsim.harness.plotdata import PANELS, emit_plot_data

run_dir = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("runs")
out_dir = Path(sys.argv[2]) if len(sys.argv) > 2 else run_dir / "plots"

for panel in sorted(PANELS):
    for path in emit_plot_data(run_dir, panel, out_dir, smoothing=0.9):
        print(path)

# %% [markdown]
# Render with `cd OUT_DIR && gnuplot energy.gp`. The accuracy panel carries
# the 0.93 threshold as its own series.
