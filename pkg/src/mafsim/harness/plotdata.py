"""Plot-ready series and gnuplot scripts from metrics CSVs (no rendering here).

Each series is exponentially smoothed: ``s[0] = y[0]``,
``s[i] = alpha * s[i-1] + (1 - alpha) * y[i]``. ``alpha = 0`` passes the raw
series through. Seeds of the same agent are averaged episode by episode
before smoothing.
"""

from __future__ import annotations

from collections import defaultdict
from pathlib import Path

import numpy as np

from mafsim.harness.runner import read_metrics

PANELS = {
    "reward": ("mean_reward", "mean reward per round"),
    "energy": ("energy_per_minute", "energy per minute (kW)"),
    "sleep": ("mean_sleep", "mean dormancy per round (min)"),
    "accuracy": ("rolling_accuracy", "monitoring accuracy (last 100 events)"),
}
DEFAULT_SMOOTHING = 0.9


def exponential_smoothing(values, alpha: float) -> np.ndarray:
    if not 0 <= alpha < 1:
        raise ValueError("smoothing factor must be in [0, 1)")
    y = np.asarray(values, dtype=float)
    if alpha == 0 or y.size == 0:
        return y.copy()
    out = np.empty_like(y)
    out[0] = y[0]
    for i in range(1, y.size):
        out[i] = alpha * out[i - 1] + (1.0 - alpha) * y[i]
    return out


def _metrics_files(metrics_path) -> list[Path]:
    path = Path(metrics_path)
    if path.is_dir():
        files = sorted(path.rglob("metrics.csv"))
    elif path.exists():
        files = [path]
    else:
        raise FileNotFoundError(f"{path} does not exist")
    if not files:
        raise ValueError(f"no metrics.csv under {path}")
    return files


def emit_plot_data(metrics_path, panel: str, out_dir, smoothing: float = DEFAULT_SMOOTHING,
                   phase: str = "train", tau: float = 0.93) -> list[Path]:
    """Write ``<panel>_<agent>.dat`` files plus ``<panel>.gp``; returns the written paths."""
    if panel not in PANELS:
        raise ValueError(f"unknown panel {panel!r}; expected one of {sorted(PANELS)}")
    column, ylabel = PANELS[panel]
    per_agent: dict[str, dict[int, list[float]]] = defaultdict(lambda: defaultdict(list))
    for path in _metrics_files(metrics_path):
        for row in read_metrics(path):
            if row["phase"] == phase:
                per_agent[row["agent"]][int(row["episode"])].append(float(row[column]))
    if not per_agent:
        raise ValueError(f"metrics at {metrics_path} contain no {phase!r} rows")

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    plot_cmds = []
    for agent in sorted(per_agent):
        episodes = sorted(per_agent[agent])
        y = [float(np.mean(per_agent[agent][e])) for e in episodes]
        s = exponential_smoothing(y, smoothing)
        fname = f"{panel}_{agent}.dat"
        with open(out / fname, "w") as fh:
            fh.write(f"# episode {column} (smoothing {smoothing})\n")
            for e, v in zip(episodes, s):
                fh.write(f"{e} {v:.10g}\n")
        written.append(out / fname)
        plot_cmds.append(f"'{fname}' using 1:2 with lines title '{agent}'")
    if panel == "accuracy":
        first = min(min(v) for v in per_agent.values())
        last = max(max(v) for v in per_agent.values())
        fname = "accuracy_tau.dat"
        (out / fname).write_text(f"# required accuracy\n{first} {tau}\n{last} {tau}\n")
        written.append(out / fname)
        plot_cmds.append(f"'{fname}' using 1:2 with lines dashtype 2 title 'tau = {tau:g}'")
    script = out / f"{panel}.gp"
    script.write_text(
        "set terminal pngcairo size 800,500\n"
        f"set output '{panel}.png'\n"
        "set xlabel 'episode'\n"
        f"set ylabel '{ylabel}'\n"
        "set key outside right\n"
        "plot " + ", \\\n     ".join(plot_cmds) + "\n")
    written.append(script)
    return written
