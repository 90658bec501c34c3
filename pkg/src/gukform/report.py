"""Run outputs: figure-data CSV files and rendered matplotlib figures.

Every simulate run writes, next to trace.csv and summary.json, plot-ready
CSV files and PNG renderings of the three standard views:

    trajectories  x-y paths of all robots with the region rectangles
    errors        per-follower tracking error norms over time
    torques       per-follower wheel torques over time

File names carry the figure index of the corresponding view in the
benchmark write-up: fig3/fig4/fig5 for region-off runs and fig6/fig7/fig8
for region-on runs.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .engine import SimTrace

_FMT = "{:.17g}"


def _write_csv(path: Path, header: list[str], columns: list[np.ndarray]) -> None:
    rows = np.column_stack(columns)
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_FMT.format(v) for v in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def figure_basenames(region_enabled: bool) -> dict:
    idx = {"trajectories": 6, "errors": 7, "torques": 8} if region_enabled else {
        "trajectories": 3, "errors": 4, "torques": 5,
    }
    return {view: f"fig{num}_{view}" for view, num in idx.items()}


def write_figure_data(trace: SimTrace, out_dir) -> list[Path]:
    """Write the three plot-ready CSV files; returns the created paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    k = trace.robot_count
    names = figure_basenames(trace.region_enabled)
    created = []

    header = ["t"]
    columns = [trace.t]
    for i in range(k):
        header += [f"x_{i}", f"y_{i}"]
        columns += [trace.q[:, 3 * i], trace.q[:, 3 * i + 1]]
    path = out / f"{names['trajectories']}.csv"
    _write_csv(path, header, columns)
    created.append(path)

    header = ["t"] + [f"e_norm_{i}" for i in range(1, k)] + ["e_total"]
    columns = [trace.t] + [trace.e_norm[:, i] for i in range(1, k)]
    columns.append(trace.e_norm[:, 1:].sum(axis=1))
    path = out / f"{names['errors']}.csv"
    _write_csv(path, header, columns)
    created.append(path)

    header = ["t"]
    columns = [trace.t]
    for i in range(1, k):
        header += [f"Ue_l_{i}", f"Ue_r_{i}", f"Ui_l_{i}", f"Ui_r_{i}"]
        columns += [
            trace.ue[:, 2 * i + 1], trace.ue[:, 2 * i],
            trace.ui[:, 2 * i + 1], trace.ui[:, 2 * i],
        ]
    path = out / f"{names['torques']}.csv"
    _write_csv(path, header, columns)
    created.append(path)
    return created


def _draw_region(ax, region) -> None:
    for (xb, yb), style in (
        ((region.x_outer, region.y_outer), "--"),
        ((region.x_inner, region.y_inner), "-"),
    ):
        xs = [xb[0], xb[1], xb[1], xb[0], xb[0]]
        ys = [yb[0], yb[0], yb[1], yb[1], yb[0]]
        ax.plot(xs, ys, style, color="0.4", linewidth=1.0)


def render_figures(trace: SimTrace, out_dir) -> list[Path]:
    """Render the three standard views as PNG files next to the CSV data."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    k = trace.robot_count
    names = figure_basenames(trace.region_enabled)
    colors = plt.cm.tab10(np.linspace(0, 1, 10))
    created = []

    fig, ax = plt.subplots(figsize=(7, 5))
    _draw_region(ax, trace.region)
    for i in range(k):
        label = "leader" if i == 0 else f"robot {i}"
        ax.plot(trace.q[:, 3 * i], trace.q[:, 3 * i + 1], color=colors[i % 10],
                linewidth=1.0, label=label)
        ax.plot(trace.q[0, 3 * i], trace.q[0, 3 * i + 1], "o", color=colors[i % 10],
                markerfacecolor="none")
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    ax.set_title("Robot trajectories")
    ax.legend(loc="best", fontsize=8)
    ax.set_aspect("equal", adjustable="datalim")
    path = out / f"{names['trajectories']}.png"
    fig.savefig(path, dpi=130, bbox_inches="tight")
    plt.close(fig)
    created.append(path)

    fig, ax = plt.subplots(figsize=(7, 4))
    for i in range(1, k):
        ax.plot(trace.t, trace.e_norm[:, i], color=colors[i % 10], linewidth=1.0,
                label=f"robot {i}")
    ax.set_xlabel("t [s]")
    ax.set_ylabel("||e_i(t)||")
    ax.set_title("Formation tracking errors")
    ax.legend(loc="best", fontsize=8)
    path = out / f"{names['errors']}.png"
    fig.savefig(path, dpi=130, bbox_inches="tight")
    plt.close(fig)
    created.append(path)

    nf = max(k - 1, 1)
    fig, axes = plt.subplots(nf, 1, figsize=(7, 2.2 * nf), sharex=True, squeeze=False)
    for i in range(1, k):
        ax = axes[i - 1, 0]
        ax.plot(trace.t, trace.ue[:, 2 * i + 1], color="tab:red", linewidth=0.9,
                label="left (tracking)")
        ax.plot(trace.t, trace.ue[:, 2 * i], color="tab:orange", linewidth=0.9,
                label="right (tracking)")
        if trace.region_enabled:
            ax.plot(trace.t, trace.ui[:, 2 * i + 1], color="tab:blue", linewidth=0.9,
                    label="left (region)")
            ax.plot(trace.t, trace.ui[:, 2 * i], color="tab:cyan", linewidth=0.9,
                    label="right (region)")
        ax.set_ylabel(f"U robot {i}")
        if i == 1:
            ax.legend(loc="best", fontsize=7)
    axes[-1, 0].set_xlabel("t [s]")
    fig.suptitle("Wheel driving torques")
    path = out / f"{names['torques']}.png"
    fig.savefig(path, dpi=130, bbox_inches="tight")
    plt.close(fig)
    created.append(path)
    return created


def write_run_outputs(trace: SimTrace, summary, out_dir) -> list[Path]:
    """Persist trace.csv, summary.json, figure data, and rendered figures."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    created = []
    trace_path = out / "trace.csv"
    trace.to_csv(trace_path)
    created.append(trace_path)
    summary_path = out / "summary.json"
    summary.to_json(summary_path)
    created.append(summary_path)
    created += write_figure_data(trace, out)
    created += render_figures(trace, out)
    return created
