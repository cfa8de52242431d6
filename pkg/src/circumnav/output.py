"""Trajectory CSV and SVG figure writers."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from circumnav.analysis import ErrorSeries
from circumnav.sim import TrajectoryLog

AGENT_COLUMNS = (
    "x", "y", "xhat", "yhat", "u_x", "u_y", "psi", "betahat", "dhat", "d", "delta", "btilde", "xtilde_norm",
)


def csv_header(n: int) -> list[str]:
    cols = ["t"]
    for i in range(1, n + 1):
        cols += [f"{c}_{i}" for c in AGENT_COLUMNS]
    return cols


def csv_table(log: TrajectoryLog, errors: ErrorSeries) -> np.ndarray:
    per_agent = np.stack(
        (
            log.positions[..., 0], log.positions[..., 1],
            log.estimates[..., 0], log.estimates[..., 1],
            log.controls[..., 0], log.controls[..., 1],
            log.psi, log.betahat, log.dhat,
            errors.d, errors.delta, errors.btilde, errors.xtilde_norm,
        ),
        axis=-1,
    )
    return np.column_stack((log.times, per_agent.reshape(len(log), -1)))


def write_csv(path: Path, log: TrajectoryLog, errors: ErrorSeries) -> None:
    np.savetxt(path, csv_table(log, errors), fmt="%.17g", delimiter=",",
               header=",".join(csv_header(log.n)), comments="")


def read_csv(path: Path) -> tuple[list[str], np.ndarray]:
    with open(path) as fh:
        header = fh.readline().strip().split(",")
    return header, np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)


def write_plots(out_dir: Path, log: TrajectoryLog, errors: ErrorSeries) -> list[Path]:
    """Four SVG panels: trajectories, ||xtilde_i||, delta_i and btilde_i."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams.update({
        "svg.hashsalt": "circumnav",
        "svg.fonttype": "none",
        "font.family": "DejaVu Sans",
        "font.size": 9,
        "lines.linewidth": 1.0,
        "axes.prop_cycle": matplotlib.cycler(color=[
            "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f",
        ]),
    })
    # plots only need a few thousand points per curve
    k = max(1, len(log) // 4000)
    t = log.times[::k]
    pos = log.positions[::k]
    labels = [f"agent {i + 1}" for i in range(log.n)]
    panels = []

    fig, ax = plt.subplots(figsize=(5, 5))
    for i in range(log.n):
        ax.plot(pos[:, i, 0], pos[:, i, 1], label=labels[i])
        ax.plot(*pos[0, i], "o", ms=3, color=ax.lines[-1].get_color())
    ax.plot(*log.config.target, "kx", ms=6, label="target")
    ax.set_aspect("equal")
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    ax.set_title("(a) trajectories")
    ax.legend(fontsize=7, loc="upper right")
    panels.append(("a_trajectories.svg", fig))

    for name, title, ylabel, series, log_y in (
        ("b_xtilde.svg", "(b) estimation error", "||xtilde_i|| [m]", errors.xtilde_norm, True),
        ("c_delta.svg", "(c) distance error", "delta_i [m]", errors.delta, False),
        ("d_btilde.svg", "(d) separation error", "btilde_i [rad]", errors.btilde, False),
    ):
        fig, ax = plt.subplots(figsize=(6, 3.5))
        for i in range(log.n):
            ax.plot(t, series[::k, i], label=labels[i])
        if log_y:
            ax.set_yscale("log")
        ax.set_xlabel("t [s]")
        ax.set_ylabel(ylabel)
        ax.set_title(title)
        ax.grid(True, lw=0.3)
        ax.legend(fontsize=7, loc="upper right")
        panels.append((name, fig))

    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for name, fig in panels:
        path = out_dir / name
        fig.savefig(path, format="svg", metadata={"Date": None}, bbox_inches="tight")
        plt.close(fig)
        paths.append(path)
    return paths
