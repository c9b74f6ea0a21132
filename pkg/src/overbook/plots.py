"""Render metric CSVs to figure files for the CLI report path.

Figures are static PNGs written next to the delimited output: raw
per-episode series in light gray with the trailing moving average drawn in
red on top.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .metrics import moving_average, read_metrics_csv

_RAW = dict(color="0.75", linewidth=0.6)
_AVG = dict(color="tab:red", linewidth=1.6)


def _series_figure(episodes, values, window, ylabel, title, path, reference=None):
    fig, ax = plt.subplots(figsize=(7.2, 4.2))
    ax.plot(episodes, values, **_RAW, label="per episode")
    ax.plot(episodes, moving_average(values, window), **_AVG, label=f"moving average ({window})")
    if reference is not None:
        ax.axhline(reference, color="0.4", linestyle=":", linewidth=1.0)
    ax.set_xlabel("episode")
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.legend(loc="lower right", frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_metrics_figures(csv_path, out_dir=None, window: int = 100) -> list[Path]:
    """Render the four standard figures for one metrics CSV.

    Returns the written paths. Output files are named after the CSV stem
    (``train_metrics.csv`` gives ``train_optimal_reward.png`` and so on)
    and land alongside the CSV unless ``out_dir`` says otherwise.
    """
    csv_path = Path(csv_path)
    out = Path(out_dir) if out_dir is not None else csv_path.parent
    out.mkdir(parents=True, exist_ok=True)
    data = read_metrics_csv(csv_path)
    episodes = data["episode"]
    prefix = csv_path.stem.removesuffix("_metrics")
    window = max(1, min(window, len(episodes)))

    written = []

    path = out / f"{prefix}_optimal_reward.png"
    _series_figure(
        episodes, data["pct_optimal"], window,
        "% of hindsight optimal revenue", "Revenue against the hindsight optimum", path,
    )
    written.append(path)

    path = out / f"{prefix}_acceptance_rate.png"
    _series_figure(
        episodes, data["acceptance_rate"], window,
        "acceptance rate (%)", "Share of requests accepted", path,
    )
    written.append(path)

    path = out / f"{prefix}_load_factor.png"
    _series_figure(
        episodes, data["load_factor"], window,
        "load factor (%)", "Seats sold at departure relative to capacity", path,
        reference=100.0,
    )
    written.append(path)

    path = out / f"{prefix}_seat_distribution.png"
    fig, ax = plt.subplots(figsize=(7.2, 4.2))
    for column, label, color in (
        ("booked_c1", "class 1", "tab:blue"),
        ("booked_c2", "class 2", "tab:orange"),
        ("booked_c3", "class 3", "tab:green"),
    ):
        ax.plot(episodes, data[column], color=color, alpha=0.25, linewidth=0.5)
        ax.plot(
            episodes,
            moving_average(data[column], window),
            color=color,
            linewidth=1.6,
            label=label,
        )
    ax.set_xlabel("episode")
    ax.set_ylabel("seats sold at departure")
    ax.set_title("Seat distribution by fare class")
    ax.legend(loc="upper left", frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    written.append(path)

    return written
