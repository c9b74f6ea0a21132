"""Hindsight-optimal revenue, per-episode metrics, and run aggregation.

The hindsight oracle sees the whole script, keeps only passengers who never
cancel, and fills the cabin with the highest fares first. No policy that
decides online can beat it as long as every bump factor is at least 1, so
realized revenue is reported as a percentage of this upper bound.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .environment import TraceEvent, episode_revenue
from .market import EpisodeScript, MarketConfig

logger = logging.getLogger(__name__)

METRICS_HEADER = (
    "episode,revenue,oracle_revenue,pct_optimal,arrivals,accepted,"
    "acceptance_rate,load_factor,booked_c1,booked_c2,booked_c3,"
    "bumped_total,epsilon"
)

SUMMARY_HEADER = (
    "cancel_rate,class_distribution,avg_pct_optimal,"
    "avg_acceptance_rate,avg_load_factor,episodes"
)


@dataclass(frozen=True)
class HindsightAllocation:
    revenue: float
    accepted: tuple[int, ...]


def hindsight_optimal(script: EpisodeScript, config: MarketConfig) -> HindsightAllocation:
    """Best-possible revenue with full knowledge of the script.

    Non-cancelling passengers are sorted by fare (class index ascending,
    since fares strictly decrease) and accepted until capacity. Cancellers
    contribute nothing: accepting one nets fare minus refund, exactly 0.
    """
    counts = [0] * config.num_classes
    seats_left = config.capacity
    for class_id in range(1, config.num_classes + 1):
        if seats_left == 0:
            break
        stayers = sum(
            1 for p in script if p.class_id == class_id and not p.will_cancel
        )
        take = min(stayers, seats_left)
        counts[class_id - 1] = take
        seats_left -= take
    revenue = sum(c * f for c, f in zip(counts, config.fares))
    return HindsightAllocation(float(revenue), tuple(counts))


def hindsight_bound_check(
    script: EpisodeScript, trace: list[TraceEvent], config: MarketConfig
) -> bool:
    """True iff the trace's revenue respects the hindsight upper bound.

    The bound is only a theorem when every bump factor is >= 1 (bumping a
    seat must cost at least its fare); other configs are rejected.
    """
    if any(b < 1.0 for b in config.bump_factors):
        raise ValueError("hindsight bound requires every bump factor >= 1")
    return episode_revenue(trace) <= hindsight_optimal(script, config).revenue


@dataclass(frozen=True)
class EpisodeMetrics:
    """Per-episode scoreboard; percentages are on the 0..100 scale."""

    episode: int
    revenue: float
    oracle_revenue: float
    pct_optimal: float
    arrivals: int
    accepted: int
    acceptance_rate: float
    load_factor: float
    booked_per_class: tuple[int, ...]
    bumped_total: int
    epsilon: float = 0.0


def episode_metrics(
    trace: list[TraceEvent],
    oracle_revenue: float,
    config: MarketConfig,
    episode: int = 0,
    epsilon: float = 0.0,
) -> EpisodeMetrics:
    """Score one complete episode trace against its hindsight revenue.

    Load factor and per-class seat counts are taken at departure, before
    bumping, so overbooked episodes report load factors above 100.
    ``pct_optimal`` is 100 * revenue / oracle; a zero oracle with zero
    revenue scores 100, while a zero oracle with nonzero revenue is
    undefined (NaN) and later excluded from averages.
    """
    if oracle_revenue < 0:
        raise ValueError("oracle_revenue must be non-negative")
    revenue = episode_revenue(trace)
    arrivals = sum(1 for e in trace if e.event == "arrive")
    accepted = sum(1 for e in trace if e.event == "arrive" and e.action == "accept")
    final_booked = trace[-1].booked
    total_booked = sum(final_booked)
    if oracle_revenue > 0:
        pct = 100.0 * revenue / oracle_revenue
    elif revenue == 0:
        pct = 100.0
    else:
        pct = float("nan")
    return EpisodeMetrics(
        episode=episode,
        revenue=revenue,
        oracle_revenue=float(oracle_revenue),
        pct_optimal=pct,
        arrivals=arrivals,
        accepted=accepted,
        acceptance_rate=100.0 * accepted / arrivals if arrivals else 0.0,
        load_factor=100.0 * total_booked / config.capacity,
        booked_per_class=tuple(final_booked),
        bumped_total=max(0, total_booked - config.capacity),
        epsilon=epsilon,
    )


@dataclass(frozen=True)
class SummaryRow:
    cancel_rate: float
    class_distribution: int
    avg_pct_optimal: float
    avg_acceptance_rate: float
    avg_load_factor: float
    episodes: int


def moving_average(values: Sequence[float], window: int) -> np.ndarray:
    """Trailing moving average; entry i averages the last ``window`` values up to i."""
    if window < 1:
        raise ValueError("window must be >= 1")
    x = np.asarray(values, dtype=np.float64)
    c = np.concatenate(([0.0], np.cumsum(x)))
    hi = np.arange(1, len(x) + 1)
    lo = np.maximum(0, hi - window)
    return (c[hi] - c[lo]) / (hi - lo)


def aggregate(
    metrics: Sequence[EpisodeMetrics], window: int = 100,
    cancel_rate: float = float("nan"), class_distribution: int = 0,
) -> tuple[SummaryRow, dict[str, np.ndarray]]:
    """Summarize a run and compute trailing moving-average series.

    Episodes with undefined pct_optimal are dropped from the average with a
    logged warning. ``cancel_rate`` and ``class_distribution`` are labels
    carried into the summary row; they do not affect the statistics.
    """
    if not metrics:
        raise ValueError("cannot aggregate an empty metrics list")
    pct = np.array([m.pct_optimal for m in metrics])
    acceptance = np.array([m.acceptance_rate for m in metrics])
    load = np.array([m.load_factor for m in metrics])
    defined = np.isfinite(pct)
    if not defined.all():
        logger.warning(
            "excluding %d episode(s) with undefined pct_optimal from averages",
            int((~defined).sum()),
        )
    avg_pct = float(pct[defined].mean()) if defined.any() else float("nan")
    row = SummaryRow(
        cancel_rate=cancel_rate,
        class_distribution=class_distribution,
        avg_pct_optimal=avg_pct,
        avg_acceptance_rate=float(acceptance.mean()),
        avg_load_factor=float(load.mean()),
        episodes=len(metrics),
    )
    series = {
        "pct_optimal": moving_average(pct, window),
        "acceptance_rate": moving_average(acceptance, window),
        "load_factor": moving_average(load, window),
    }
    return row, series


def _num(x: float) -> str:
    return repr(float(x))


def metrics_to_csv(metrics: Iterable[EpisodeMetrics], path) -> None:
    """Write the per-episode metrics CSV (always 3 per-class seat columns)."""
    with open(path, "w", newline="") as fh:
        fh.write(METRICS_HEADER + "\n")
        for m in metrics:
            booked = list(m.booked_per_class) + [0] * (3 - len(m.booked_per_class))
            fh.write(
                ",".join(
                    [
                        str(m.episode),
                        _num(m.revenue),
                        _num(m.oracle_revenue),
                        _num(m.pct_optimal),
                        str(m.arrivals),
                        str(m.accepted),
                        _num(m.acceptance_rate),
                        _num(m.load_factor),
                        str(booked[0]),
                        str(booked[1]),
                        str(booked[2]),
                        str(m.bumped_total),
                        _num(m.epsilon),
                    ]
                )
                + "\n"
            )


def read_metrics_csv(path) -> dict[str, np.ndarray]:
    """Read a metrics CSV back as column arrays (floats throughout)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[float(v) for v in row] for row in reader]
    if not rows:
        raise ValueError(f"{path} contains no metric rows")
    data = np.array(rows)
    return {name: data[:, i] for i, name in enumerate(header)}


def summaries_to_csv(rows: Iterable[SummaryRow], path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(SUMMARY_HEADER + "\n")
        for r in rows:
            fh.write(
                ",".join(
                    [
                        _num(r.cancel_rate),
                        str(r.class_distribution),
                        _num(r.avg_pct_optimal),
                        _num(r.avg_acceptance_rate),
                        _num(r.avg_load_factor),
                        str(r.episodes),
                    ]
                )
                + "\n"
            )


def class_distribution_id(class_means: Sequence[float]) -> int:
    """Match class means against the three catalogued demand mixes (0 if none)."""
    catalogue = {1: (10.0, 30.0, 60.0), 2: (60.0, 30.0, 10.0), 3: (33.0, 33.0, 34.0)}
    means = tuple(float(m) for m in class_means)
    for dist_id, mix in catalogue.items():
        if means == mix:
            return dist_id
    return 0


def average_pct_optimal(metrics: Sequence[EpisodeMetrics]) -> float:
    """Mean pct_optimal over episodes where it is defined."""
    pct = np.array([m.pct_optimal for m in metrics])
    defined = np.isfinite(pct)
    if not defined.any():
        return float("nan")
    if not defined.all():
        logger.warning(
            "excluding %d episode(s) with undefined pct_optimal from averages",
            int((~defined).sum()),
        )
    return float(pct[defined].mean())
