"""Single-flight booking market: seeded generation of passenger request scripts.

Each fare class books as an independent Poisson process over the booking
horizon, realized by summing exponential inter-arrival gaps with mean
``horizon / class_mean``. Times are expressed in days remaining before
departure, so a script reads chronologically from large values down toward
zero. Each passenger independently pre-decides whether to cancel; a
canceller's cancellation instant is uniform over the open interval between
booking and departure.

Draw order is fixed so that scripts are reproducible across builds. Classes
are processed in ascending index, each on its own ``numpy`` PCG64 generator
seeded with ``mix64(seed, class_id)``. Within a class: first all
inter-arrival gaps, one uniform each via inverse-CDF sampling
(gap = -mean * log1p(-u)), then for each passenger in arrival order one
uniform for the cancel flag (cancel iff u < cancel_rate) and, only when
cancelling, one uniform u for the cancel time ``arrival_time * u``
(redrawn in the measure-zero case u == 0). The merged script is sorted by
non-increasing arrival time; simultaneous arrivals keep class index order,
then per-class draw order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .seeding import MASK64, mix64


@dataclass(frozen=True)
class MarketConfig:
    """Static description of one flight's booking market.

    Class indices run 1..n in order of strictly decreasing fare, so class 1
    is always the most expensive. ``bump_factors`` scale the fare into the
    denied-boarding penalty applied at departure.
    """

    capacity: int = 80
    horizon: float = 1000.0
    fares: tuple[float, ...] = (300.0, 200.0, 100.0)
    class_means: tuple[float, ...] = (33.0, 33.0, 34.0)
    cancel_rate: float = 0.10
    bump_factors: tuple[float, ...] = (2.0, 2.0, 2.0)

    def __post_init__(self):
        object.__setattr__(self, "fares", tuple(float(f) for f in self.fares))
        object.__setattr__(self, "class_means", tuple(float(m) for m in self.class_means))
        object.__setattr__(self, "bump_factors", tuple(float(b) for b in self.bump_factors))
        if int(self.capacity) != self.capacity or self.capacity < 1:
            raise ValueError("capacity must be an integer >= 1")
        object.__setattr__(self, "capacity", int(self.capacity))
        if not self.horizon > 0:
            raise ValueError("horizon must be positive")
        if len(self.fares) < 1:
            raise ValueError("at least one fare class is required")
        if any(f <= 0 for f in self.fares):
            raise ValueError("fares must be positive")
        if any(a <= b for a, b in zip(self.fares, self.fares[1:])):
            raise ValueError("fares must strictly decrease with class index")
        if len(self.class_means) != len(self.fares):
            raise ValueError("class_means must have one entry per fare class")
        if any(m < 0 for m in self.class_means):
            raise ValueError("class_means must be non-negative")
        if not 0.0 <= self.cancel_rate <= 1.0:
            raise ValueError("cancel_rate must lie in [0, 1]")
        if len(self.bump_factors) != len(self.fares):
            raise ValueError("bump_factors must have one entry per fare class")
        if any(b < 0 for b in self.bump_factors):
            raise ValueError("bump_factors must be non-negative")

    @property
    def num_classes(self) -> int:
        return len(self.fares)


@dataclass(frozen=True)
class PassengerRecord:
    """One booking request: class, request time, and pre-decided cancellation."""

    class_id: int
    arrival_time: float
    will_cancel: bool
    cancel_time: float | None = None

    def __post_init__(self):
        if self.class_id < 1:
            raise ValueError("class_id must be >= 1")
        if not self.arrival_time > 0:
            raise ValueError("arrival_time must be positive days remaining")
        if self.will_cancel:
            if self.cancel_time is None or not 0.0 < self.cancel_time < self.arrival_time:
                raise ValueError("cancel_time must lie strictly between 0 and arrival_time")
        elif self.cancel_time is not None:
            raise ValueError("cancel_time must be absent for non-cancelling passengers")


@dataclass(frozen=True)
class EpisodeScript:
    """A full episode's passenger sequence, sorted chronologically.

    Chronological means non-increasing days remaining. The generating seed
    rides along for provenance.
    """

    passengers: tuple[PassengerRecord, ...] = field(default_factory=tuple)
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "passengers", tuple(self.passengers))
        if not 0 <= self.seed <= MASK64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        times = [p.arrival_time for p in self.passengers]
        if any(a < b for a, b in zip(times, times[1:])):
            raise ValueError("passengers must be sorted by non-increasing arrival_time")

    def __len__(self) -> int:
        return len(self.passengers)

    def __iter__(self):
        return iter(self.passengers)


def sample_arrival_times(mean_count: float, horizon: float, rng: np.random.Generator) -> list[float]:
    """Sample one class's arrival times, in days remaining, newest first.

    Exponential gaps with mean ``horizon / mean_count`` are accumulated on the
    elapsed-time axis until the horizon is exhausted, which makes the number
    of returned times Poisson with mean ``mean_count``. Degenerate inputs
    (``mean_count <= 0`` or ``horizon <= 0``) yield an empty list without
    consuming any draws.
    """
    if mean_count <= 0.0 or horizon <= 0.0:
        return []
    mean_gap = horizon / mean_count
    times: list[float] = []
    elapsed = 0.0
    while True:
        elapsed += -mean_gap * math.log1p(-rng.random())
        if elapsed >= horizon:
            return times
        times.append(horizon - elapsed)


def assign_cancellation(
    arrival_time: float, cancel_rate: float, rng: np.random.Generator
) -> tuple[bool, float | None]:
    """Pre-decide a passenger's cancellation.

    Always consumes one uniform for the flag (cancel iff u < cancel_rate).
    Cancellers consume one further uniform for the cancellation instant,
    placed uniformly on the open interval (0, arrival_time).
    """
    if rng.random() >= cancel_rate:
        return False, None
    u = rng.random()
    while u == 0.0:
        u = rng.random()
    return True, arrival_time * u


def generate_script(config: MarketConfig, seed: int) -> EpisodeScript:
    """Generate the full episode script for ``seed``, deterministically.

    Each class draws from its own substream seeded with
    ``mix64(seed, class_id)``; see the module docstring for the exact draw
    order. The same (config, seed) pair always yields an identical script.
    """
    records: list[PassengerRecord] = []
    for class_id in range(1, config.num_classes + 1):
        rng = np.random.default_rng(mix64(seed, class_id))
        arrivals = sample_arrival_times(config.class_means[class_id - 1], config.horizon, rng)
        for arrival in arrivals:
            will_cancel, cancel_time = assign_cancellation(arrival, config.cancel_rate, rng)
            records.append(PassengerRecord(class_id, arrival, will_cancel, cancel_time))
    # stable sort: ties keep class index order, then per-class draw order
    records.sort(key=lambda r: -r.arrival_time)
    return EpisodeScript(tuple(records), seed)


def script_to_text(script: EpisodeScript) -> str:
    """Serialize a script to the line-oriented debug format.

    Header ``script seed=<u64> n=<count>``, then one
    ``class=<int> arrive=<decimal> cancel=<decimal|none>`` line per passenger
    in script order. Decimals are written with full round-trip precision.
    """
    lines = [f"script seed={script.seed} n={len(script)}"]
    for p in script:
        cancel = repr(p.cancel_time) if p.will_cancel else "none"
        lines.append(f"class={p.class_id} arrive={p.arrival_time!r} cancel={cancel}")
    return "\n".join(lines) + "\n"


def _field(token: str, key: str, line_no: int) -> str:
    prefix = key + "="
    if not token.startswith(prefix):
        raise ValueError(f"script line {line_no}: expected '{key}=...', got '{token}'")
    return token[len(prefix):]


def script_from_text(text: str) -> EpisodeScript:
    """Parse the format written by :func:`script_to_text`."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("script "):
        raise ValueError("script text must start with a 'script seed=... n=...' header")
    head = lines[0].split()
    if len(head) != 3:
        raise ValueError("malformed script header")
    seed = int(_field(head[1], "seed", 1))
    count = int(_field(head[2], "n", 1))
    if len(lines) - 1 != count:
        raise ValueError(f"script header promises {count} passengers, found {len(lines) - 1}")
    records = []
    for line_no, line in enumerate(lines[1:], start=2):
        tokens = line.split()
        if len(tokens) != 3:
            raise ValueError(f"script line {line_no}: expected 3 fields")
        class_id = int(_field(tokens[0], "class", line_no))
        arrival = float(_field(tokens[1], "arrive", line_no))
        cancel_text = _field(tokens[2], "cancel", line_no)
        if cancel_text == "none":
            records.append(PassengerRecord(class_id, arrival, False, None))
        else:
            records.append(PassengerRecord(class_id, arrival, True, float(cancel_text)))
    return EpisodeScript(tuple(records), seed)
