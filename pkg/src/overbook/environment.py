"""Episodic booking environment: accept or deny each request as it arrives.

Decision points are passenger arrivals. Accepting credits the class fare
and books a seat; denying credits nothing and the passenger never returns.
Between decisions, cancellations of previously sold seats refund the full
fare and free the seat; each refund is folded into the reward of the step
that traverses it. There is no acceptance cap, so the booked count may
exceed capacity. At departure (time 0) overflow beyond capacity is bumped
starting from the highest fare class at ``bump_factor * fare`` per seat,
the penalty lands in the final step's reward, and the episode ends.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .market import EpisodeScript, MarketConfig

ACCEPT = 0
DENY = 1

STATE_DIM = 6


@dataclass(frozen=True)
class BookingState:
    """Observation at a decision point: requesting class, seats sold, clock."""

    latest_class: int
    booked: tuple[int, ...]
    time_remaining: float


@dataclass(frozen=True)
class BumpingOutcome:
    """Per-class bumped counts and the (non-positive) total penalty."""

    bumped: tuple[int, ...]
    cost: float


@dataclass(frozen=True)
class StepOutcome:
    reward: float
    next_state: BookingState | None
    terminal: bool
    cancelled: tuple[int, ...]


@dataclass(frozen=True)
class TraceEvent:
    """One line of an episode trace; reward is this event's contribution."""

    time: float
    event: str  # arrive | cancel | depart
    class_id: int  # 0 for depart
    action: str  # accept | deny | -
    reward: float
    booked: tuple[int, ...]


def terminal_bumping(booked: tuple[int, ...], config: MarketConfig) -> BumpingOutcome:
    """Bump overflow beyond capacity, highest fare class first.

    Returns the per-class bumped counts and the total penalty
    ``-sum(bumped_T * bump_factor_T * fare_T)``, which is 0 when the flight
    is at or under capacity.
    """
    if len(booked) != config.num_classes:
        raise ValueError("booked must have one count per fare class")
    if any(b < 0 for b in booked):
        raise ValueError("booked counts must be non-negative")
    overflow = max(0, sum(booked) - config.capacity)
    bumped = []
    remaining = overflow
    for count in booked:
        take = min(count, remaining)
        bumped.append(take)
        remaining -= take
    cost = -sum(
        eta * beta * fare
        for eta, beta, fare in zip(bumped, config.bump_factors, config.fares)
    )
    return BumpingOutcome(tuple(bumped), cost)


def encode_state(state: BookingState, config: MarketConfig) -> np.ndarray:
    """Encode a decision state as the fixed 6-feature network input.

    Only the shipped three-class market is encodable: features are the
    requesting class over 3, each class's booked count over capacity, time
    remaining over the horizon, and a constant bias input of 1.
    """
    n = config.num_classes
    if n != 3:
        raise ValueError("state encoding is defined for exactly 3 fare classes")
    if not 1 <= state.latest_class <= n:
        raise ValueError("latest_class out of range")
    cap = float(config.capacity)
    return np.array(
        [
            state.latest_class / n,
            state.booked[0] / cap,
            state.booked[1] / cap,
            state.booked[2] / cap,
            state.time_remaining / config.horizon,
            1.0,
        ],
        dtype=np.float64,
    )


class BookingEnv:
    """Replays one script as an accept/deny decision process.

    ``reset`` positions the episode at the first arrival and returns its
    state, or returns None for an empty script (immediately terminal,
    revenue 0). ``step`` applies one decision and advances to the next
    arrival or to departure, folding any traversed cancellation refunds
    into the returned reward. Stepping a terminal episode is a usage error.
    """

    def __init__(self, config: MarketConfig):
        self.config = config
        self._done = True
        self._events: list[TraceEvent] = []

    @property
    def done(self) -> bool:
        return self._done

    @property
    def trace(self) -> list[TraceEvent]:
        return list(self._events)

    def reset(self, script: EpisodeScript) -> BookingState | None:
        for p in script:
            if p.class_id > self.config.num_classes:
                raise ValueError("script class_id exceeds configured class count")
            if p.arrival_time > self.config.horizon:
                raise ValueError("script arrival_time exceeds configured horizon")
        self._passengers = script.passengers
        self._index = 0
        self._booked = [0] * self.config.num_classes
        self._pending: list[tuple[float, int, int, float]] = []  # (elapsed, order, class, t)
        self._push_count = 0
        self._events = []
        self._done = False
        if not self._passengers:
            self._finish(0.0)
            return None
        first = self._passengers[0]
        return BookingState(first.class_id, tuple(self._booked), first.arrival_time)

    def _finish(self, reward_so_far: float) -> StepOutcome:
        bump = terminal_bumping(tuple(self._booked), self.config)
        self._events.append(
            TraceEvent(0.0, "depart", 0, "-", bump.cost, tuple(self._booked))
        )
        self._done = True
        return StepOutcome(reward_so_far + bump.cost, None, True, ())

    def step(self, action: int) -> StepOutcome:
        if self._done:
            raise RuntimeError("episode is terminal; reset with a new script before stepping")
        if action not in (ACCEPT, DENY):
            raise ValueError("action must be ACCEPT (0) or DENY (1)")
        passenger = self._passengers[self._index]
        fare = self.config.fares[passenger.class_id - 1]
        reward = 0.0
        if action == ACCEPT:
            reward += fare
            self._booked[passenger.class_id - 1] += 1
            if passenger.will_cancel:
                elapsed = self.config.horizon - passenger.cancel_time
                heapq.heappush(
                    self._pending,
                    (elapsed, self._push_count, passenger.class_id, passenger.cancel_time),
                )
                self._push_count += 1
        self._events.append(
            TraceEvent(
                passenger.arrival_time,
                "arrive",
                passenger.class_id,
                "accept" if action == ACCEPT else "deny",
                fare if action == ACCEPT else 0.0,
                tuple(self._booked),
            )
        )

        self._index += 1
        at_departure = self._index >= len(self._passengers)
        if at_departure:
            target_elapsed = self.config.horizon
        else:
            target_elapsed = self.config.horizon - self._passengers[self._index].arrival_time

        cancelled = [0] * self.config.num_classes
        while self._pending and self._pending[0][0] <= target_elapsed:
            _, _, class_id, cancel_time = heapq.heappop(self._pending)
            class_fare = self.config.fares[class_id - 1]
            self._booked[class_id - 1] -= 1
            cancelled[class_id - 1] += 1
            reward -= class_fare
            self._events.append(
                TraceEvent(cancel_time, "cancel", class_id, "-", -class_fare, tuple(self._booked))
            )

        if at_departure:
            outcome = self._finish(reward)
            return StepOutcome(outcome.reward, None, True, tuple(cancelled))
        nxt = self._passengers[self._index]
        state = BookingState(nxt.class_id, tuple(self._booked), nxt.arrival_time)
        return StepOutcome(reward, state, False, tuple(cancelled))


def play_episode(
    script: EpisodeScript,
    config: MarketConfig,
    policy: Callable[[BookingState], int],
) -> list[TraceEvent]:
    """Run one full episode under ``policy`` and return its trace."""
    env = BookingEnv(config)
    state = env.reset(script)
    while state is not None:
        state = env.step(policy(state)).next_state
    return env.trace


def episode_revenue(trace: list[TraceEvent]) -> float:
    """Total revenue of a complete episode trace.

    The trace must contain exactly one departure event, at the end;
    anything else is an incomplete episode and is rejected.
    """
    if not trace or trace[-1].event != "depart":
        raise ValueError("incomplete trace: episode must end with a depart event")
    if sum(1 for e in trace if e.event == "depart") != 1:
        raise ValueError("trace must contain exactly one depart event")
    return sum(e.reward for e in trace)


def trace_to_text(trace: list[TraceEvent]) -> str:
    """Serialize a trace to the line-oriented debug format."""
    lines = []
    for e in trace:
        booked = ",".join(str(b) for b in e.booked)
        lines.append(
            f"t={e.time!r} event={e.event} class={e.class_id} "
            f"action={e.action} reward={e.reward!r} booked={booked}"
        )
    return "\n".join(lines) + "\n"
