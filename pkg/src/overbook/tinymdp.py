"""Tiny discrete booking MDP with an exact backward-induction solver.

A verification harness shaped like the real market but small enough to
solve exactly: a handful of decision epochs, at most one arrival per epoch
drawn from a fixed class distribution (including no arrival), a per-seat
per-epoch cancellation probability, and terminal bumping of overflow from
the highest fare class down. Within an epoch the order is: arrival and
accept/deny decision first, then one cancellation round. Because the state
space is enumerable, the learner's greedy value can be compared against
the exact optimum.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .agent import ACCEPT, DENY, AgentConfig, DqnTrainer
from .seeding import mix64

STATE_BUDGET = 10**6

STREAM_TINY_TRAIN = 11
STREAM_TINY_EVAL = 12


@dataclass(frozen=True)
class TinyMdpSpec:
    """A booking problem small enough for exhaustive solution."""

    epochs: int = 4
    capacity: int = 2
    fares: tuple[float, ...] = (300.0, 100.0)
    bump_factors: tuple[float, ...] = (2.0, 2.0)
    arrival_probs: tuple[float, ...] = (0.5, 0.4)
    cancel_prob: float = 0.10

    def __post_init__(self):
        object.__setattr__(self, "fares", tuple(float(f) for f in self.fares))
        object.__setattr__(self, "bump_factors", tuple(float(b) for b in self.bump_factors))
        object.__setattr__(self, "arrival_probs", tuple(float(p) for p in self.arrival_probs))
        if not 1 <= self.epochs <= 8:
            raise ValueError("epochs must lie in 1..8")
        if not 1 <= self.capacity <= 4:
            raise ValueError("capacity must lie in 1..4")
        if len(self.fares) < 1 or len(self.fares) > 3:
            raise ValueError("between 1 and 3 fare classes are supported")
        if any(f <= 0 for f in self.fares):
            raise ValueError("fares must be positive")
        if any(a <= b for a, b in zip(self.fares, self.fares[1:])):
            raise ValueError("fares must strictly decrease with class index")
        if len(self.bump_factors) != len(self.fares):
            raise ValueError("bump_factors must have one entry per fare class")
        if any(b < 0 for b in self.bump_factors):
            raise ValueError("bump_factors must be non-negative")
        if len(self.arrival_probs) != len(self.fares):
            raise ValueError("arrival_probs must have one entry per fare class")
        if any(p < 0 for p in self.arrival_probs) or sum(self.arrival_probs) > 1.0 + 1e-12:
            raise ValueError("arrival_probs must be non-negative and sum to at most 1")
        if not 0.0 <= self.cancel_prob <= 1.0:
            raise ValueError("cancel_prob must lie in [0, 1]")

    @property
    def num_classes(self) -> int:
        return len(self.fares)


def _terminal_value(booked: tuple[int, ...], spec: TinyMdpSpec) -> float:
    overflow = max(0, sum(booked) - spec.capacity)
    value = 0.0
    remaining = overflow
    for count, beta, fare in zip(booked, spec.bump_factors, spec.fares):
        take = min(count, remaining)
        remaining -= take
        value -= take * beta * fare
    return value


def _states_with_sum_at_most(n: int, bound: int):
    for combo in itertools.product(range(bound + 1), repeat=n):
        if sum(combo) <= bound:
            yield combo


def _binomial_pmf(count: int, q: float) -> list[float]:
    return [math.comb(count, k) * q**k * (1.0 - q) ** (count - k) for k in range(count + 1)]


def exact_dp_value(spec: TinyMdpSpec, state_budget: int = STATE_BUDGET) -> tuple[float, dict]:
    """Optimal expected value and argmax policy by backward induction.

    The value function is defined before the epoch's arrival draw. Per
    epoch: expectation over arrivals, max over accept/deny (ties resolve to
    accept), then expectation over per-seat cancellations with the refund
    charged per cancelled seat, and finally the terminal bumping value.
    Policy keys are ``(epoch, booked, class_id)``. Specs whose enumeration
    would exceed the state budget are rejected.
    """
    n = spec.num_classes
    num_states = sum(1 for _ in _states_with_sum_at_most(n, spec.epochs))
    if num_states * (spec.epochs + 1) > state_budget:
        raise ValueError("state space exceeds the exhaustive-enumeration budget")

    q = spec.cancel_prob
    p_none = 1.0 - sum(spec.arrival_probs)
    value = {
        b: _terminal_value(b, spec) for b in _states_with_sum_at_most(n, spec.epochs)
    }
    policy: dict[tuple[int, tuple[int, ...], int], int] = {}

    for epoch in range(spec.epochs - 1, -1, -1):
        nxt = value
        cancel_cache: dict[tuple[int, ...], float] = {}

        def after_cancellations(booked: tuple[int, ...]) -> float:
            cached = cancel_cache.get(booked)
            if cached is not None:
                return cached
            pmfs = [_binomial_pmf(count, q) for count in booked]
            total = 0.0
            for drops in itertools.product(*(range(c + 1) for c in booked)):
                prob = 1.0
                refund = 0.0
                for d, pmf, fare in zip(drops, pmfs, spec.fares):
                    prob *= pmf[d]
                    refund += d * fare
                survivors = tuple(c - d for c, d in zip(booked, drops))
                total += prob * (nxt[survivors] - refund)
            cancel_cache[booked] = total
            return total

        current = {}
        for booked in _states_with_sum_at_most(n, epoch):
            expected = p_none * after_cancellations(booked)
            for class_id in range(1, n + 1):
                p_arrive = spec.arrival_probs[class_id - 1]
                plus_one = tuple(
                    c + (1 if i == class_id - 1 else 0) for i, c in enumerate(booked)
                )
                accept_value = spec.fares[class_id - 1] + after_cancellations(plus_one)
                deny_value = after_cancellations(booked)
                if accept_value >= deny_value:
                    policy[(epoch, booked, class_id)] = ACCEPT
                    best = accept_value
                else:
                    policy[(epoch, booked, class_id)] = DENY
                    best = deny_value
                expected += p_arrive * best
            current[booked] = expected
        # keep terminal-side values for booked vectors unreachable this epoch
        merged = dict(value)
        merged.update(current)
        value = merged

    start = tuple([0] * n)
    return value[start], policy


def encode_tiny(class_id: int, booked: tuple[int, ...], epoch: int, spec: TinyMdpSpec) -> np.ndarray:
    """Map a tiny decision state onto the 6-feature network input layout."""
    slots = [0.0, 0.0, 0.0]
    for i, count in enumerate(booked):
        slots[i] = count / spec.capacity
    return np.array(
        [
            class_id / spec.num_classes,
            slots[0],
            slots[1],
            slots[2],
            (spec.epochs - epoch) / spec.epochs,
            1.0,
        ],
        dtype=np.float64,
    )


class TinyEnv:
    """One sampled episode of the tiny MDP, mirroring the market env contract.

    States are ``(class_id, booked, epoch)`` tuples at decision points.
    Draw order per epoch: one uniform for the arrival (cumulative over class
    probabilities, remainder meaning no arrival), then one binomial draw per
    class with a positive booked count for the cancellation round.
    """

    def __init__(self, spec: TinyMdpSpec, rng: np.random.Generator):
        self.spec = spec
        self.rng = rng
        self._done = True

    def _draw_arrival(self) -> int | None:
        u = self.rng.random()
        cumulative = 0.0
        for class_id, p in enumerate(self.spec.arrival_probs, start=1):
            cumulative += p
            if u < cumulative:
                return class_id
        return None

    def _cancel_round(self) -> float:
        refund = 0.0
        for i, count in enumerate(self._booked):
            if count > 0:
                drops = int(self.rng.binomial(count, self.spec.cancel_prob))
                if drops:
                    self._booked[i] -= drops
                    refund -= drops * self.spec.fares[i]
        return refund

    def reset(self) -> tuple[int, tuple[int, ...], int] | None:
        """Advance to the first decision, or finish a decision-free episode."""
        self._booked = [0] * self.spec.num_classes
        self._epoch = 0
        self._done = False
        while self._epoch < self.spec.epochs:
            arrival = self._draw_arrival()
            if arrival is not None:
                self._pending_class = arrival
                return (arrival, tuple(self._booked), self._epoch)
            # cancellation round with nothing booked: no draws, nothing to do
            self._epoch += 1
        self._done = True
        return None

    def step(self, action: int) -> tuple[float, tuple | None, bool]:
        if self._done:
            raise RuntimeError("episode is terminal")
        if action not in (ACCEPT, DENY):
            raise ValueError("action must be ACCEPT (0) or DENY (1)")
        spec = self.spec
        arrival_class = self._pending_class
        reward = 0.0
        if action == ACCEPT:
            reward += spec.fares[arrival_class - 1]
            self._booked[arrival_class - 1] += 1
        reward += self._cancel_round()
        self._epoch += 1
        while self._epoch < spec.epochs:
            arrival = self._draw_arrival()
            if arrival is not None:
                self._pending_class = arrival
                return reward, (arrival, tuple(self._booked), self._epoch), False
            reward += self._cancel_round()
            self._epoch += 1
        reward += _terminal_value(tuple(self._booked), spec)
        self._done = True
        return reward, None, True


def _run_decision(env: TinyEnv, decide) -> float:
    """Drive one episode with ``decide(class_id, booked, epoch)``; returns the return."""
    state = env.reset()
    total = 0.0
    while state is not None:
        reward, state, _ = env.step(decide(*state))
        total += reward
    return total


def simulate_policy(
    spec: TinyMdpSpec,
    decide: Callable[[int, tuple[int, ...], int], int],
    episodes: int,
    seed: int,
) -> float:
    """Monte Carlo estimate of a policy's expected episode value.

    Episode i draws from ``mix64(seed, 12, i)`` so estimates are
    reproducible and episodes are independent.
    """
    total = 0.0
    for i in range(episodes):
        env = TinyEnv(spec, np.random.default_rng(mix64(seed, STREAM_TINY_EVAL, i)))
        total += _run_decision(env, decide)
    return total / episodes


def dp_policy_decider(policy: dict) -> Callable[[int, tuple[int, ...], int], int]:
    def decide(class_id: int, booked: tuple[int, ...], epoch: int) -> int:
        return policy[(epoch, booked, class_id)]

    return decide


def tabulate_greedy(net, spec: TinyMdpSpec) -> Callable[[int, tuple[int, ...], int], int]:
    """Precompute the network's greedy action for every reachable state."""
    from .network import forward

    table = {}
    for epoch in range(spec.epochs):
        for booked in _states_with_sum_at_most(spec.num_classes, epoch):
            for class_id in range(1, spec.num_classes + 1):
                q = forward(net, encode_tiny(class_id, booked, epoch, spec))
                table[(epoch, booked, class_id)] = ACCEPT if q[ACCEPT] >= q[DENY] else DENY

    def decide(class_id: int, booked: tuple[int, ...], epoch: int) -> int:
        return table[(epoch, booked, class_id)]

    return decide


def train_tiny(spec: TinyMdpSpec, config: AgentConfig, seed: int):
    """Train the standard DQN machinery on tiny episodes; returns the network."""
    per_episode = max(1.0, spec.epochs * sum(spec.arrival_probs))
    total_steps = int(config.train_episodes * per_episode)
    trainer = DqnTrainer(config, total_steps, seed)
    for episode in range(config.train_episodes):
        env = TinyEnv(spec, np.random.default_rng(mix64(seed, STREAM_TINY_TRAIN, episode)))
        state = env.reset()
        while state is not None:
            features = encode_tiny(*state, spec)
            action = trainer.act(features)
            reward, next_state, terminal = env.step(action)
            next_features = None if terminal else encode_tiny(*next_state, spec)
            trainer.observe(features, action, reward, next_features, terminal)
            state = next_state
    return trainer.net
