"""Deep Q-learning over booking episodes.

Uniform experience replay (sampled with replacement), a periodically
hard-synced target network, and linear epsilon annealing over decision
steps. Rewards are stored in currency units; when TD targets are formed
they are divided by ``reward_scale``, which leaves the greedy policy
unchanged while keeping value magnitudes in a range the per-parameter
adaptive optimizer can reach quickly.

Sub-seed streams (labels passed to ``mix64`` with the master seed):
network init 1, action exploration 2, replay sampling 3, one per training
episode (4, episode), one per evaluation episode (5, episode).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .environment import ACCEPT, DENY, BookingEnv, BookingState, encode_state
from .market import MarketConfig, generate_script
from .metrics import EpisodeMetrics, episode_metrics, hindsight_optimal
from .network import (
    LAYER_DIMS,
    QNetwork,
    TrainingBatch,
    apply_update,
    forward,
    forward_batch,
    init_network,
    td_gradients,
)
from .seeding import mix64

STREAM_NET = 1
STREAM_ACTIONS = 2
STREAM_REPLAY = 3
STREAM_TRAIN_SCRIPTS = 4
STREAM_EVAL_SCRIPTS = 5


@dataclass(frozen=True)
class AgentConfig:
    """Training hyperparameters; defaults are the shipped desk-scale setup."""

    gamma: float = 0.99
    buffer_capacity: int = 50_000
    batch_size: int = 32
    warmup_steps: int = 1_000
    target_sync_interval: int = 500
    eps_start: float = 1.0
    eps_end: float = 0.1
    eps_anneal_fraction: float = 1.0
    base_rate: float = 1e-3
    train_episodes: int = 10_000
    reward_scale: float = 300.0

    def __post_init__(self):
        if not 0.0 < self.gamma <= 1.0:
            raise ValueError("gamma must lie in (0, 1]")
        if self.buffer_capacity < 1:
            raise ValueError("buffer_capacity must be >= 1")
        if not 1 <= self.batch_size <= self.buffer_capacity:
            raise ValueError("batch_size must lie in [1, buffer_capacity]")
        if self.warmup_steps < 0:
            raise ValueError("warmup_steps must be >= 0")
        if self.target_sync_interval < 1:
            raise ValueError("target_sync_interval must be >= 1")
        if not 0.0 <= self.eps_end <= self.eps_start <= 1.0:
            raise ValueError("need 0 <= eps_end <= eps_start <= 1")
        if not 0.0 <= self.eps_anneal_fraction <= 1.0:
            raise ValueError("eps_anneal_fraction must lie in [0, 1]")
        if not self.base_rate > 0:
            raise ValueError("base_rate must be positive")
        if self.train_episodes < 0:
            raise ValueError("train_episodes must be >= 0")
        if not self.reward_scale > 0:
            raise ValueError("reward_scale must be positive")


@dataclass(frozen=True)
class Experience:
    """One transition; next_features is None exactly for terminal steps."""

    features: np.ndarray
    action: int
    reward: float
    next_features: np.ndarray | None
    terminal: bool


@dataclass(frozen=True)
class SampledBatch:
    features: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    next_features: np.ndarray
    terminals: np.ndarray


class ReplayBuffer:
    """Fixed-capacity FIFO ring over transitions, stored as flat arrays."""

    def __init__(self, capacity: int, feature_dim: int):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self._features = np.zeros((capacity, feature_dim))
        self._actions = np.zeros(capacity, dtype=np.intp)
        self._rewards = np.zeros(capacity)
        self._next_features = np.zeros((capacity, feature_dim))
        self._terminals = np.zeros(capacity, dtype=bool)
        self._size = 0
        self._cursor = 0

    def __len__(self) -> int:
        return self._size

    def store(self, exp: Experience) -> None:
        """Append one transition, evicting the oldest once full."""
        i = self._cursor
        self._features[i] = exp.features
        self._actions[i] = exp.action
        self._rewards[i] = exp.reward
        self._next_features[i] = 0.0 if exp.next_features is None else exp.next_features
        self._terminals[i] = exp.terminal
        self._cursor = (i + 1) % self.capacity
        self._size = min(self._size + 1, self.capacity)

    def sample(self, batch_size: int, rng: np.random.Generator) -> SampledBatch:
        """Uniform sample with replacement; underfilled buffers are rejected."""
        if batch_size > self._size:
            raise ValueError(
                f"cannot sample {batch_size} transitions from a buffer holding {self._size}"
            )
        idx = rng.integers(0, self._size, size=batch_size)
        return SampledBatch(
            features=self._features[idx],
            actions=self._actions[idx],
            rewards=self._rewards[idx],
            next_features=self._next_features[idx],
            terminals=self._terminals[idx],
        )

    def contents(self) -> list[Experience]:
        """Transitions currently held, oldest first (for inspection)."""
        if self._size < self.capacity:
            order = range(self._size)
        else:
            order = [(self._cursor + k) % self.capacity for k in range(self.capacity)]
        return [
            Experience(
                self._features[i].copy(),
                int(self._actions[i]),
                float(self._rewards[i]),
                None if self._terminals[i] else self._next_features[i].copy(),
                bool(self._terminals[i]),
            )
            for i in order
        ]


def epsilon_at(step: int, config: AgentConfig, total_steps: int) -> float:
    """Linearly annealed exploration rate at a given decision step."""
    anneal_steps = config.eps_anneal_fraction * total_steps
    if anneal_steps <= 0:
        return config.eps_end
    frac = min(1.0, max(0.0, step) / anneal_steps)
    return config.eps_start + (config.eps_end - config.eps_start) * frac


def select_action(
    net: QNetwork,
    features: np.ndarray,
    epsilon: float,
    rng: np.random.Generator | None = None,
) -> int:
    """Epsilon-greedy action; greedy ties resolve to accept.

    With probability epsilon the action is uniform over {accept, deny}
    (one uniform for the explore flag, then one integer draw). The rng may
    be omitted only when epsilon is 0, and no draw is consumed then.
    """
    if epsilon > 0.0:
        if rng is None:
            raise ValueError("an rng is required when epsilon > 0")
        if rng.random() < epsilon:
            return int(rng.integers(0, 2))
    q = forward(net, features)
    return ACCEPT if q[ACCEPT] >= q[DENY] else DENY


def td_target(exp: Experience, target_net: QNetwork, gamma: float) -> float:
    """One-step TD target: r, plus the discounted best next value if non-terminal."""
    if exp.terminal:
        return float(exp.reward)
    q_next = forward(target_net, exp.next_features)
    return float(exp.reward + gamma * np.max(q_next))


def sync_target(net: QNetwork) -> QNetwork:
    """Deep copy for use as a frozen target network."""
    return QNetwork(
        net.layer_dims,
        [w.copy() for w in net.weights],
        [b.copy() for b in net.biases],
        [a.copy() for a in net.acc_weights],
        [a.copy() for a in net.acc_biases],
    )


class DqnTrainer:
    """Owns the online/target networks, the replay buffer, and the schedules.

    ``act`` picks an epsilon-greedy action for the current decision step;
    ``observe`` stores the transition and, once past warmup, performs one
    replay update (syncing the target every ``target_sync_interval``
    updates).
    """

    def __init__(
        self,
        config: AgentConfig,
        total_steps: int,
        seed: int,
        layer_dims: tuple[int, ...] | None = None,
    ):
        dims = LAYER_DIMS if layer_dims is None else tuple(layer_dims)
        self.config = config
        self.total_steps = total_steps
        self.net = init_network(mix64(seed, STREAM_NET), dims)
        self.target = sync_target(self.net)
        self.buffer = ReplayBuffer(config.buffer_capacity, dims[0])
        self._action_rng = np.random.default_rng(mix64(seed, STREAM_ACTIONS))
        self._replay_rng = np.random.default_rng(mix64(seed, STREAM_REPLAY))
        self.steps = 0
        self.updates = 0

    @property
    def epsilon(self) -> float:
        return epsilon_at(self.steps, self.config, self.total_steps)

    def act(self, features: np.ndarray) -> int:
        return select_action(self.net, features, self.epsilon, self._action_rng)

    def observe(
        self,
        features: np.ndarray,
        action: int,
        reward: float,
        next_features: np.ndarray | None,
        terminal: bool,
    ) -> float | None:
        """Record one transition; returns the update's loss when one runs."""
        cfg = self.config
        self.buffer.store(Experience(features, action, reward, next_features, terminal))
        self.steps += 1
        if self.steps < cfg.warmup_steps or len(self.buffer) < cfg.batch_size:
            return None
        batch = self.buffer.sample(cfg.batch_size, self._replay_rng)
        best_next = forward_batch(self.target, batch.next_features).max(axis=1)
        targets = batch.rewards / cfg.reward_scale + cfg.gamma * best_next * ~batch.terminals
        gradients, loss = td_gradients(
            self.net, TrainingBatch(batch.features, batch.actions, targets)
        )
        apply_update(self.net, gradients, cfg.base_rate)
        self.updates += 1
        if self.updates % cfg.target_sync_interval == 0:
            self.target = sync_target(self.net)
        return loss


def expected_decisions_per_episode(market: MarketConfig) -> int:
    return max(1, round(sum(market.class_means)))


def train(
    market: MarketConfig,
    config: AgentConfig,
    seed: int,
    progress: Callable[[int, EpisodeMetrics], None] | None = None,
) -> tuple[QNetwork, list[EpisodeMetrics]]:
    """Train a fresh network on seeded market episodes.

    Episode i replays ``generate_script(market, mix64(seed, 4, i))``, so the
    whole run, metrics included, is a pure function of (configs, seed).
    Returns the trained network and one EpisodeMetrics per episode, with
    epsilon recorded at each episode's first decision.
    """
    if market.num_classes != 3:
        raise ValueError("training requires the 3-class state encoding")
    total_steps = config.train_episodes * expected_decisions_per_episode(market)
    trainer = DqnTrainer(config, total_steps, seed)
    env = BookingEnv(market)
    history: list[EpisodeMetrics] = []
    for episode in range(config.train_episodes):
        eps_at_start = trainer.epsilon
        script = generate_script(market, mix64(seed, STREAM_TRAIN_SCRIPTS, episode))
        state = env.reset(script)
        while state is not None:
            features = encode_state(state, market)
            action = trainer.act(features)
            outcome = env.step(action)
            next_features = (
                None if outcome.terminal else encode_state(outcome.next_state, market)
            )
            trainer.observe(features, action, outcome.reward, next_features, outcome.terminal)
            state = outcome.next_state
        oracle = hindsight_optimal(script, market)
        m = episode_metrics(env.trace, oracle.revenue, market, episode, eps_at_start)
        history.append(m)
        if progress is not None:
            progress(episode, m)
    return trainer.net, history


def greedy_policy(net: QNetwork, config: MarketConfig) -> Callable[[BookingState], int]:
    """Deterministic policy: argmax of the network, ties to accept."""

    def policy(state: BookingState) -> int:
        return select_action(net, encode_state(state, config), 0.0, None)

    return policy


def baseline_policy(
    kind: str, p: float = 0.5, rng: np.random.Generator | None = None
) -> Callable[[BookingState], int]:
    """Reference policies: ``accept_all``, ``deny_all``, or ``random`` (P(accept)=p)."""
    if kind == "accept_all":
        return lambda state: ACCEPT
    if kind == "deny_all":
        return lambda state: DENY
    if kind == "random":
        if not 0.0 <= p <= 1.0:
            raise ValueError("p must lie in [0, 1]")
        if rng is None:
            raise ValueError("the random baseline needs an rng")
        return lambda state: ACCEPT if rng.random() < p else DENY
    raise ValueError(f"unknown baseline kind: {kind!r}")


def evaluate_policy(
    policy: Callable[[BookingState], int],
    market: MarketConfig,
    episodes: int,
    seed: int,
) -> list[EpisodeMetrics]:
    """Score a policy on fresh evaluation scripts (stream label 5)."""
    from .environment import play_episode

    results = []
    for episode in range(episodes):
        script = generate_script(market, mix64(seed, STREAM_EVAL_SCRIPTS, episode))
        trace = play_episode(script, market, policy)
        oracle = hindsight_optimal(script, market)
        results.append(episode_metrics(trace, oracle.revenue, market, episode))
    return results
