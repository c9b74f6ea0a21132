"""Overbook: seat inventory control on a simulated single-flight market.

A seedable booking-market simulator, an accept/deny decision environment
with cancellations and overbooking, a from-scratch deep Q-learning agent,
and the oracles used to verify it (hindsight-optimal revenue and an exact
solver for tiny instances).
"""

from .agent import (
    AgentConfig,
    DqnTrainer,
    Experience,
    ReplayBuffer,
    baseline_policy,
    epsilon_at,
    evaluate_policy,
    greedy_policy,
    select_action,
    sync_target,
    td_target,
    train,
)
from .environment import (
    ACCEPT,
    DENY,
    BookingEnv,
    BookingState,
    BumpingOutcome,
    StepOutcome,
    TraceEvent,
    encode_state,
    episode_revenue,
    play_episode,
    terminal_bumping,
    trace_to_text,
)
from .market import (
    EpisodeScript,
    MarketConfig,
    PassengerRecord,
    assign_cancellation,
    generate_script,
    sample_arrival_times,
    script_from_text,
    script_to_text,
)
from .metrics import (
    EpisodeMetrics,
    HindsightAllocation,
    SummaryRow,
    aggregate,
    episode_metrics,
    hindsight_bound_check,
    hindsight_optimal,
    metrics_to_csv,
    moving_average,
)
from .network import (
    QNetwork,
    TrainingBatch,
    apply_update,
    forward,
    gradient_check,
    init_network,
    load_weights,
    save_weights,
    td_gradients,
)
from .seeding import mix64
from .tinymdp import TinyMdpSpec, exact_dp_value, simulate_policy, train_tiny

__version__ = "0.1.0"

__all__ = [
    "ACCEPT",
    "DENY",
    "AgentConfig",
    "BookingEnv",
    "BookingState",
    "BumpingOutcome",
    "DqnTrainer",
    "EpisodeMetrics",
    "EpisodeScript",
    "Experience",
    "HindsightAllocation",
    "MarketConfig",
    "PassengerRecord",
    "QNetwork",
    "ReplayBuffer",
    "StepOutcome",
    "SummaryRow",
    "TinyMdpSpec",
    "TraceEvent",
    "TrainingBatch",
    "aggregate",
    "apply_update",
    "assign_cancellation",
    "baseline_policy",
    "encode_state",
    "episode_metrics",
    "episode_revenue",
    "epsilon_at",
    "evaluate_policy",
    "exact_dp_value",
    "forward",
    "generate_script",
    "gradient_check",
    "greedy_policy",
    "hindsight_bound_check",
    "hindsight_optimal",
    "init_network",
    "load_weights",
    "metrics_to_csv",
    "mix64",
    "moving_average",
    "play_episode",
    "sample_arrival_times",
    "save_weights",
    "script_from_text",
    "script_to_text",
    "select_action",
    "simulate_policy",
    "sync_target",
    "td_gradients",
    "td_target",
    "terminal_bumping",
    "trace_to_text",
    "train",
    "train_tiny",
]
