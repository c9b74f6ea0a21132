"""Line-oriented run configuration: ``key=value``, ``#`` comments, comma lists.

Every key has a default, so an empty file is a valid configuration and
describes the shipped desk-scale market (capacity 80, horizon 1000, fares
300/200/100, demand 33/33/34, 10% cancellation, bump factor 2). Validation
errors always name the offending line.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .agent import AgentConfig
from .market import MarketConfig
from .seeding import MASK64

DISTRIBUTIONS = {
    1: (10.0, 30.0, 60.0),
    2: (60.0, 30.0, 10.0),
    3: (33.0, 33.0, 34.0),
}

GRID_CANCEL_RATES = (0.0, 0.10, 0.20)


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    """Everything a command needs: market, agent, seed, episode counts, paths."""

    market: MarketConfig = field(default_factory=MarketConfig)
    agent: AgentConfig = field(default_factory=AgentConfig)
    seed: int = 1
    eval_episodes: int = 300
    weights_path: str = "weights.txt"
    train_csv: str = "train_metrics.csv"
    eval_csv: str = "eval_metrics.csv"
    summary_csv: str = "summary.csv"

    def __post_init__(self):
        if not 0 <= self.seed <= MASK64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        if self.eval_episodes < 0:
            raise ValueError("eval_episodes must be >= 0")
        paths = [self.weights_path, self.train_csv, self.eval_csv, self.summary_csv]
        if any(not p for p in paths):
            raise ValueError("output paths must be non-empty")
        if len(set(paths)) != len(paths):
            raise ValueError("output paths must be distinct")

    @property
    def train_episodes(self) -> int:
        return self.agent.train_episodes


def _parse_float_list(text: str) -> tuple[float, ...]:
    parts = [p.strip() for p in text.split(",")]
    if any(not p for p in parts):
        raise ValueError("empty list element")
    return tuple(float(p) for p in parts)


# key -> (section, attribute, parser)
_KEYS = {
    "capacity": ("market", "capacity", int),
    "horizon": ("market", "horizon", float),
    "fares": ("market", "fares", _parse_float_list),
    "class_means": ("market", "class_means", _parse_float_list),
    "cancel_rate": ("market", "cancel_rate", float),
    "beta": ("market", "bump_factors", _parse_float_list),
    "gamma": ("agent", "gamma", float),
    "buffer_capacity": ("agent", "buffer_capacity", int),
    "batch_size": ("agent", "batch_size", int),
    "warmup_steps": ("agent", "warmup_steps", int),
    "target_sync_interval": ("agent", "target_sync_interval", int),
    "eps_start": ("agent", "eps_start", float),
    "eps_end": ("agent", "eps_end", float),
    "eps_anneal_fraction": ("agent", "eps_anneal_fraction", float),
    "base_rate": ("agent", "base_rate", float),
    "train_episodes": ("agent", "train_episodes", int),
    "reward_scale": ("agent", "reward_scale", float),
    "seed": ("run", "seed", int),
    "eval_episodes": ("run", "eval_episodes", int),
    "weights_path": ("run", "weights_path", str),
    "train_csv": ("run", "train_csv", str),
    "eval_csv": ("run", "eval_csv", str),
    "summary_csv": ("run", "summary_csv", str),
}


def _build(assignments: list[tuple[int, str, str, object]]) -> RunConfig:
    """Construct a RunConfig from parsed assignments (later wins)."""
    sections: dict[str, dict[str, object]] = {"market": {}, "agent": {}, "run": {}}
    for _, _, key, value in assignments:
        section, attr, _ = _KEYS[key]
        sections[section][attr] = value
    market_kwargs = sections["market"]
    # a scalar beta expands to one factor per fare class
    if "bump_factors" in market_kwargs and len(market_kwargs["bump_factors"]) == 1:
        n = len(market_kwargs.get("fares", MarketConfig().fares))
        market_kwargs["bump_factors"] = market_kwargs["bump_factors"] * n
    market = MarketConfig(**market_kwargs)
    agent = AgentConfig(**sections["agent"])
    return RunConfig(market=market, agent=agent, **sections["run"])


def parse_config(text: str) -> RunConfig:
    """Parse configuration text into a validated RunConfig.

    Later assignments override earlier ones. Unknown keys, malformed
    values, and violated invariants raise ConfigError naming the line.
    """
    assignments: list[tuple[int, str, str, object]] = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {line_no}: expected key=value, got {raw.strip()!r}")
        key, _, value_text = line.partition("=")
        key = key.strip()
        value_text = value_text.strip()
        if key not in _KEYS:
            raise ConfigError(f"line {line_no}: unknown key {key!r}")
        parser = _KEYS[key][2]
        try:
            value = parser(value_text)
        except ValueError as exc:
            raise ConfigError(f"line {line_no}: malformed value for {key!r}: {exc}") from exc
        assignments.append((line_no, raw.rstrip(), key, value))

    try:
        return _build(assignments)
    except ValueError:
        pass
    # something is inconsistent: replay assignments in order and name the
    # first line whose addition makes the configuration invalid
    for upto in range(len(assignments)):
        try:
            _build(assignments[: upto + 1])
        except ValueError as exc:
            line_no, raw, _, _ = assignments[upto]
            raise ConfigError(f"line {line_no} ({raw!r}): {exc}") from exc
    return _build(assignments)  # unreachable; re-raises if logic above missed


def load_config(path) -> RunConfig:
    with open(path) as fh:
        return parse_config(fh.read())


def _trim(value) -> str:
    if isinstance(value, float) and value == int(value):
        return str(int(value))
    return str(value)


def config_defaults() -> dict[str, str]:
    """The documented default for every recognized key, as config text."""
    run = RunConfig()
    values = {}
    for key, (section, attr, _) in _KEYS.items():
        source = {"market": run.market, "agent": run.agent, "run": run}[section]
        value = getattr(source, attr)
        if isinstance(value, tuple):
            values[key] = ",".join(_trim(v) for v in value)
        else:
            values[key] = _trim(value)
    return values
