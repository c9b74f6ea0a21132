"""Command line harness: train, eval, grid, oracle, checks, report.

All commands read one optional config file and write CSVs (and, for
``report``, figure files) under ``--out``. Exit status is 0 only when all
requested work completed and every invoked check passed.
"""

from __future__ import annotations

import argparse
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from .agent import (
    STREAM_EVAL_SCRIPTS,
    AgentConfig,
    baseline_policy,
    evaluate_policy,
    greedy_policy,
    train,
)
from .config import (
    DISTRIBUTIONS,
    GRID_CANCEL_RATES,
    ConfigError,
    RunConfig,
    load_config,
)
from .environment import play_episode
from .market import MarketConfig, generate_script
from .metrics import (
    aggregate,
    class_distribution_id,
    hindsight_bound_check,
    hindsight_optimal,
    metrics_to_csv,
    summaries_to_csv,
)
from .network import gradient_check, init_network, load_weights, save_weights
from .seeding import mix64
from .tinymdp import TinyMdpSpec, exact_dp_value, simulate_policy, tabulate_greedy, train_tiny

STREAM_GRID_CELL = 6
STREAM_CHECKS = 7


def _load(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    if getattr(args, "seed", None) is not None:
        cfg = replace(cfg, seed=args.seed)
    return cfg


def _print_summary(label: str, metrics) -> None:
    row, series = aggregate(metrics, window=100)
    print(
        f"{label}: episodes={row.episodes} "
        f"avg_pct_optimal={row.avg_pct_optimal:.3f} "
        f"avg_acceptance_rate={row.avg_acceptance_rate:.3f} "
        f"avg_load_factor={row.avg_load_factor:.3f}"
    )


def run_train(cfg: RunConfig, out: Path) -> int:
    out.mkdir(parents=True, exist_ok=True)

    def progress(episode, m):
        if (episode + 1) % 500 == 0:
            print(
                f"episode {episode + 1}/{cfg.train_episodes} "
                f"pct_optimal={m.pct_optimal:.1f} epsilon={m.epsilon:.3f}",
                flush=True,
            )

    net, metrics = train(cfg.market, cfg.agent, cfg.seed, progress=progress)
    metrics_to_csv(metrics, out / cfg.train_csv)
    save_weights(net, out / cfg.weights_path)
    print(f"wrote {out / cfg.train_csv} and {out / cfg.weights_path}")
    if metrics:
        _print_summary("training", metrics)
    return 0


def run_eval(cfg: RunConfig, out: Path) -> int:
    if cfg.eval_episodes < 1:
        print("error: eval_episodes must be >= 1 for eval", file=sys.stderr)
        return 1
    out.mkdir(parents=True, exist_ok=True)
    net = load_weights(out / cfg.weights_path)
    policy = greedy_policy(net, cfg.market)
    metrics = evaluate_policy(policy, cfg.market, cfg.eval_episodes, cfg.seed)
    metrics_to_csv(metrics, out / cfg.eval_csv)
    row, _ = aggregate(
        metrics,
        window=100,
        cancel_rate=cfg.market.cancel_rate,
        class_distribution=class_distribution_id(cfg.market.class_means),
    )
    summaries_to_csv([row], out / cfg.summary_csv)
    print(f"wrote {out / cfg.eval_csv} and {out / cfg.summary_csv}")
    _print_summary("eval", metrics)
    return 0


def run_grid(cfg: RunConfig, out: Path) -> int:
    """Train and evaluate each cancellation-rate x demand-mix cell."""
    if cfg.eval_episodes < 1:
        print("error: eval_episodes must be >= 1 for grid", file=sys.stderr)
        return 1
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    cell_index = 0
    for cancel_rate in GRID_CANCEL_RATES:
        for dist_id in sorted(DISTRIBUTIONS):
            cell = f"cancel={cancel_rate:g} distribution={dist_id}"
            try:
                market = replace(
                    cfg.market,
                    cancel_rate=cancel_rate,
                    class_means=DISTRIBUTIONS[dist_id],
                )
                cell_seed = mix64(cfg.seed, STREAM_GRID_CELL, cell_index)
                cell_dir = out / f"cell_{int(round(cancel_rate * 100))}_{dist_id}"
                cell_dir.mkdir(parents=True, exist_ok=True)
                print(f"grid cell {cell}: training {cfg.train_episodes} episodes", flush=True)
                net, train_metrics = train(market, cfg.agent, cell_seed)
                metrics_to_csv(train_metrics, cell_dir / cfg.train_csv)
                save_weights(net, cell_dir / cfg.weights_path)
                eval_metrics = evaluate_policy(
                    greedy_policy(net, market), market, cfg.eval_episodes, cell_seed
                )
                metrics_to_csv(eval_metrics, cell_dir / cfg.eval_csv)
                row, _ = aggregate(
                    eval_metrics,
                    window=100,
                    cancel_rate=cancel_rate,
                    class_distribution=dist_id,
                )
                rows.append(row)
            except Exception as exc:
                print(f"error: grid cell {cell}: {exc}", file=sys.stderr)
                return 1
            cell_index += 1
    summaries_to_csv(rows, out / cfg.summary_csv)
    print(f"wrote {out / cfg.summary_csv}")
    return 0


def run_oracle(cfg: RunConfig) -> int:
    """Print hindsight-optimal revenues for the evaluation scripts."""
    print("episode,oracle_revenue,arrivals," + ",".join(
        f"accepted_c{i}" for i in range(1, cfg.market.num_classes + 1)
    ))
    for episode in range(cfg.eval_episodes):
        script = generate_script(cfg.market, mix64(cfg.seed, STREAM_EVAL_SCRIPTS, episode))
        best = hindsight_optimal(script, cfg.market)
        counts = ",".join(str(c) for c in best.accepted)
        print(f"{episode},{best.revenue!r},{len(script)},{counts}")
    return 0


def _check_gradcheck(seed: int) -> tuple[bool, str]:
    started = time.perf_counter()
    err = gradient_check(seed)
    elapsed = time.perf_counter() - started
    return err < 1e-4, f"max relative error {err:.3e} in {elapsed:.1f}s"


def _check_simstats(seed: int) -> tuple[bool, str]:
    scripts = 10_000
    market = MarketConfig()
    notes = []
    ok = True
    for rate_index, cancel_rate in enumerate((0.0, 0.10, 0.20)):
        config = replace(market, cancel_rate=cancel_rate)
        counts = np.zeros(config.num_classes)
        cancels = 0
        passengers = 0
        for i in range(scripts):
            script = generate_script(config, mix64(seed, STREAM_CHECKS, rate_index, i))
            for p in script:
                counts[p.class_id - 1] += 1
                passengers += 1
                cancels += p.will_cancel
        means = counts / scripts
        for mean, target in zip(means, config.class_means):
            if abs(mean - target) > 0.01 * target:
                ok = False
        fraction = cancels / passengers
        se = np.sqrt(max(cancel_rate * (1 - cancel_rate), 1e-12) / passengers)
        if abs(fraction - cancel_rate) > 3 * se and cancel_rate > 0:
            ok = False
        if cancel_rate == 0 and fraction != 0:
            ok = False
        notes.append(
            f"rate {cancel_rate:g}: means {np.round(means, 2).tolist()} cancel {fraction:.4f}"
        )
    return ok, "; ".join(notes)


def _check_bound(seed: int) -> tuple[bool, str]:
    market = MarketConfig()
    rng = np.random.default_rng(mix64(seed, STREAM_CHECKS, 100))
    policies = {
        "deny_all": baseline_policy("deny_all"),
        "accept_all": baseline_policy("accept_all"),
        "random": baseline_policy("random", 0.5, rng),
        "greedy_random_net": greedy_policy(
            init_network(mix64(seed, STREAM_CHECKS, 101)), market
        ),
    }
    episodes = 1000
    checked = 0
    for name, policy in policies.items():
        for i in range(episodes):
            script = generate_script(market, mix64(seed, STREAM_CHECKS, 102, i))
            trace = play_episode(script, market, policy)
            if not hindsight_bound_check(script, trace, market):
                return False, f"policy {name} beat the hindsight bound on episode {i}"
            checked += 1
    return True, f"{checked} policy episodes respected the bound"


def _tiny_agent_config() -> AgentConfig:
    return AgentConfig(
        warmup_steps=500,
        target_sync_interval=250,
        train_episodes=20_000,
        buffer_capacity=20_000,
    )


def _check_tinydp(seed: int) -> tuple[bool, str]:
    spec = TinyMdpSpec()
    optimum, _ = exact_dp_value(spec)
    net = train_tiny(spec, _tiny_agent_config(), seed)
    estimate = simulate_policy(spec, tabulate_greedy(net, spec), 50_000, seed)
    gap = abs(estimate - optimum) / abs(optimum)
    return gap <= 0.02, (
        f"exact optimum {optimum:.3f}, greedy estimate {estimate:.3f}, gap {100 * gap:.2f}%"
    )


CHECKS = {
    "gradcheck": _check_gradcheck,
    "simstats": _check_simstats,
    "bound": _check_bound,
    "tinydp": _check_tinydp,
}


def run_checks(seed: int, only: str | None = None) -> int:
    names = list(CHECKS)
    if only is not None:
        if only not in CHECKS:
            print(f"error: unknown check {only!r}; choose from {names}", file=sys.stderr)
            return 1
        names = [only]
    failures = 0
    for name in names:
        ok, detail = CHECKS[name](seed)
        print(f"{name}: {'PASS' if ok else 'FAIL'} ({detail})", flush=True)
        failures += not ok
    return 0 if failures == 0 else 1


def run_report(cfg: RunConfig, out: Path, window: int) -> int:
    from .plots import render_metrics_figures

    rendered = []
    for name in (cfg.train_csv, cfg.eval_csv):
        path = out / name
        if path.exists():
            rendered.extend(render_metrics_figures(path, out, window))
    if not rendered:
        print(f"error: no metrics CSVs found under {out}", file=sys.stderr)
        return 1
    for path in rendered:
        print(f"wrote {path}")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="overbook",
        description="Booking-control experiments: simulate, train, evaluate, verify.",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, default=None, help="config file path")
    common.add_argument("--seed", type=int, default=None, help="master seed override")
    common.add_argument("--out", type=Path, default=Path("."), help="output directory")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("train", parents=[common], help="train an agent, write CSV and weights")
    sub.add_parser("eval", parents=[common], help="evaluate saved weights greedily")
    sub.add_parser("grid", parents=[common], help="train/eval the 3x3 experiment grid")
    sub.add_parser("oracle", parents=[common], help="print hindsight revenues for eval scripts")
    checks = sub.add_parser("checks", parents=[common], help="run verification checks")
    checks.add_argument("--only", default=None, help="run a single named check")
    report = sub.add_parser("report", parents=[common], help="render figures from metric CSVs")
    report.add_argument("--window", type=int, default=100, help="moving-average window")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "train":
            return run_train(_load(args), args.out)
        if args.command == "eval":
            return run_eval(_load(args), args.out)
        if args.command == "grid":
            return run_grid(_load(args), args.out)
        if args.command == "oracle":
            return run_oracle(_load(args))
        if args.command == "checks":
            cfg = _load(args)
            return run_checks(cfg.seed, args.only)
        if args.command == "report":
            return run_report(_load(args), args.out, args.window)
        raise AssertionError(f"unhandled command {args.command}")
    except (ConfigError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
