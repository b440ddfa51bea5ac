"""Command-line entry point: run / train / eval / compare / plot.

Exit codes: 0 success, 1 configuration or usage error, 2 runtime/training error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import AGENT_KINDS, load_config
from .errors import ConfigError, SimulationError
from .harness import (
    QUEUE_HEADER,
    STEERING_HEADER,
    TRACE_HEADER,
    build_policy,
    derive_stream_seed,
    eval_seeds_for,
    evaluate_agent,
    parse_scenario,
    run_episode,
    run_experiment,
    save_policy,
    steering_rows,
    train_agent,
)
from .output import emit_csv, emit_plot, read_csv
from .radio import bs_rows, build_topology, ue_rows


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="INI config file (defaults used when omitted)")
    p.add_argument("--seed", type=int, help="override master_seed")
    p.add_argument("--agent", choices=AGENT_KINDS, help="override the agent selector")
    p.add_argument("--out", help="override output directory")
    p.add_argument("--scenario", help="override scenario file path")


def _load(args) -> "ExperimentConfig":
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg.master_seed = args.seed
    if args.agent is not None:
        cfg.agent = args.agent
    if args.out is not None:
        cfg.output_dir = args.out
    if getattr(args, "scenario", None) is not None:
        cfg.scenario_path = args.scenario
    return cfg.validate()


def _scenario(cfg):
    return parse_scenario(cfg.scenario_path) if cfg.scenario_path else None


def cmd_run(args) -> int:
    cfg = _load(args)
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    ckpt = Path(args.checkpoints) if args.checkpoints else None
    policy = build_policy(cfg, cfg.agent, checkpoint_dir=ckpt)
    seed = derive_stream_seed(cfg.master_seed, "eval:0")
    log = run_episode(cfg, policy, seed, training=False, scenario=_scenario(cfg),
                      collect_queue_rows=True, collect_traffic_trace=True)
    emit_csv(out / "steering.csv", "steering-events", STEERING_HEADER, steering_rows(log))
    emit_csv(out / "queues.csv", "queue-tti", QUEUE_HEADER, [r[:5] for r in log.queue_rows])
    emit_csv(out / "trace.csv", "traffic-trace", TRACE_HEADER, log.traffic_trace)
    topo = build_topology(cfg.n_small_cells, cfg.n_ues, cfg.macro_radius_m,
                          derive_stream_seed(seed, "topology"),
                          traffic_mix=cfg.traffic_mix, min_site_distance_m=cfg.min_site_distance_m)
    emit_csv(out / "topology_bs.csv", "topology-bs", ["bs_id", "rat", "x", "y"], bs_rows(topo))
    emit_csv(out / "topology_ue.csv", "topology-ue",
             ["ue_id", "x", "y", "traffic_type", "serving_nr_bs"], ue_rows(topo))
    m = log.metrics
    print(f"agent={cfg.agent} seed={seed} trace={log.trace_hash[:12]}")
    print(f"throughput {m.avg_throughput_bps / 1e6:.3f} Mbps, delay {m.avg_delay_ms:.2f} ms, "
          f"drop ratio {m.drop_ratio:.4f}, steering events {len(log.steering_events())}")
    return 0


def cmd_train(args) -> int:
    cfg = _load(args)
    if cfg.agent == "heuristic":
        raise ConfigError("the heuristic needs no training; pick --agent hdqn or dqn")
    policy = train_agent(cfg, cfg.agent, _scenario(cfg))
    save_policy(policy, cfg.output_dir)
    print(f"trained {cfg.agent} for {cfg.n_train_episodes} episodes; checkpoints in {cfg.output_dir}")
    return 0


def cmd_eval(args) -> int:
    cfg = _load(args)
    ckpt = Path(args.checkpoints) if args.checkpoints else Path(cfg.output_dir)
    policy = build_policy(cfg, cfg.agent, checkpoint_dir=ckpt if cfg.agent != "heuristic" else None)
    logs = evaluate_agent(cfg, policy, eval_seeds_for(cfg), _scenario(cfg))
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = [
        (cfg.agent, i, log.episode_seed, log.metrics.avg_throughput_bps,
         log.metrics.avg_delay_ms, log.metrics.drop_ratio)
        for i, log in enumerate(logs)
    ]
    emit_csv(out / f"eval_{cfg.agent}.csv", "per-seed-metrics",
             ["agent", "seed_index", "episode_seed", "throughput_bps", "delay_ms", "drop_ratio"], rows)
    for i, log in enumerate(logs):
        m = log.metrics
        print(f"seed[{i}] throughput {m.avg_throughput_bps / 1e6:.3f} Mbps, "
              f"delay {m.avg_delay_ms:.2f} ms, drop {m.drop_ratio:.4f}")
    return 0


def cmd_compare(args) -> int:
    cfg = _load(args)
    result = run_experiment(cfg)
    print(f"{'agent':<10} {'thr Mbps':>10} {'±':>8} {'delay ms':>10} {'±':>8} {'drop':>8}")
    for row in result.table_rows():
        print(f"{row[0]:<10} {row[1] / 1e6:>10.3f} {row[2] / 1e6:>8.3f} "
              f"{row[3]:>10.2f} {row[4]:>8.2f} {row[5]:>8.4f}")
    for row in result.gain_rows():
        print(f"hdqn vs {row[0]}: throughput {row[1] * 100:+.2f}%, delay {row[2] * 100:+.2f}%")
    print(f"CSVs + checkpoints in {cfg.output_dir}")
    return 0


def cmd_plot(args) -> int:
    if args.kind == "bars":
        schema, _, rows = read_csv(args.input)
        if schema != "comparison":
            raise ConfigError(f"bars plot wants a comparison CSV, got schema {schema!r}")
        table = [(r[0], float(r[1]), float(r[2]), float(r[3]), float(r[4]), float(r[5])) for r in rows]
        emit_plot(table, "bars", args.output)
    else:
        schema, _, rows = read_csv(args.input)
        if schema != "steering-events":
            raise ConfigError(f"timeline plot wants a steering-events CSV, got schema {schema!r}")
        episode_ttis = max((int(r[0]) for r in rows), default=0) + 1
        decided: dict[tuple[int, int], tuple] = {}
        last_rat: dict[int, str] = {}
        decision_rows = []
        for r in sorted(rows, key=lambda r: (int(r[0]), int(r[1]))):
            tti, ue, traffic, rat = int(r[0]), int(r[1]), r[2], r[3]
            changed = ue in last_rat and last_rat[ue] != rat
            last_rat[ue] = rat
            decision_rows.append((tti, ue, traffic, rat, changed))
        emit_plot((decision_rows, episode_ttis), "timeline", args.output)
    print(f"wrote {args.output}")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="steersim",
                                     description="multi-RAT traffic steering simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="single evaluation episode with CSV dumps")
    _add_common(p)
    p.add_argument("--checkpoints", help="directory with trained checkpoints")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("train", help="train the selected learner")
    _add_common(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate on the shared evaluation seeds")
    _add_common(p)
    p.add_argument("--checkpoints", help="directory with trained checkpoints")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("compare", help="full three-agent comparison experiment")
    _add_common(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("plot", help="render a CSV as a deterministic SVG")
    p.add_argument("kind", choices=("bars", "timeline"))
    p.add_argument("input", help="comparison or steering-events CSV")
    p.add_argument("output", help="SVG path")
    p.set_defaults(func=cmd_plot)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except SimulationError as exc:
        print(f"simulation error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
