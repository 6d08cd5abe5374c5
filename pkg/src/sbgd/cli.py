"""Command line entry point: ``sbgd <subcommand> [options]``.

Exit codes: 0 success, 1 invalid configuration, 2 runtime error.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path as FilePath

import numpy as np

from .config import ExperimentConfig, gen_chain, load_config
from .dynamics import RoundRecord, fit_rate, run_adversarial, run_dynamics
from .errors import ConfigError, DegenerateSeries, SBGDError
from .learner import Schedule
from .polytope import caratheodory_decompose, project

CSV_HEADER = [
    "t", "agent_id", "realized_cost", "cum_cost", "avg_regret",
    "exploit_abs", "exploit_rel", "exploit_abs_avg", "exploit_rel_avg",
    "potential", "stat_gap",
]


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def write_csv(path: FilePath, records: list[RoundRecord]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for rec in records:
            if not rec.has_metrics:
                continue
            for i in range(len(rec.realized_cost)):
                writer.writerow([
                    _fmt(rec.t), _fmt(i), _fmt(rec.realized_cost[i]), _fmt(rec.cum_cost[i]),
                    _fmt(rec.regret[i] / rec.t),
                    _fmt(rec.exploit_abs), _fmt(rec.exploit_rel),
                    _fmt(rec.exploit_abs_avg), _fmt(rec.exploit_rel_avg),
                    _fmt(rec.potential), _fmt(rec.stat_gap),
                ])


def _slope(points) -> float | None:
    try:
        return fit_rate(points)
    except DegenerateSeries:
        return None


def _json_safe(value):
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def _dynamics_job(args: tuple) -> dict:
    cfg, seed, out_dir = args
    game = cfg.build_game()
    records = run_dynamics(game, cfg.build_schedules(game), cfg.T, seed, cfg.metric_stride, cfg.init)
    path = FilePath(out_dir) / f"dynamics_seed{seed}.csv"
    write_csv(path, records)
    metric = [r for r in records if r.has_metrics]
    last = metric[-1]
    return {
        "seed": seed,
        "csv": str(path),
        "final_avg_regret": [float(v) for v in last.avg_regret],
        "final_exploit_abs": _json_safe(last.exploit_abs),
        "final_exploit_rel": _json_safe(last.exploit_rel),
        "final_exploit_abs_avg": _json_safe(last.exploit_abs_avg),
        "final_exploit_rel_avg": _json_safe(last.exploit_rel_avg),
        "slope_exploit_rel_avg": _slope([(r.t, r.exploit_rel_avg) for r in metric]),
        "slope_avg_regret": [
            _slope([(r.t, r.regret[i] / r.t) for r in metric]) for i in range(game.n)
        ],
    }


def _adversarial_job(args: tuple) -> dict:
    cfg, seed, out_dir = args
    game = cfg.build_game()
    if not 0 <= cfg.agent < game.n:
        raise ConfigError(f"agent index {cfg.agent} out of range")
    poly = game.polytopes[cfg.agent]
    adversary = cfg.build_adversary()
    sched = dict(cfg.schedule)
    preset = sched.pop("preset", "default")
    schedule = Schedule.for_polytope(
        poly, preset, n=1, c_max=adversary.c_max, **{k: v for k, v in sched.items() if v is not None}
    )
    records, regret = run_adversarial(poly, schedule, adversary, cfg.T, seed, cfg.metric_stride, cfg.init)
    path = FilePath(out_dir) / f"adversarial_seed{seed}.csv"
    write_csv(path, records)
    metric = [r for r in records if r.has_metrics]
    return {
        "seed": seed,
        "csv": str(path),
        "regret": float(regret),
        "final_avg_regret": float(regret) / cfg.T,
        "slope_avg_regret": _slope([(r.t, r.regret[0] / r.t) for r in metric]),
    }


def _apply_overrides(cfg: ExperimentConfig, args) -> ExperimentConfig:
    if getattr(args, "seeds", None) is not None:
        cfg.seeds = list(range(args.seeds))
    if getattr(args, "stride", None) is not None:
        cfg.metric_stride = args.stride
    if getattr(args, "T", None) is not None:
        cfg.T = args.T
    if getattr(args, "out", None) is not None:
        cfg.output = args.out
    return cfg


def _run_jobs(job, cfg: ExperimentConfig, workers: int) -> list[dict]:
    tasks = [(cfg, seed, cfg.output) for seed in cfg.seeds]
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(job, tasks))
    return [job(task) for task in tasks]


def cmd_run_dynamics(args) -> int:
    cfg = _apply_overrides(load_config(args.config), args)
    runs = _run_jobs(_dynamics_job, cfg, args.workers)
    print(json.dumps({"command": "run-dynamics", "runs": runs}))
    return 0


def cmd_run_adversarial(args) -> int:
    cfg = _apply_overrides(load_config(args.config), args)
    runs = _run_jobs(_adversarial_job, cfg, args.workers)
    print(json.dumps({"command": "run-adversarial", "runs": runs}))
    return 0


def _agent_polytope(args):
    cfg = load_config(args.config)
    game = cfg.build_game()
    if not 0 <= args.agent < game.n:
        raise ConfigError(f"agent index {args.agent} out of range")
    return game.polytopes[args.agent]


def _parse_vector(text: str, name: str) -> np.ndarray:
    try:
        vec = np.array(json.loads(text), dtype=float)
    except (json.JSONDecodeError, TypeError, ValueError) as exc:
        raise SBGDError(f"--{name} must be a JSON list of numbers") from exc
    if vec.ndim != 1:
        raise SBGDError(f"--{name} must be a flat JSON list")
    return vec


def cmd_decompose(args) -> int:
    poly = _agent_polytope(args)
    mix = caratheodory_decompose(poly, _parse_vector(args.x, "x"))
    print(json.dumps({"atoms": [{"path": list(p), "w": w} for p, w in mix.atoms]}))
    return 0


def cmd_project(args) -> int:
    poly = _agent_polytope(args)
    y = _parse_vector(args.y, "y")
    mu = args.mu if args.mu is not None else poly.max_mu()
    x = project(poly.bounded(mu), y)
    print(json.dumps({"x": [float(v) for v in x], "mu": mu}))
    return 0


def cmd_gen_chain(args) -> int:
    print(json.dumps(gen_chain(args.segments, args.edges_per_segment)))
    return 0


def cmd_validate_config(args) -> int:
    cfg = load_config(args.config)
    game = cfg.build_game()
    print(json.dumps({"valid": True, "nodes": game.graph.node_count, "edges": game.m, "agents": game.n}))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sbgd", description="Semi-bandit gradient descent in network congestion games."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def run_parser(name: str, func, help_text: str):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="experiment JSON config")
        p.add_argument("--out", help="output directory for CSV files (overrides config)")
        p.add_argument("--seeds", type=int, help="run seeds 0..N-1 instead of the configured list")
        p.add_argument("--stride", type=int, help="metric stride K (overrides config)")
        p.add_argument("--T", type=int, help="horizon (overrides config)")
        p.add_argument("--workers", type=int, default=1, help="parallel worker processes")
        p.set_defaults(func=func)

    run_parser("run-dynamics", cmd_run_dynamics, "all agents learn simultaneously")
    run_parser("run-adversarial", cmd_run_adversarial, "one agent against a cost sequence")

    p = sub.add_parser("decompose", help="decompose a fractional point into paths")
    p.add_argument("--config", required=True)
    p.add_argument("--x", required=True, help="JSON list, one marginal per edge")
    p.add_argument("--agent", type=int, default=0)
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("project", help="project a vector onto an agent's bounded-away polytope")
    p.add_argument("--config", required=True)
    p.add_argument("--y", required=True, help="JSON list, one entry per edge")
    p.add_argument("--mu", type=float, help="exploration floor (default 1/|active edges|)")
    p.add_argument("--agent", type=int, default=0)
    p.set_defaults(func=cmd_project)

    p = sub.add_parser("gen-chain", help="print a chain multigraph spec")
    p.add_argument("--segments", type=int, required=True)
    p.add_argument("--edges-per-segment", type=int, default=2)
    p.set_defaults(func=cmd_gen_chain)

    p = sub.add_parser("validate-config", help="check a config file")
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_validate_config)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (SBGDError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
