"""Command-line entry point.

Exit codes: 0 success, 1 model-level failure (arrangement violated, no path,
range violation), 2 I/O, parse or validation error.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from . import io
from .analysis import analysis_report
from .dynamics import ModelParams, replay_sequence
from .errors import (
    ArrangementViolated,
    BoomerangError,
    NoPath,
    RangeViolation,
)
from .experiments import ExperimentConfig, build_setup, run_monte_carlo, simulate_trial
from .graph import classify_arrangement, perturb_flip_edges
from .proximity import SequenceTooLong, build_proximity_sequence

SEED_ENV = "BOOMERANG_SEED"

EXIT_OK, EXIT_MODEL, EXIT_INPUT = 0, 1, 2
_MODEL_ERRORS = (ArrangementViolated, NoPath, SequenceTooLong, RangeViolation)


class UsageError(BoomerangError):
    pass


def _seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get(SEED_ENV)
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"{SEED_ENV}={env!r} is not an integer") from None
    raise UsageError("--seed is required (or set " + SEED_ENV + ")")


def _u64(text: str) -> int:
    v = int(text)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _load_config(args, require_horizon: bool = True) -> ExperimentConfig:
    """Config from --config and/or flags; flags win."""
    overrides = {
        "horizon": getattr(args, "horizon", None),
        "trials": getattr(args, "trials", None),
        "tol": getattr(args, "tol", None),
        "epsilon": getattr(args, "epsilon", None),
        "a": getattr(args, "a", None),
        "o_min": getattr(args, "o_min", None),
        "o_max": getattr(args, "o_max", None),
    }
    if args.config:
        data = io.parse_config(args.config).to_dict()
        if data.get("graph_file"):
            data["graph_file"] = str((Path(args.config).parent / data["graph_file"]).resolve())
    else:
        data = {}
    if getattr(args, "graph", None):
        data["graph_file"] = args.graph
        data["faction_sizes"] = None
    if "horizon" not in data:
        data["horizon"] = overrides["horizon"] if overrides["horizon"] is not None else (0 if require_horizon else 1)
    data.update({k: v for k, v in overrides.items() if v is not None})
    if getattr(args, "seed", None) is not None or os.environ.get(SEED_ENV) is not None:
        data["seed"] = _seed(args)
    return ExperimentConfig.from_dict(data)


def _graph_for(config: ExperimentConfig):
    return io.read_graph(config.graph_file) if config.graph_file else None


def cmd_check_balance(args) -> int:
    g = io.read_graph(args.graph)
    rep = classify_arrangement(g)
    print(rep.describe())
    print(f"n={rep.n} connected={rep.connected} complete={rep.complete} balance_class={rep.balance_class}")
    for i, j in rep.violating_edges:
        print(f"violating edge: {i} {j}")
    return EXIT_OK if rep.satisfies_arrangement else EXIT_MODEL


def cmd_simulate(args) -> int:
    config = _load_config(args)
    if config.seed is None:
        _seed(args)
    setup = build_setup(config, _graph_for(config))
    traj, _ = simulate_trial(config, setup, 0)
    io.write_trajectory(args.out, traj)
    if args.edges_out:
        io.write_edges(args.edges_out, traj.edge_log)
    if args.report:
        Path(args.report).write_text(
            io.dump_json(analysis_report(traj, setup.factions, config.tol, config.epsilon))
        )
    print(f"wrote {len(traj)} states to {args.out} (trial seed {traj.seed})")
    return EXIT_OK


def cmd_montecarlo(args) -> int:
    if not args.config:
        raise UsageError("montecarlo needs --config")
    config = _load_config(args)
    if config.seed is None:
        _seed(args)
    summary = run_monte_carlo(config, _graph_for(config), workers=args.workers)
    csv_path = args.csv or str(Path(args.out).with_suffix(".csv"))
    io.write_summary(args.out, csv_path, summary)
    agg = summary.aggregate
    print(
        f"{summary.kind}: {agg['n_trials']} trials, converged={agg['fraction_converged']:.3f} "
        f"polarized={agg['fraction_polarized']:.3f} fluctuating={agg['fraction_fluctuating']:.3f}"
    )
    return EXIT_OK


def _params_for(args, n: int) -> ModelParams:
    if args.config:
        config = _load_config(args, require_horizon=False)
        setup = build_setup(config, io.read_graph(args.graph) if args.graph else _graph_for(config))
        return setup.params
    a = 0.5 if args.a is None else args.a
    o_min = 0.0 if args.o_min is None else args.o_min
    o_max = 1.0 if args.o_max is None else args.o_max
    return ModelParams.uniform(n, a, o_min, o_max)


def cmd_replay(args) -> int:
    g = io.read_graph(args.graph)
    params = _params_for(args, g.n)
    edges = None
    x0 = None
    if args.trajectory:
        times, states, logged = io.read_trajectory_csv(args.trajectory)
        if times.size == 0 or times[0] != 0:
            raise UsageError("trajectory CSV must start at t=0")
        x0 = states[0]
        if not args.edges:
            if not np.array_equal(times, np.arange(times.size)):
                raise UsageError("strided trajectory CSV lacks the full edge log; pass --edges")
            edges = logged[1:]
    if args.x0:
        x0 = np.array([float(v) for v in args.x0.split(",")])
    if args.edges:
        edges = io.read_edges(args.edges)
    if x0 is None or edges is None:
        raise UsageError("replay needs an initial state (--trajectory or --x0) and edges (--edges or --trajectory)")
    traj = replay_sequence(g, params, x0, edges)
    io.write_trajectory(args.out, traj)
    print("final state: " + " ".join(io._num(v) for v in traj.states[-1]))
    return EXIT_OK


def cmd_perturb(args) -> int:
    g = io.read_graph(args.graph)
    rng = np.random.default_rng(_seed(args))
    new, flipped = perturb_flip_edges(g, args.flip, rng)
    io.write_graph(args.out, new, [f"flipped {i} {j}" for i, j in flipped])
    for i, j in flipped:
        print(f"flipped {i} {j}")
    return EXIT_OK


def cmd_proximity(args) -> int:
    g = io.read_graph(args.graph)
    params = _params_for(args, g.n)
    i, j = args.pair
    eps = 0.05 if args.epsilon is None else args.epsilon
    seq = build_proximity_sequence(g, None, params, i, j, eps)
    io.write_edges(args.out, seq)
    print(f"wrote {len(seq)} edges to {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="boomerang", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def model_flags(p):
        p.add_argument("--a", type=float, help="uniform self-weight in (0, 1)")
        p.add_argument("--o-min", dest="o_min", type=float)
        p.add_argument("--o-max", dest="o_max", type=float)

    p = sub.add_parser("check-balance", help="classify a graph file")
    p.add_argument("--graph", required=True)
    p.set_defaults(func=cmd_check_balance)

    p = sub.add_parser("simulate", help="run one seeded trajectory and write it as CSV")
    p.add_argument("--config")
    p.add_argument("--graph")
    p.add_argument("--seed", type=_u64)
    p.add_argument("--horizon", type=int)
    p.add_argument("--tol", type=float)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--out", required=True)
    p.add_argument("--edges-out", dest="edges_out")
    p.add_argument("--report", help="write the analysis report (JSON) here")
    model_flags(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("montecarlo", help="run seeded trials and write summary JSON + per-trial CSV")
    p.add_argument("--config")
    p.add_argument("--seed", type=_u64)
    p.add_argument("--horizon", type=int)
    p.add_argument("--trials", type=int)
    p.add_argument("--tol", type=float)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--out", required=True)
    p.add_argument("--csv")
    p.add_argument("--workers", type=int, default=1)
    model_flags(p)
    p.set_defaults(func=cmd_montecarlo)

    p = sub.add_parser("replay", help="apply a prescribed edge sequence")
    p.add_argument("--graph", required=True)
    p.add_argument("--config")
    p.add_argument("--trajectory", help="trajectory CSV supplying x(0) and, if stride 1, the edges")
    p.add_argument("--edges")
    p.add_argument("--x0", help="comma-separated initial opinions")
    p.add_argument("--out", required=True)
    model_flags(p)
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("perturb", help="flip the signs of randomly chosen edges")
    p.add_argument("--graph", required=True)
    p.add_argument("--flip", type=int, required=True)
    p.add_argument("--seed", type=_u64)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_perturb)

    p = sub.add_parser("proximity", help="build an edge sequence that pulls a pair together or apart")
    p.add_argument("--graph", required=True)
    p.add_argument("--config")
    p.add_argument("--pair", nargs=2, type=int, required=True, metavar=("I", "J"))
    p.add_argument("--epsilon", type=float)
    p.add_argument("--out", required=True)
    model_flags(p)
    p.set_defaults(func=cmd_proximity)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except _MODEL_ERRORS as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_MODEL
    except (BoomerangError, OSError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
