"""Umbrella command line: gen, resistances, sparsify, verify, experiment.

Exit codes: 0 success (and, for verify/experiment, all checks passed),
1 a check failed, 2 bad usage or unreadable input.
"""

from __future__ import annotations

import argparse
import sys

from .graph import (
    GraphConnectivityError,
    build_laplacian,
    projection_context,
    pseudo_factorize,
    read_edge_list,
    write_edge_list,
)
from .harness import GeneratorSpec, emit_report, generate, run_experiment
from .resistance import exact_resistances
from .sparsify import (
    RESISTANCE_MODES,
    ConfigError,
    StreamConfig,
    read_sparsifier,
    stream_sparsify,
    write_sparsifier,
)
from .verify import projection_error, spectral_check, write_diagnostics

__all__ = ["main"]


def _add_gen(sub: argparse._SubParsersAction) -> None:
    p = sub.add_parser("gen", help="generate a connected weighted graph")
    p.add_argument("--model", required=True,
                   choices=("path", "cycle", "complete", "erdos-renyi", "barbell"))
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--p", type=float, default=None, help="edge probability (erdos-renyi)")
    p.add_argument("--weight-min", type=float, default=1.0)
    p.add_argument("--weight-max", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", required=True, help="edge-list file to write")


def _add_resistances(sub: argparse._SubParsersAction) -> None:
    p = sub.add_parser("resistances", help="exact effective resistances per edge")
    p.add_argument("--graph", required=True, help="edge-list file")


def _add_sparsify(sub: argparse._SubParsersAction) -> None:
    p = sub.add_parser("sparsify", help="run the resparsification stream")
    p.add_argument("--input", required=True, help="edge-list file")
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--delta", type=float, default=0.1)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--block-size", type=int, default=None)
    p.add_argument("--budget-override", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--resistance-mode", default="sparsifier", choices=RESISTANCE_MODES)
    p.add_argument("--output", required=True, help="sparsifier file to write")
    p.add_argument("--diagnostics", default=None, help="per-step diagnostics CSV")


def _add_verify(sub: argparse._SubParsersAction) -> None:
    p = sub.add_parser("verify", help="check a sparsifier file against its graph")
    p.add_argument("--graph", required=True, help="edge-list file")
    p.add_argument("--sparsifier", required=True, help="sparsifier file")
    p.add_argument("--epsilon", type=float, required=True)


def _add_experiment(sub: argparse._SubParsersAction) -> None:
    p = sub.add_parser("experiment", help="seeded Monte Carlo over stream runs")
    p.add_argument("--model", required=True,
                   choices=("path", "cycle", "complete", "erdos-renyi", "barbell"))
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--p", type=float, default=None)
    p.add_argument("--weight-min", type=float, default=1.0)
    p.add_argument("--weight-max", type=float, default=1.0)
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--delta", type=float, default=0.1)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--trials", type=int, required=True)
    p.add_argument("--block-size", type=int, default=None)
    p.add_argument("--budget-override", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--resistance-mode", default="exact", choices=RESISTANCE_MODES)
    p.add_argument("--max-failure-rate", type=float, default=0.05,
                   help="largest acceptable fraction of failed trials")
    p.add_argument("--report", required=True, help="report file to write")
    p.add_argument("--format", default="json", choices=("json", "csv"))


def _cmd_gen(args) -> int:
    spec = GeneratorSpec(args.model, args.n, args.p, args.weight_min, args.weight_max,
                         args.seed)
    g = generate(spec)
    comment = (
        f"generated model={spec.model} n={spec.n} p={spec.p} "
        f"weights=[{spec.weight_min},{spec.weight_max}] seed={spec.seed}"
    )
    write_edge_list(g, args.output, comment=comment)
    print(f"wrote {g.m} edges on {g.n} vertices to {args.output}")
    return 0


def _cmd_resistances(args) -> int:
    g = read_edge_list(args.graph)
    factors = pseudo_factorize(build_laplacian(g))
    pairs = [(e.u, e.v) for e in g.edges]
    estimates = exact_resistances(factors, pairs, range(g.m))
    total = 0.0
    for e, est in zip(g.edges, estimates):
        total += e.weight * est.r_tilde
        print(f"{e.u} {e.v} {e.weight!r} {est.r_tilde!r}")
    print(f"# sum_check {total!r} {g.n - 1}")
    return 0


def _cmd_sparsify(args) -> int:
    g = read_edge_list(args.input)
    cfg = StreamConfig.for_graph(
        g, args.epsilon, args.delta, args.alpha, args.seed, args.budget_override
    )
    h, records = stream_sparsify(
        g,
        cfg,
        block_size=args.block_size,
        resistance_mode=args.resistance_mode,
        diagnostics=args.diagnostics is not None,
    )
    write_sparsifier(h, args.output)
    if args.diagnostics is not None:
        write_diagnostics(records, args.diagnostics)
    print(
        f"step={h.step} copies={h.copy_count()} budget={cfg.budget_n} "
        f"wrote {args.output}"
    )
    return 0


def _cmd_verify(args) -> int:
    g = read_edge_list(args.graph)
    sp = read_sparsifier(args.sparsifier, n=g.n)
    ok, worst = spectral_check(sp, g, args.epsilon)
    proj = projection_error(sp, projection_context(g))
    print(f"worst_ratio {worst!r}")
    print(f"projection_error {proj!r}")
    print(f"spectral_check {'pass' if ok else 'fail'} at epsilon={args.epsilon}")
    return 0 if ok else 1


def _cmd_experiment(args) -> int:
    spec = GeneratorSpec(args.model, args.n, args.p, args.weight_min, args.weight_max,
                         args.seed)
    g = generate(spec)
    cfg = StreamConfig.for_graph(
        g, args.epsilon, args.delta, args.alpha, args.seed, args.budget_override
    )
    report = run_experiment(
        spec,
        cfg,
        trials=args.trials,
        block_size=args.block_size,
        resistance_mode=args.resistance_mode,
    )
    emit_report(report, args.report, format=args.format)
    print(
        f"regime={report.regime} trials={report.trials} "
        f"failed={report.failed_trials} rate={report.failure_rate:.4f} "
        f"ci95=({report.failure_ci95[0]:.4f}, {report.failure_ci95[1]:.4f}) "
        f"b_events={report.trials_with_b_event} "
        f"prop1_violations={report.prop1_violations} "
        f"errors={report.trials_with_error} wrote {args.report}"
    )
    ok = (
        report.trials_with_error == 0
        and report.failure_rate <= args.max_failure_rate
        and report.trials_with_b_event == 0
        and report.prop1_violations == 0
    )
    return 0 if ok else 1


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="respark",
        description="spectral graph sparsification over edge streams",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    _add_gen(sub)
    _add_resistances(sub)
    _add_sparsify(sub)
    _add_verify(sub)
    _add_experiment(sub)
    args = parser.parse_args(argv)
    commands = {
        "gen": _cmd_gen,
        "resistances": _cmd_resistances,
        "sparsify": _cmd_sparsify,
        "verify": _cmd_verify,
        "experiment": _cmd_experiment,
    }
    try:
        return commands[args.command](args)
    except (OSError, ValueError, ConfigError, GraphConnectivityError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
