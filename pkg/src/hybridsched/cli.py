"""Command-line interface.

Subcommands: ``generate`` (instance families), ``validate``, ``bounds``,
``solve`` (one algorithm on one graph), ``bench`` (experiment matrix from a
TOML/JSON config) and ``summarize`` (aggregate a run CSV into a summary CSV
plus figures).

Exit codes: 0 ok, 1 validation failure, 2 parse/IO error, 3 internal error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import bench as bench_mod
from . import report as report_mod
from .core import Platform, critical_path_min, makespan, validate_graph, validate_schedule
from .errors import (
    GraphError,
    GraphParseError,
    HybridSchedError,
    LPError,
    ParameterOutOfRangeError,
    ScheduleError,
    TooLargeError,
)
from .generators import ForkJoinSpec, gen_erls_adversary, gen_forkjoin, gen_heft_adversary, gen_hlp_adversary
from .graphio import read_graph, schedule_to_csv, schedule_to_json, write_graph
from .offline import est_schedule, heft_schedule, ols_schedule
from .online import online_run
from .relaxation import build_hlp, dump_cplex_lp, round_allocation, solve_lp

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_PARSE_IO = 2
EXIT_INTERNAL = 3


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hybridsched",
        description="Allocation-then-scheduling of task graphs on hybrid platforms.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="generate a benchmark instance")
    gen.add_argument(
        "--family",
        required=True,
        choices=["forkjoin", "heft-adv", "hlp-adv", "erls-adv"],
    )
    gen.add_argument("--phases", type=int, help="forkjoin: number of phases")
    gen.add_argument("--width", type=int, help="forkjoin: parallel tasks per phase")
    gen.add_argument("--q", type=int, default=2, help="forkjoin: resource types (2 or 3)")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--m", type=int, help="adversaries: CPU count")
    gen.add_argument("--k", type=int, help="adversaries: GPU count")
    gen.add_argument("--out", required=True)

    val = sub.add_parser("validate", help="validate a graph file")
    val.add_argument("--graph", required=True)
    val.add_argument("--platform", help="counts like '16,4'; defaults to one machine per type")

    bounds = sub.add_parser("bounds", help="lower bounds for a graph/platform")
    bounds.add_argument("--graph", required=True)
    bounds.add_argument("--platform", required=True)
    bounds.add_argument("--dump-lp", help="write the model in CPLEX-LP format")

    solve = sub.add_parser("solve", help="run one algorithm")
    solve.add_argument("--graph", required=True)
    solve.add_argument("--platform", required=True)
    solve.add_argument(
        "--algo", "--policy", dest="algo", required=True,
        choices=list(bench_mod.ALL_ALGOS),
    )
    solve.add_argument("--arrival", default="natural", help="natural or random:SEED")
    solve.add_argument("--policy-seed", type=int, default=0, help="seed for the random policy")
    solve.add_argument("--out", help="JSON result path (default: stdout)")
    solve.add_argument("--schedule-csv", help="also export the schedule as CSV")
    solve.add_argument("--dump-lp", help="write the model in CPLEX-LP format")

    benchp = sub.add_parser("bench", help="run an experiment matrix")
    benchp.add_argument("--config", required=True, help="TOML or JSON matrix file")
    benchp.add_argument("--out", help="run-record CSV path (overrides config)")

    summ = sub.add_parser("summarize", help="aggregate a run CSV")
    summ.add_argument("--runs", required=True, help="run-record CSV from 'bench'")
    summ.add_argument("--out", required=True, help="summary CSV path")
    summ.add_argument("--plots", help="figure directory (default: next to --out)")
    summ.add_argument("--no-plots", action="store_true", help="skip figure rendering")
    return parser


def _generate(args) -> int:
    if args.family == "forkjoin":
        if args.phases is None or args.width is None:
            raise ParameterOutOfRangeError("forkjoin needs --phases and --width")
        spec = ForkJoinSpec(args.phases, args.width, seed=args.seed, q=args.q)
        graph = gen_forkjoin(spec)
        meta = {
            "family": "forkjoin",
            "phases": args.phases,
            "width": args.width,
            "q": args.q,
            "seed": args.seed,
            "rng": "numpy PCG64, one SeedSequence child per phase",
        }
    else:
        if args.m is None:
            raise ParameterOutOfRangeError(f"{args.family} needs --m")
        if args.family == "hlp-adv":
            graph, platform = gen_hlp_adversary(args.m)
        elif args.family == "heft-adv":
            if args.k is None:
                raise ParameterOutOfRangeError("heft-adv needs --k")
            graph, platform = gen_heft_adversary(args.m, args.k)
        else:
            if args.k is None:
                raise ParameterOutOfRangeError("erls-adv needs --k")
            graph, platform = gen_erls_adversary(args.m, args.k)
        meta = {
            "family": args.family,
            "m": args.m,
            "platform": platform.format(),
        }
        if args.k is not None:
            meta["k"] = args.k
    write_graph(graph, args.out)
    Path(args.out + ".meta.json").write_text(json.dumps(meta, indent=1) + "\n")
    print(f"wrote {args.out}: {len(graph.tasks)} tasks, {len(graph.edges)} edges")
    return EXIT_OK


def _validate(args) -> int:
    graph = read_graph(args.graph)
    if args.platform:
        platform = Platform.parse(args.platform)
    else:
        q = graph.tasks[0].arity if graph.tasks else 2
        platform = Platform((1,) * max(q, 2))
    validate_graph(graph, platform)
    print(f"ok: {len(graph.tasks)} tasks, {len(graph.edges)} edges")
    return EXIT_OK


def _bounds(args) -> int:
    graph = read_graph(args.graph)
    platform = Platform.parse(args.platform)
    validate_graph(graph, platform)
    if args.dump_lp:
        Path(args.dump_lp).write_text(dump_cplex_lp(build_hlp(graph, platform)))
    lam, cp = bench_mod.lower_bounds(graph, platform)
    print(json.dumps({"lp_star": lam, "cp_min": cp}))
    return EXIT_OK


def _solve(args) -> int:
    graph = read_graph(args.graph)
    platform = Platform.parse(args.platform)
    validate_graph(graph, platform)
    if args.dump_lp:
        Path(args.dump_lp).write_text(dump_cplex_lp(build_hlp(graph, platform)))

    result: dict = {
        "algorithm": args.algo,
        "platform": platform.format(),
        "graph": args.graph,
    }
    if args.algo in ("hlp-est", "hlp-ols", "qhlp-est", "qhlp-ols"):
        if args.algo.startswith("hlp") and platform.q != 2:
            raise ParameterOutOfRangeError(f"{args.algo} needs a two-type platform")
        if args.algo.startswith("qhlp") and platform.q < 3:
            raise ParameterOutOfRangeError(f"{args.algo} needs at least three types")
        if graph.tasks:
            sol = solve_lp(build_hlp(graph, platform))
            alloc = round_allocation(sol, graph)
            engine = est_schedule if args.algo.endswith("est") else ols_schedule
            sched = engine(graph, platform, alloc)
            result["lp_star"] = sol.objective
        else:
            from .core import Schedule

            sched = Schedule({})
            result["lp_star"] = 0.0
    elif args.algo == "heft":
        sched = heft_schedule(graph, platform)
    else:
        mode, seed = bench_mod.parse_arrival(args.arrival)
        online = online_run(
            graph, platform, args.algo, mode=mode, seed=seed, policy_seed=args.policy_seed
        )
        sched = online.schedule
        result["decisions"] = online.decisions
        result.update(online.metadata())

    validate_schedule(sched, graph, platform)
    result["makespan"] = makespan(sched) if sched.placements else 0.0
    result["cp_min"] = critical_path_min(graph)
    result["schedule"] = json.loads(schedule_to_json(sched, platform))
    text = json.dumps(result, indent=1) + "\n"
    if args.out:
        Path(args.out).write_text(text)
        print(f"wrote {args.out}: makespan {result['makespan']}")
    else:
        sys.stdout.write(text)
    if args.schedule_csv:
        Path(args.schedule_csv).write_text(schedule_to_csv(sched))
    return EXIT_OK


def _bench(args) -> int:
    config = bench_mod.load_config(args.config)
    out = args.out or config.out
    if not out:
        raise ParameterOutOfRangeError("no output path: pass --out or set 'out' in the config")
    records = bench_mod.run_experiment(config)
    Path(out).write_text(bench_mod.records_to_csv(records))
    n_err = sum(1 for r in records if r.status != "ok")
    print(f"wrote {out}: {len(records)} rows, {n_err} errors")
    return EXIT_OK


def _summarize(args) -> int:
    csv_text = Path(args.runs).read_text()
    summary = report_mod.summarize_runs(csv_text)
    out = Path(args.out)
    out.write_text(report_mod.summary_to_csv(summary))
    print(f"wrote {out}")
    if not args.no_plots:
        plot_dir = Path(args.plots) if args.plots else out.parent
        for path in report_mod.render_figures(summary, plot_dir):
            print(f"wrote {path}")
    return EXIT_OK


_HANDLERS = {
    "generate": _generate,
    "validate": _validate,
    "bounds": _bounds,
    "solve": _solve,
    "bench": _bench,
    "summarize": _summarize,
}


def main(argv: list[str] | None = None) -> int:
    args = make_parser().parse_args(argv)
    try:
        return _HANDLERS[args.command](args)
    except (GraphParseError,) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE_IO
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE_IO
    except (GraphError, ScheduleError, ParameterOutOfRangeError, TooLargeError) as exc:
        print(f"error [{exc.code}]: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except LPError as exc:
        print(f"internal error [{exc.code}]: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except HybridSchedError as exc:
        print(f"error [{exc.code}]: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
