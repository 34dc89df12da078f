"""Benchmark harness: lower bounds, an exact oracle for tiny instances, and
the experiment matrix runner.

One run record per (instance, platform, algorithm) cell; the fractional
relaxation is solved once per (instance, platform) and shared by every
algorithm of that cell.  Failures become error rows instead of aborting the
matrix.  Reruns of the same configuration are byte-identical, which is why
wall-clock times are recorded as 0 unless ``record_wall_time`` is set.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import time
import zlib
from dataclasses import dataclass
from pathlib import Path

from .core import (
    Allocation,
    Platform,
    TaskGraph,
    critical_path_min,
    makespan,
    topological_order,
    validate_graph,
    validate_schedule,
)
from .errors import (
    GraphParseError,
    HybridSchedError,
    ParameterOutOfRangeError,
    TooLargeError,
)
from .generators import ForkJoinSpec, gen_forkjoin
from .graphio import read_graph
from .offline import est_schedule, heft_schedule, ols_schedule
from .online import online_run
from .relaxation import build_hlp, round_allocation, solve_lp

CSV_COLUMNS = [
    "instance",
    "family",
    "params",
    "seed",
    "platform",
    "algorithm",
    "makespan",
    "lp_star",
    "cp_min",
    "ratio",
    "wall_ms",
    "status",
]

OFFLINE_ALGOS = ("hlp-est", "hlp-ols", "qhlp-est", "qhlp-ols", "heft")
ONLINE_ALGOS = ("erls", "eft", "greedy", "random", "r1", "r2", "r3")
ALL_ALGOS = OFFLINE_ALGOS + ONLINE_ALGOS

BRUTE_FORCE_CAP = 7


def lower_bounds(g: TaskGraph, platform: Platform) -> tuple[float, float]:
    """(lp_star, cp_min).  The relaxation optimum dominates the critical
    path by construction; any sub-ulp float dip is clamped away."""
    cp = critical_path_min(g)
    if not g.tasks:
        return 0.0, 0.0
    sol = solve_lp(build_hlp(g, platform))
    return max(sol.objective, cp), cp


# ---------------------------------------------------------------------------
# Exact optimum for tiny two-type instances
# ---------------------------------------------------------------------------

def brute_force_opt(g: TaskGraph, platform: Platform) -> float:
    """Exact minimum makespan for instances of at most 7 tasks on two types.

    Enumerates every allocation; for each, searches over greedy commitment
    orders (equivalent to feeding all priority orders to list scheduling,
    which attains the optimum on identical machines per type), with
    dominance memoisation and a remaining-path bound for pruning.
    """
    n = len(g.tasks)
    if n > BRUTE_FORCE_CAP:
        raise TooLargeError(f"{n} tasks exceed the cap of {BRUTE_FORCE_CAP}")
    if platform.q != 2:
        raise ParameterOutOfRangeError("the exact oracle handles two types only")
    validate_graph(g, platform)
    if n == 0:
        return 0.0

    ids = [t.id for t in g.tasks]
    choices = [g.task_by_id[j].allowed_types() for j in ids]
    best = float("inf")
    for combo in itertools.product(*choices):
        alloc = Allocation(dict(zip(ids, combo)))
        best = min(best, _opt_fixed_alloc(g, platform, alloc, best))
    return best


def _opt_fixed_alloc(
    g: TaskGraph, platform: Platform, alloc: Allocation, cutoff: float
) -> float:
    ids = sorted(t.id for t in g.tasks)
    dur = {j: g.task_by_id[j].time_on(alloc[j]) for j in ids}
    # Longest remaining path from each task under this allocation.
    tail: dict[int, float] = {}
    for j in reversed(topological_order(g)):
        tail[j] = dur[j] + max((tail[s] for s in g.successors[j]), default=0.0)

    best = cutoff
    memo: dict[frozenset, list[tuple]] = {}
    empty_avail = tuple(tuple([0.0] * m) for m in platform.type_counts)

    def rec(committed: frozenset, avail, fins: dict, curmax: float):
        nonlocal best
        if curmax >= best:
            return
        if len(committed) == len(ids):
            best = curmax
            return
        ready = [
            j
            for j in ids
            if j not in committed
            and all(p in committed for p in g.predecessors[j])
        ]
        # Admissible bound: some ready task still has to run its whole tail.
        bound = curmax
        for j in ready:
            release = max((fins[p] for p in g.predecessors[j]), default=0.0)
            earliest = max(release, avail[alloc[j]][0])
            bound = max(bound, earliest + tail[j])
        if bound >= best:
            return

        key = committed
        fins_t = tuple(fins[j] for j in ids if j in committed)
        state = (avail, fins_t, curmax)
        bucket = memo.setdefault(key, [])
        for other in bucket:
            if (
                all(a <= b for qa, qb in zip(other[0], avail) for a, b in zip(qa, qb))
                and all(a <= b for a, b in zip(other[1], fins_t))
                and other[2] <= curmax
            ):
                return  # dominated by an explored state
        bucket.append(state)

        for j in ready:
            q = alloc[j]
            release = max((fins[p] for p in g.predecessors[j]), default=0.0)
            start = max(release, avail[q][0])
            fin = start + dur[j]
            row = tuple(sorted(avail[q][1:] + (fin,)))
            new_avail = tuple(row if qq == q else avail[qq] for qq in range(2))
            fins[j] = fin
            rec(committed | {j}, new_avail, fins, max(curmax, fin))
            del fins[j]

    rec(frozenset(), empty_avail, {}, 0.0)
    return best


# ---------------------------------------------------------------------------
# Experiment matrix
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BenchInstance:
    instance_id: str
    family: str
    params: str
    seed: int | None
    graph: TaskGraph


@dataclass
class RunRecord:
    instance: str
    family: str
    params: str
    seed: int | None
    platform: str
    algorithm: str
    makespan: float | None
    lp_star: float | None
    cp_min: float | None
    ratio: float | None
    wall_ms: float
    status: str

    def to_row(self) -> list[str]:
        def num(x):
            return "" if x is None else repr(x)

        return [
            self.instance,
            self.family,
            self.params,
            "" if self.seed is None else str(self.seed),
            self.platform,
            self.algorithm,
            num(self.makespan),
            num(self.lp_star),
            num(self.cp_min),
            num(self.ratio),
            repr(round(self.wall_ms, 3)) if self.wall_ms else "0",
            self.status,
        ]


@dataclass
class BenchConfig:
    instances: list[BenchInstance]
    platforms: list[str]
    algorithms: list[str]
    arrival: str = "natural"  # or "random:SEED"
    policy_seed: int = 0
    record_wall_time: bool = False
    out: str | None = None


def forkjoin_suite(
    phases: list[int], widths: list[int], seeds: list[int], q: int = 2
) -> list[BenchInstance]:
    out = []
    for p, w, s in itertools.product(phases, widths, seeds):
        spec = ForkJoinSpec(p, w, seed=s, q=q)
        out.append(
            BenchInstance(
                instance_id=f"forkjoin-p{p}-w{w}-q{q}-s{s}",
                family="forkjoin",
                params=f"phases={p};width={w};q={q}",
                seed=s,
                graph=gen_forkjoin(spec),
            )
        )
    return out


def load_config(path: str | Path) -> BenchConfig:
    """Read a TOML or JSON experiment matrix."""
    path = Path(path)
    text = path.read_text()
    if path.suffix == ".json":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise GraphParseError(str(exc), where=str(path)) from exc
    else:
        try:
            import tomllib  # Python >= 3.11
        except ModuleNotFoundError:
            import tomli as tomllib
        try:
            doc = tomllib.loads(text)
        except tomllib.TOMLDecodeError as exc:
            raise GraphParseError(str(exc), where=str(path)) from exc

    instances: list[BenchInstance] = []
    for grid in doc.get("forkjoin", []):
        instances.extend(
            forkjoin_suite(
                [int(x) for x in grid["phases"]],
                [int(x) for x in grid["widths"]],
                [int(x) for x in grid["seeds"]],
                int(grid.get("q", 2)),
            )
        )
    for file_path in doc.get("files", []):
        p = Path(file_path)
        if not p.is_absolute():
            p = path.parent / p
        instances.append(
            BenchInstance(
                instance_id=p.stem,
                family="file",
                params=str(file_path),
                seed=None,
                graph=read_graph(p),
            )
        )
    algorithms = list(doc.get("algorithms", ["hlp-est", "hlp-ols", "heft"]))
    for name in algorithms:
        if name not in ALL_ALGOS:
            raise GraphParseError(f"unknown algorithm {name!r}", where=str(path))
    platforms = []
    for s in doc.get("platforms", []):
        plat = Platform.parse(s)
        if plat.q == 2 and plat.cpus < plat.gpus:
            raise GraphParseError(
                f"two-type platform {s!r} needs at least as many CPUs as GPUs",
                where=str(path),
            )
        platforms.append(plat.format())
    if not platforms:
        raise GraphParseError("config lists no platforms", where=str(path))
    return BenchConfig(
        instances=instances,
        platforms=platforms,
        algorithms=algorithms,
        arrival=str(doc.get("arrival", "natural")),
        policy_seed=int(doc.get("policy_seed", 0)),
        record_wall_time=bool(doc.get("record_wall_time", False)),
        out=doc.get("out"),
    )


def _cell_seed(base: int, instance_id: str, platform: str) -> int:
    return (base + zlib.crc32(f"{instance_id}|{platform}".encode())) % (2**63)


def parse_arrival(arrival: str) -> tuple[str, int]:
    """Split an arrival spec ("natural" or "random:SEED") into mode and seed."""
    if arrival == "natural":
        return "natural", 0
    if arrival.startswith("random:"):
        return "random", int(arrival.split(":", 1)[1])
    raise ParameterOutOfRangeError(f"bad arrival spec {arrival!r}")


def run_experiment(config: BenchConfig) -> list[RunRecord]:
    """Run the full matrix; one record per cell, error rows never abort."""
    mode, arrival_base = parse_arrival(config.arrival)
    records: list[RunRecord] = []
    for inst in config.instances:
        for plat_str in config.platforms:
            platform = Platform.parse(plat_str)
            records.extend(
                _run_cell(inst, platform, config, mode, arrival_base)
            )
    records.sort(key=lambda r: (r.instance, r.platform, r.algorithm))
    return records


def _run_cell(
    inst: BenchInstance,
    platform: Platform,
    config: BenchConfig,
    arrival_mode: str,
    arrival_base: int,
) -> list[RunRecord]:
    base = dict(
        instance=inst.instance_id,
        family=inst.family,
        params=inst.params,
        seed=inst.seed,
        platform=platform.format(),
    )

    def error_rows(code: str) -> list[RunRecord]:
        return [
            RunRecord(
                **base,
                algorithm=algo,
                makespan=None,
                lp_star=None,
                cp_min=None,
                ratio=None,
                wall_ms=0.0,
                status=code,
            )
            for algo in config.algorithms
        ]

    g = inst.graph
    try:
        validate_graph(g, platform)
        cp = critical_path_min(g)
        lp_solution = solve_lp(build_hlp(g, platform)) if g.tasks else None
        lam = max(lp_solution.objective, cp) if lp_solution else 0.0
    except HybridSchedError as exc:
        return error_rows(exc.code)

    alloc: Allocation | None = None

    def shared_allocation() -> Allocation:
        nonlocal alloc
        if alloc is None:
            alloc = round_allocation(lp_solution, g)
        return alloc

    rows = []
    for algo in config.algorithms:
        t0 = time.perf_counter()
        try:
            sched = _dispatch(
                algo, g, platform, shared_allocation, arrival_mode,
                _cell_seed(arrival_base, inst.instance_id, platform.format()),
                _cell_seed(config.policy_seed, inst.instance_id, platform.format()),
            )
            validate_schedule(sched, g, platform)
            mk = makespan(sched) if sched.placements else 0.0
        except HybridSchedError as exc:
            rows.append(
                RunRecord(
                    **base,
                    algorithm=algo,
                    makespan=None,
                    lp_star=lam,
                    cp_min=cp,
                    ratio=None,
                    wall_ms=0.0,
                    status=exc.code,
                )
            )
            continue
        wall = (time.perf_counter() - t0) * 1000 if config.record_wall_time else 0.0
        rows.append(
            RunRecord(
                **base,
                algorithm=algo,
                makespan=mk,
                lp_star=lam,
                cp_min=cp,
                ratio=(mk / lam) if lam > 0 else None,
                wall_ms=wall,
                status="ok",
            )
        )
    return rows


def _dispatch(
    algo: str,
    g: TaskGraph,
    platform: Platform,
    shared_allocation,
    arrival_mode: str,
    arrival_seed: int,
    policy_seed: int,
):
    if algo in ("hlp-est", "hlp-ols"):
        if platform.q != 2:
            raise ParameterOutOfRangeError(f"{algo} needs a two-type platform")
    if algo in ("qhlp-est", "qhlp-ols"):
        if platform.q < 3:
            raise ParameterOutOfRangeError(f"{algo} needs at least three types")
    if algo in ("hlp-est", "qhlp-est"):
        return est_schedule(g, platform, shared_allocation())
    if algo in ("hlp-ols", "qhlp-ols"):
        return ols_schedule(g, platform, shared_allocation())
    if algo == "heft":
        return heft_schedule(g, platform)
    if algo in ONLINE_ALGOS:
        result = online_run(
            g,
            platform,
            algo,
            mode=arrival_mode,
            seed=arrival_seed,
            policy_seed=policy_seed,
        )
        return result.schedule
    raise ParameterOutOfRangeError(f"unknown algorithm {algo!r}")


def records_to_csv(records: list[RunRecord]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for rec in records:
        writer.writerow(rec.to_row())
    return buf.getvalue()
