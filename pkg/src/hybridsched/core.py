"""Domain model: task graphs, platforms, allocations, schedules, ranks.

Conventions used throughout the library:

* resource type indices run 0..Q-1; for two-type platforms index 0 is the
  CPU side and index 1 the GPU side;
* a task that cannot run on a type stores ``math.inf`` at that entry of its
  processing-time vector and lists the type in ``forbidden``;
* ties are broken by ascending task id, then ascending type index, then
  ascending machine index, so every operation is deterministic.

Times are plain floats and are compared exactly; the only tolerance in this
module is a 1e-9 slack on the duration check of imported schedules.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, NamedTuple

from .errors import (
    AllTypesForbiddenError,
    ArityMismatchError,
    CycleDetectedError,
    DanglingEdgeError,
    EmptyScheduleError,
    GraphError,
    MachineOutOfRangeError,
    MissingTaskError,
    NegativeTimeError,
    OverlapError,
    PrecedenceViolationError,
    ScheduleError,
    WrongDurationError,
)

DURATION_TOL = 1e-9


@dataclass(frozen=True)
class Task:
    """A sequential task with one processing time per resource type.

    ``proc_times[q]`` is the time on type ``q``; entries listed in
    ``forbidden`` (or given as ``math.inf``) mark types the task cannot
    run on.  At least one type must remain allowed.
    """

    id: int
    proc_times: tuple[float, ...]
    label: str | None = None
    forbidden: frozenset[int] = frozenset()

    def __post_init__(self):
        times = tuple(float(p) for p in self.proc_times)
        forbidden = frozenset(self.forbidden) | {
            q for q, p in enumerate(times) if math.isinf(p)
        }
        times = tuple(
            math.inf if q in forbidden else p for q, p in enumerate(times)
        )
        object.__setattr__(self, "proc_times", times)
        object.__setattr__(self, "forbidden", forbidden)

    @property
    def arity(self) -> int:
        return len(self.proc_times)

    def allowed_types(self) -> list[int]:
        return [q for q in range(self.arity) if q not in self.forbidden]

    def time_on(self, q: int) -> float:
        return self.proc_times[q]

    def min_time(self) -> float:
        """Smallest processing time over the allowed types."""
        return min(self.proc_times[q] for q in self.allowed_types())


@dataclass(frozen=True)
class TaskGraph:
    """Immutable DAG of tasks; edges are (predecessor id, successor id)."""

    tasks: tuple[Task, ...]
    edges: tuple[tuple[int, int], ...]

    def __init__(self, tasks: Iterable[Task], edges: Iterable[tuple[int, int]] = ()):
        object.__setattr__(self, "tasks", tuple(tasks))
        object.__setattr__(
            self, "edges", tuple(sorted((int(u), int(v)) for u, v in edges))
        )

    def __len__(self) -> int:
        return len(self.tasks)

    @cached_property
    def task_by_id(self) -> dict[int, Task]:
        return {t.id: t for t in self.tasks}

    @cached_property
    def predecessors(self) -> dict[int, tuple[int, ...]]:
        preds: dict[int, list[int]] = {t.id: [] for t in self.tasks}
        for u, v in self.edges:
            if v in preds:
                preds[v].append(u)
        return {j: tuple(sorted(p)) for j, p in preds.items()}

    @cached_property
    def successors(self) -> dict[int, tuple[int, ...]]:
        succs: dict[int, list[int]] = {t.id: [] for t in self.tasks}
        for u, v in self.edges:
            if u in succs:
                succs[u].append(v)
        return {j: tuple(sorted(s)) for j, s in succs.items()}

    def sources(self) -> list[int]:
        return [j for j, p in self.predecessors.items() if not p]


@dataclass(frozen=True)
class Platform:
    """Machine park: ``type_counts[q]`` identical processors of type q."""

    type_counts: tuple[int, ...]

    def __post_init__(self):
        counts = tuple(int(m) for m in self.type_counts)
        if len(counts) < 2:
            raise GraphError("a platform needs at least two resource types")
        if any(m < 1 for m in counts):
            raise GraphError("every resource type needs at least one machine")
        object.__setattr__(self, "type_counts", counts)

    @property
    def q(self) -> int:
        return len(self.type_counts)

    @property
    def cpus(self) -> int:
        return self.type_counts[0]

    @property
    def gpus(self) -> int:
        return self.type_counts[1]

    @classmethod
    def parse(cls, text: str) -> "Platform":
        """Parse the comma-separated count format, e.g. ``"16,4"``."""
        try:
            counts = tuple(int(part) for part in text.split(","))
        except ValueError as exc:
            raise GraphError(f"bad platform string {text!r}") from exc
        return cls(counts)

    def format(self) -> str:
        return ",".join(str(m) for m in self.type_counts)


@dataclass(frozen=True)
class Allocation:
    """Total map from task id to the resource type it must run on."""

    type_of: dict[int, int]

    def __getitem__(self, task_id: int) -> int:
        return self.type_of[task_id]

    def items(self):
        return self.type_of.items()


class Placement(NamedTuple):
    type_index: int
    machine: int
    start: float
    finish: float


@dataclass(frozen=True)
class Schedule:
    """Non-preemptive schedule: one placement per task."""

    placements: dict[int, Placement]

    def __len__(self) -> int:
        return len(self.placements)

    def __getitem__(self, task_id: int) -> Placement:
        return self.placements[task_id]


@dataclass(frozen=True)
class RankTable:
    """Task priorities; larger rank means schedule earlier."""

    rank_of: dict[int, float]

    def __getitem__(self, task_id: int) -> float:
        return self.rank_of[task_id]

    def items(self):
        return self.rank_of.items()


# ---------------------------------------------------------------------------
# Graph operations
# ---------------------------------------------------------------------------

def validate_graph(g: TaskGraph, platform: Platform) -> None:
    """Check every graph invariant against the platform; raise on failure.

    Raises CycleDetectedError, DanglingEdgeError, NegativeTimeError,
    ArityMismatchError or AllTypesForbiddenError; silently returns when the
    graph is well-formed.
    """
    seen: set[int] = set()
    for t in g.tasks:
        if t.id < 0:
            raise GraphError(f"task id {t.id} is negative")
        if t.id in seen:
            raise GraphError(f"duplicate task id {t.id}")
        seen.add(t.id)
        if t.arity != platform.q:
            raise ArityMismatchError(
                f"task {t.id} has {t.arity} processing times, platform has "
                f"{platform.q} types"
            )
        for q, p in enumerate(t.proc_times):
            if q in t.forbidden:
                continue
            if math.isnan(p) or p < 0:
                raise NegativeTimeError(f"task {t.id} has bad time {p} on type {q}")
        if len(t.forbidden) >= t.arity:
            raise AllTypesForbiddenError(f"task {t.id} cannot run anywhere")

    edge_set = set()
    for u, v in g.edges:
        if u not in seen or v not in seen:
            raise DanglingEdgeError(f"edge ({u}, {v}) references a missing task")
        if u == v:
            raise CycleDetectedError([u, u])
        if (u, v) in edge_set:
            raise GraphError(f"duplicate edge ({u}, {v})")
        edge_set.add((u, v))

    topological_order(g)


def topological_order(g: TaskGraph) -> list[int]:
    """Deterministic topological order: ready tasks taken by ascending id."""
    indeg = {t.id: len(g.predecessors[t.id]) for t in g.tasks}
    ready = [j for j, d in indeg.items() if d == 0]
    heapq.heapify(ready)
    order: list[int] = []
    while ready:
        j = heapq.heappop(ready)
        order.append(j)
        for s in g.successors[j]:
            indeg[s] -= 1
            if indeg[s] == 0:
                heapq.heappush(ready, s)
    if len(order) != len(g.tasks):
        raise CycleDetectedError(_find_cycle(g, {j for j, d in indeg.items() if d > 0}))
    return order


def _find_cycle(g: TaskGraph, candidates: set[int]) -> list[int]:
    """Return one directed cycle among ``candidates`` (all on cycles' closure)."""
    start = min(candidates)
    path, seen = [], {}
    j = start
    while j not in seen:
        seen[j] = len(path)
        path.append(j)
        j = min(s for s in g.successors[j] if s in candidates)
    return path[seen[j]:] + [j]


def critical_path_min(g: TaskGraph) -> float:
    """Longest directed path when every task runs at its fastest allowed time."""
    comp: dict[int, float] = {}
    for j in topological_order(g):
        best_pred = max((comp[i] for i in g.predecessors[j]), default=0.0)
        comp[j] = best_pred + g.task_by_id[j].min_time()
    return max(comp.values(), default=0.0)


def compute_rank_alloc(g: TaskGraph, alloc: Allocation) -> RankTable:
    """Rank under a fixed allocation: own allocated time plus the largest
    successor rank (longest remaining path, allocation-aware)."""
    rank: dict[int, float] = {}
    for j in reversed(topological_order(g)):
        tail = max((rank[s] for s in g.successors[j]), default=0.0)
        rank[j] = g.task_by_id[j].time_on(alloc[j]) + tail
    return RankTable(rank)


def compute_rank_avg(g: TaskGraph, platform: Platform) -> RankTable:
    """Machine-count-weighted average rank (upward rank, no communication).

    A forbidden type contributes a large penalty instead of its (infinite)
    time: 10x the sum of all finite processing times in the graph.  This
    keeps the rank finite while pushing such tasks' placement flexibility
    cost into view.
    """
    penalty = 10.0 * sum(
        p for t in g.tasks for p in t.proc_times if math.isfinite(p)
    )
    total_machines = sum(platform.type_counts)
    rank: dict[int, float] = {}
    for j in reversed(topological_order(g)):
        t = g.task_by_id[j]
        weighted = sum(
            m * (penalty if q in t.forbidden else t.proc_times[q])
            for q, m in enumerate(platform.type_counts)
        )
        tail = max((rank[s] for s in g.successors[j]), default=0.0)
        rank[j] = weighted / total_machines + tail
    return RankTable(rank)


# ---------------------------------------------------------------------------
# Schedule operations
# ---------------------------------------------------------------------------

def validate_schedule(s: Schedule, g: TaskGraph, platform: Platform) -> None:
    """Check schedule feasibility: totality, machine ranges, durations,
    per-machine disjointness and precedence; raise on the first failure."""
    for j in g.task_by_id:
        if j not in s.placements:
            raise MissingTaskError(f"task {j} is not scheduled")
    for j in s.placements:
        if j not in g.task_by_id:
            raise ScheduleError(f"placement for unknown task {j}")

    by_machine: dict[tuple[int, int], list[tuple[float, float, int]]] = {}
    for j, pl in s.placements.items():
        if not 0 <= pl.type_index < platform.q:
            raise MachineOutOfRangeError(f"task {j}: type {pl.type_index}")
        if not 0 <= pl.machine < platform.type_counts[pl.type_index]:
            raise MachineOutOfRangeError(
                f"task {j}: machine {pl.machine} of type {pl.type_index}"
            )
        if pl.start < 0:
            raise ScheduleError(f"task {j} starts at {pl.start}")
        p = g.task_by_id[j].time_on(pl.type_index)
        if not math.isfinite(p) or abs((pl.finish - pl.start) - p) > DURATION_TOL * max(1.0, abs(p)):
            raise WrongDurationError(
                f"task {j}: interval [{pl.start}, {pl.finish}) vs time {p}"
            )
        by_machine.setdefault((pl.type_index, pl.machine), []).append(
            (pl.start, pl.finish, j)
        )

    for (q, i), intervals in by_machine.items():
        intervals.sort()
        for (s0, f0, a), (s1, f1, b) in zip(intervals, intervals[1:]):
            if s1 < f0:
                raise OverlapError(
                    f"tasks {a} and {b} overlap on type {q} machine {i}"
                )

    for u, v in g.edges:
        if s.placements[v].start < s.placements[u].finish:
            raise PrecedenceViolationError(
                f"task {v} starts before predecessor {u} finishes"
            )


def makespan(s: Schedule) -> float:
    """Completion time of the last finishing task."""
    if not s.placements:
        raise EmptyScheduleError("schedule has no placements")
    return max(pl.finish for pl in s.placements.values())
