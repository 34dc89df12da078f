"""Offline schedulers.

Two allocation-respecting engines plus one single-phase baseline:

* ``list_schedule`` — event-driven greedy: whenever a machine of a type is
  free and a ready task allocated to that type exists, the highest-priority
  such task starts immediately (no avoidable idleness);
* ``est_schedule`` — commits, among ready tasks, the one whose earliest
  possible start on its allocated side is smallest;
* ``heft_schedule`` — average-rank order with insertion-based placement on
  whichever (type, machine, interval) finishes the task earliest.

``hlp_pipeline`` chains relaxation -> rounding -> EST/OLS for any number of
resource types.  All ties break by ascending task id / type / machine, so
every engine is deterministic.
"""

from __future__ import annotations

from typing import Sequence

from .core import (
    Allocation,
    Placement,
    Platform,
    RankTable,
    Schedule,
    TaskGraph,
    compute_rank_alloc,
    compute_rank_avg,
    validate_graph,
)
from .errors import AllocatesForbiddenTypeError, GraphError
from .relaxation import LPSolution, build_hlp, round_allocation, solve_lp


def _check_allocation(g: TaskGraph, alloc: Allocation) -> None:
    for t in g.tasks:
        q = alloc[t.id]
        if q in t.forbidden:
            raise AllocatesForbiddenTypeError(f"task {t.id} allocated to type {q}")


def _priority_key(g: TaskGraph, priority) -> dict[int, tuple]:
    """Smaller key = scheduled first.  Accepts a RankTable (higher rank
    first), an explicit id sequence (arrival order), or None (id order)."""
    if priority is None:
        return {t.id: (t.id,) for t in g.tasks}
    if isinstance(priority, RankTable):
        return {t.id: (-priority[t.id], t.id) for t in g.tasks}
    if isinstance(priority, Sequence):
        return {tid: (pos,) for pos, tid in enumerate(priority)}
    raise TypeError(f"unsupported priority {type(priority).__name__}")


def list_schedule(
    g: TaskGraph, platform: Platform, alloc: Allocation, priority=None
) -> Schedule:
    """Event-driven greedy list scheduling under a fixed allocation."""
    _check_allocation(g, alloc)
    key = _priority_key(g, priority)
    avail = [[0.0] * m for m in platform.type_counts]
    finish: dict[int, float] = {}
    placements: dict[int, Placement] = {}

    waiting = {t.id: len(g.predecessors[t.id]) for t in g.tasks}
    enable: dict[int, float] = {j: 0.0 for j, n in waiting.items() if n == 0}

    now = 0.0
    while len(placements) < len(g.tasks):
        started = True
        while started:
            started = False
            for q in range(platform.q):
                free = sorted(
                    (i for i in range(platform.type_counts[q]) if avail[q][i] <= now),
                    key=lambda i: (avail[q][i], i),
                )
                ready = sorted(
                    (
                        j
                        for j, t0 in enable.items()
                        if t0 <= now and j not in placements and alloc[j] == q
                    ),
                    key=key.__getitem__,
                )
                for j, i in zip(ready, free):
                    p = g.task_by_id[j].time_on(q)
                    placements[j] = Placement(q, i, now, now + p)
                    finish[j] = now + p
                    avail[q][i] = now + p
                    for s in g.successors[j]:
                        waiting[s] -= 1
                        if waiting[s] == 0:
                            enable[s] = max(
                                (finish[i2] for i2 in g.predecessors[s]), default=0.0
                            )
                    started = True
        horizon = [a for row in avail for a in row if a > now]
        horizon += [t0 for j, t0 in enable.items() if t0 > now and j not in placements]
        if horizon:
            now = min(horizon)
        else:  # only reachable on invalid (cyclic) inputs
            raise GraphError("list scheduling deadlocked; is the graph acyclic?")
    return Schedule(placements)


def est_schedule(g: TaskGraph, platform: Platform, alloc: Allocation) -> Schedule:
    """Earliest-starting-time policy: repeatedly commit the ready task that
    can start soonest on its allocated side (ties by ascending id)."""
    _check_allocation(g, alloc)
    avail = [[0.0] * m for m in platform.type_counts]
    finish: dict[int, float] = {}
    placements: dict[int, Placement] = {}
    waiting = {t.id: len(g.predecessors[t.id]) for t in g.tasks}
    ready = sorted(j for j, n in waiting.items() if n == 0)

    while ready:
        front = [
            min(range(platform.type_counts[q]), key=lambda i: (avail[q][i], i))
            for q in range(platform.q)
        ]
        best = None
        for j in ready:
            q = alloc[j]
            released = max((finish[i] for i in g.predecessors[j]), default=0.0)
            start = max(avail[q][front[q]], released)
            cand = (start, j, q, front[q])
            if best is None or cand < best:
                best = cand
        start, j, q, machine = best
        p = g.task_by_id[j].time_on(q)
        placements[j] = Placement(q, machine, start, start + p)
        finish[j] = start + p
        avail[q][machine] = start + p
        ready.remove(j)
        for s in g.successors[j]:
            waiting[s] -= 1
            if waiting[s] == 0:
                ready.append(s)
        ready.sort()
    if len(placements) != len(g.tasks):
        raise GraphError("EST deadlocked; is the graph acyclic?")
    return Schedule(placements)


def ols_schedule(g: TaskGraph, platform: Platform, alloc: Allocation) -> Schedule:
    """List scheduling ordered by allocation-aware rank (critical tasks first)."""
    return list_schedule(g, platform, alloc, compute_rank_alloc(g, alloc))


def heft_schedule(g: TaskGraph, platform: Platform, insertion: bool = True) -> Schedule:
    """Single-phase baseline: average-rank priority, then per task the
    (type, machine, interval) with the earliest finish, inserting into idle
    gaps when the whole task fits.  Finish ties prefer the higher type index
    (the accelerator side), then the lower machine index.
    """
    validate_graph(g, platform)
    ranks = compute_rank_avg(g, platform)
    order = sorted((t.id for t in g.tasks), key=lambda j: (-ranks[j], j))

    # busy[q][i]: committed intervals, kept sorted by start time.
    busy: list[list[list[tuple[float, float]]]] = [
        [[] for _ in range(m)] for m in platform.type_counts
    ]
    finish: dict[int, float] = {}
    placements: dict[int, Placement] = {}

    pending = list(order)
    while pending:
        # Rank ties between a task and its predecessor can only happen with
        # zero-time tasks; take the first pending task whose preds are done.
        j = next(x for x in pending if all(p in finish for p in g.predecessors[x]))
        pending.remove(j)
        t = g.task_by_id[j]
        released = max((finish[i] for i in g.predecessors[j]), default=0.0)

        best = None  # (finish, -type, machine, start)
        for q in t.allowed_types():
            p = t.proc_times[q]
            for i in range(platform.type_counts[q]):
                start = _earliest_slot(busy[q][i], released, p, insertion)
                cand = (start + p, -q, i, start)
                if best is None or cand < best:
                    best = cand
        fin, negq, machine, start = best
        q = -negq
        placements[j] = Placement(q, machine, start, fin)
        finish[j] = fin
        slots = busy[q][machine]
        slots.append((start, fin))
        slots.sort()
    return Schedule(placements)


def _earliest_slot(
    slots: list[tuple[float, float]], released: float, p: float, insertion: bool
) -> float:
    """Earliest start >= released on one machine; scans idle gaps when
    insertion is on, otherwise appends after the last committed interval."""
    if not insertion:
        tail = slots[-1][1] if slots else 0.0
        return max(tail, released)
    prev_end = 0.0
    for s, f in slots:
        start = max(prev_end, released)
        if start + p <= s:
            return start
        prev_end = f
    return max(prev_end, released)


def hlp_pipeline(
    g: TaskGraph,
    platform: Platform,
    policy: str = "est",
    solution: LPSolution | None = None,
) -> Schedule:
    """Relaxation -> rounding -> EST or OLS, for any Q >= 2.

    ``solution`` short-circuits the solve with an externally provided
    (e.g. injected) fractional assignment.
    """
    if policy not in ("est", "ols"):
        raise ValueError(f"unknown policy {policy!r}")
    if not g.tasks:
        return Schedule({})
    if solution is None:
        solution = solve_lp(build_hlp(g, platform))
    alloc = round_allocation(solution, g)
    if policy == "est":
        return est_schedule(g, platform, alloc)
    return ols_schedule(g, platform, alloc)
