"""Online scheduling on two-type platforms.

Tasks arrive one at a time in a precedence-respecting order the scheduler
does not know in advance; each arrival is committed immediately and
irrevocably to a (type, machine, start).  Placement on a side is always
append-at-end: earliest-available machine of the chosen type, starting at
max(machine availability, predecessors' completion) — no gap insertion.

Allocation policies:

* ``r1`` / ``r2`` / ``r3`` — pure processing-time ratio rules;
* ``erls`` — grab a free-soon GPU when the CPU time exceeds GPU ready time
  plus GPU time, otherwise fall back to r2;
* ``greedy`` — r3 (smallest processing time wins);
* ``random`` — fair coin per task from a seeded PCG64 stream;
* ``eft`` — no side rule: the (type, machine) with the earliest finish.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import (
    Placement,
    Platform,
    Schedule,
    Task,
    TaskGraph,
    topological_order,
    _find_cycle,
)
from .errors import (
    CycleDetectedError,
    ParameterOutOfRangeError,
    PredecessorNotCommittedError,
)

RULES = ("r1", "r2", "r3")
POLICIES = ("erls", "eft", "greedy", "random") + RULES


def arrival_stream(g: TaskGraph, mode: str = "natural", seed: int | None = None) -> list[int]:
    """A precedence-respecting arrival order.

    ``natural`` picks ready tasks by ascending id; ``random`` picks uniformly
    among ready tasks using the seed (identical seeds, identical streams).
    """
    if mode == "natural":
        return topological_order(g)
    if mode != "random":
        raise ParameterOutOfRangeError(f"unknown arrival mode {mode!r}")
    rng = np.random.Generator(np.random.PCG64(seed))
    waiting = {t.id: len(g.predecessors[t.id]) for t in g.tasks}
    ready = sorted(j for j, n in waiting.items() if n == 0)
    order = []
    while ready:
        j = ready.pop(int(rng.integers(len(ready))))
        order.append(j)
        for s in g.successors[j]:
            waiting[s] -= 1
            if waiting[s] == 0:
                ready.append(s)
        ready.sort()
    if len(order) != len(g.tasks):
        raise CycleDetectedError(_find_cycle(g, {j for j, n in waiting.items() if n > 0}))
    return order


def rule_allocate(task: Task, platform: Platform, rule: str) -> int:
    """Side chosen by a ratio rule; <= sends the task to the CPU side.
    A forbidden side routes to the only allowed one."""
    if task.forbidden:
        return task.allowed_types()[0]
    cpu_time, gpu_time = task.proc_times[0], task.proc_times[1]
    m, k = platform.cpus, platform.gpus
    if rule == "r1":
        return 0 if cpu_time / m <= gpu_time / k else 1
    if rule == "r2":
        return 0 if cpu_time / math.sqrt(m) <= gpu_time / math.sqrt(k) else 1
    if rule == "r3":
        return 0 if cpu_time <= gpu_time else 1
    raise ParameterOutOfRangeError(f"unknown rule {rule!r}")


@dataclass
class OnlineState:
    """Append-only commitments made so far, plus machine availabilities."""

    platform: Platform
    avail: list[list[float]] = field(init=False)
    completion: dict[int, float] = field(default_factory=dict)
    placements: dict[int, Placement] = field(default_factory=dict)

    def __post_init__(self):
        self.avail = [[0.0] * m for m in self.platform.type_counts]

    def tau_gpu(self) -> float:
        """Earliest time at which some GPU is idle."""
        return min(self.avail[1])

    def ready_time(self, g: TaskGraph, task_id: int) -> float:
        return max((self.completion[i] for i in g.predecessors[task_id]), default=0.0)

    def gpu_ready(self, g: TaskGraph, task_id: int) -> float:
        return max(self.tau_gpu(), self.ready_time(g, task_id))

    def commit(self, g: TaskGraph, task_id: int, q: int, machine: int | None = None) -> Placement:
        released = self.ready_time(g, task_id)
        if machine is None:
            machine = min(
                range(self.platform.type_counts[q]),
                key=lambda i: (self.avail[q][i], i),
            )
        start = max(self.avail[q][machine], released)
        p = g.task_by_id[task_id].time_on(q)
        pl = Placement(q, machine, start, start + p)
        self.placements[task_id] = pl
        self.completion[task_id] = pl.finish
        self.avail[q][machine] = pl.finish
        return pl


def erls_decide(task: Task, state: OnlineState, platform: Platform, g: TaskGraph) -> tuple[int, str]:
    """Enhanced rules: step 1 takes the GPU when the CPU time is at least the
    GPU ready time plus the GPU time; step 2 falls back to r2.  Returns the
    side and which step fired."""
    for i in g.predecessors[task.id]:
        if i not in state.completion:
            raise PredecessorNotCommittedError(f"task {task.id}: predecessor {i}")
    if task.forbidden:
        return task.allowed_types()[0], "forced"
    if task.proc_times[0] >= state.gpu_ready(g, task.id) + task.proc_times[1]:
        return 1, "step1"
    return rule_allocate(task, platform, "r2"), "step2-r2"


@dataclass
class OnlineResult:
    schedule: Schedule
    decisions: list[dict]
    policy: str
    arrival_mode: str
    arrival_seed: int | None
    policy_seed: int | None

    def metadata(self) -> dict:
        return {
            "policy": self.policy,
            "arrival_mode": self.arrival_mode,
            "arrival_seed": self.arrival_seed,
            "policy_seed": self.policy_seed,
            "rng": "numpy PCG64",
        }


def online_run(
    g: TaskGraph,
    platform: Platform,
    policy: str,
    mode: str = "natural",
    seed: int | None = None,
    policy_seed: int | None = None,
    arrivals: list[int] | None = None,
) -> OnlineResult:
    """Consume an arrival stream and commit every task irrevocably.

    ``arrivals`` overrides the stream with an explicit order (it must be a
    precedence-respecting permutation of the task ids).
    """
    if policy not in POLICIES:
        raise ParameterOutOfRangeError(f"unknown policy {policy!r}")
    if platform.q != 2:
        raise ParameterOutOfRangeError("online policies are defined for two types")

    if arrivals is not None:
        stream = list(arrivals)
        seen: set[int] = set()
        for j in stream:
            if any(p not in seen for p in g.predecessors[j]):
                raise ParameterOutOfRangeError(
                    f"arrival order breaks precedence at task {j}"
                )
            seen.add(j)
        if seen != set(g.task_by_id):
            raise ParameterOutOfRangeError("arrival order is not a permutation")
        mode = "explicit"
    else:
        stream = arrival_stream(g, mode, seed)
    state = OnlineState(platform)
    coin = np.random.Generator(np.random.PCG64(policy_seed)) if policy == "random" else None
    decisions: list[dict] = []

    for j in stream:
        t = g.task_by_id[j]
        tag = policy
        machine = None
        if policy == "erls":
            q, tag = erls_decide(t, state, platform, g)
        elif policy == "eft":
            q, machine = _eft_pick(t, state, platform, g)
        elif policy == "greedy":
            q = rule_allocate(t, platform, "r3")
        elif policy in RULES:
            q = rule_allocate(t, platform, policy)
        else:  # random
            q = int(coin.integers(2))
            if q in t.forbidden:
                q = t.allowed_types()[0]
                tag = "forced"
        if policy not in ("eft", "erls") and q in t.forbidden:
            q = t.allowed_types()[0]
            tag = "forced"
        pl = state.commit(g, j, q, machine)
        decisions.append(
            {"task": j, "type": pl.type_index, "start": pl.start, "rule": tag}
        )

    return OnlineResult(
        schedule=Schedule(state.placements),
        decisions=decisions,
        policy=policy,
        arrival_mode=mode,
        arrival_seed=seed,
        policy_seed=policy_seed,
    )


def _eft_pick(task: Task, state: OnlineState, platform: Platform, g: TaskGraph) -> tuple[int, int]:
    """(type, machine) with the earliest finish given current commitments;
    ties prefer the GPU side, then the lower machine index."""
    released = state.ready_time(g, task.id)
    best = None  # (finish, -type, machine)
    for q in task.allowed_types():
        p = task.proc_times[q]
        for i in range(platform.type_counts[q]):
            fin = max(state.avail[q][i], released) + p
            cand = (fin, -q, i)
            if best is None or cand < best:
                best = cand
    return -best[1], best[2]
