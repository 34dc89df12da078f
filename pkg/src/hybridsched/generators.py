"""Instance generators: the fork-join benchmark family and three adversarial
constructions that pin worst-case behaviour of the implemented algorithms.

Randomness comes from numpy's PCG64.  A fork-join instance derives one child
seed per phase (plus one for the initial task) from ``SeedSequence(seed)``,
so regenerating any phase is independent of the others and identical seeds
reproduce identical graph files byte for byte.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import Platform, Task, TaskGraph
from .errors import ParameterOutOfRangeError

DECEL_SHARE = 0.05  # slice of parallel tasks per phase that slow down on GPU
CPU_TIME_FLOOR_DIV = 100  # CPU times are clamped below at phases/100


@dataclass(frozen=True)
class ForkJoinSpec:
    """Parameters of one fork-join instance.

    The graph starts with a single sequential task, then repeats ``phases``
    times: ``width`` parallel tasks joined by one aggregation task.  Total
    task count is ``1 + phases * (width + 1)``.
    """

    phases: int
    width: int
    seed: int
    q: int = 2

    def __post_init__(self):
        if self.phases < 1 or self.width < 1:
            raise ParameterOutOfRangeError("phases and width must be >= 1")
        if self.q not in (2, 3):
            raise ParameterOutOfRangeError("q must be 2 or 3")

    @property
    def task_count(self) -> int:
        return 1 + self.phases * (self.width + 1)


def _times_from(rng: np.random.Generator, n: int, spec: ForkJoinSpec, parallel: bool) -> list[tuple[float, ...]]:
    """Draw CPU times and per-GPU-type acceleration factors for n tasks.

    CPU time ~ Normal(phases, phases/4) clamped below; GPU time is CPU time
    divided by an acceleration factor.  In each phase ceil(5%) of the
    parallel tasks decelerate (factor in [0.1, 0.5]); everything else,
    including sequential tasks, accelerates by a factor in [0.5, 50].
    """
    center = float(spec.phases)
    cpu = np.maximum(rng.normal(center, center / 4.0, n), center / CPU_TIME_FLOOR_DIV)
    columns = [cpu]
    for _gpu_type in range(spec.q - 1):
        factors = rng.uniform(0.5, 50.0, n)
        if parallel:
            n_decel = math.ceil(DECEL_SHARE * n)
            decel_idx = rng.choice(n, size=n_decel, replace=False)
            factors[decel_idx] = rng.uniform(0.1, 0.5, n_decel)
        columns.append(cpu / factors)
    return [tuple(float(col[i]) for col in columns) for i in range(n)]


def gen_forkjoin(spec: ForkJoinSpec) -> TaskGraph:
    streams = np.random.SeedSequence(spec.seed).spawn(spec.phases + 1)

    tasks: list[Task] = []
    edges: list[tuple[int, int]] = []

    rng0 = np.random.Generator(np.random.PCG64(streams[0]))
    tasks.append(Task(0, _times_from(rng0, 1, spec, parallel=False)[0], label="seq0"))

    prev_tail = 0
    next_id = 1
    for phase in range(1, spec.phases + 1):
        rng = np.random.Generator(np.random.PCG64(streams[phase]))
        par_times = _times_from(rng, spec.width, spec, parallel=True)
        join_time = _times_from(rng, 1, spec, parallel=False)[0]

        par_ids = list(range(next_id, next_id + spec.width))
        join_id = next_id + spec.width
        next_id = join_id + 1

        for i, tid in enumerate(par_ids):
            tasks.append(Task(tid, par_times[i], label=f"t{phase}_{i}"))
            edges.append((prev_tail, tid))
            edges.append((tid, join_id))
        tasks.append(Task(join_id, join_time, label=f"join{phase}"))
        prev_tail = join_id

    return TaskGraph(tasks, edges)


def gen_heft_adversary(m: int, k: int) -> tuple[TaskGraph, Platform]:
    """Independent-task instance on (m CPUs, k GPUs) where rank order drives
    the single-phase heuristic into a long alternating schedule."""
    if not (1 <= k and k * k <= m):
        raise ParameterOutOfRangeError(f"need 1 <= k <= sqrt(m), got m={m}, k={k}")
    ratio = m / (m + k)
    slow = (k / m**2) * ratio**m
    tasks = []
    next_id = 0
    for i in range(1, m + 1):
        fast = ratio**i
        for _ in range(k):
            tasks.append(Task(next_id, (fast, fast), label=f"A{i}"))
            next_id += 1
        for _ in range(m):
            tasks.append(Task(next_id, (fast, slow), label=f"B{i}"))
            next_id += 1
    return TaskGraph(tasks, ()), Platform((m, k))


def gen_hlp_adversary(m: int) -> tuple[TaskGraph, Platform]:
    """Two-wave bipartite instance on (m CPUs, m GPUs) whose rounded
    fractional allocation forces both waves onto their slow sides.

    Task ids order the CPU wave first, then the GPU wave, then the long
    CPU-only task, so start-time ties resolve the same way the worst-case
    schedule needs.
    """
    if m < 3:
        raise ParameterOutOfRangeError(f"need m >= 3, got {m}")
    n_wave = 2 * m + 1
    tasks = [Task(j, (2 * m - 1, 1), label="B1") for j in range(n_wave)]
    tasks += [Task(n_wave + j, (1, 2 * m - 1), label="B2") for j in range(n_wave)]
    a_id = 2 * n_wave
    tasks.append(
        Task(a_id, (m * (2 * m + 1) / (m - 1), math.inf), label="A")
    )
    edges = [(i, n_wave + j) for i in range(n_wave) for j in range(n_wave)]
    return TaskGraph(tasks, edges), Platform((m, m))


def gen_erls_adversary(m: int, k: int) -> tuple[TaskGraph, Platform]:
    """k independent tasks plus an m-task chain on (m CPUs, k GPUs); arriving
    in id order they bait the online rules onto the wrong sides."""
    if not 1 <= k <= m:
        raise ParameterOutOfRangeError(f"need 1 <= k <= m, got m={m}, k={k}")
    rm, rk = math.sqrt(m), math.sqrt(k)
    tasks = [Task(j, (rm, rm), label="A") for j in range(k)]
    tasks += [Task(k + j, (rm, rk), label=f"B{j + 1}") for j in range(m)]
    edges = [(k + j, k + j + 1) for j in range(m - 1)]
    return TaskGraph(tasks, edges), Platform((m, k))
