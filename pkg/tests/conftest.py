import numpy as np
import pytest

from hybridsched.core import Platform, Task, TaskGraph


def tg(task_specs, edges=()):
    """Shorthand graph builder: task_specs = [(id, proc_times[, forbidden])]."""
    tasks = []
    for spec in task_specs:
        tid, times = spec[0], spec[1]
        forbidden = frozenset(spec[2]) if len(spec) > 2 else frozenset()
        tasks.append(Task(tid, times, forbidden=forbidden))
    return TaskGraph(tasks, edges)


def random_dag(rng: np.random.Generator, n: int, density: float, q: int = 2,
               allow_forbidden: bool = False, low: float = 0.5, high: float = 10.0):
    """Random layered-free DAG over ids 0..n-1 with edges i->j only for i<j."""
    edges = [
        (i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < density
    ]
    tasks = []
    for i in range(n):
        times = tuple(float(rng.uniform(low, high)) for _ in range(q))
        forbidden = frozenset()
        if allow_forbidden and q == 2:
            r = rng.random()
            if r < 0.08:
                forbidden = frozenset({0})
            elif r < 0.16:
                forbidden = frozenset({1})
        tasks.append(Task(i, times, forbidden=forbidden))
    return TaskGraph(tasks, edges)


@pytest.fixture
def plat11():
    return Platform((1, 1))


@pytest.fixture
def plat22():
    return Platform((2, 2))
