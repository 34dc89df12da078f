"""Allocation-then-scheduling of precedence task graphs on hybrid platforms.

The library separates the two decisions: which resource *type* each task
runs on (fractional relaxation plus rounding, or online rules), and where
and when it actually executes (list-scheduling engines).  A benchmark
harness compares the resulting makespans against the relaxation's lower
bound.
"""

from .core import (
    Allocation,
    Placement,
    Platform,
    RankTable,
    Schedule,
    Task,
    TaskGraph,
    compute_rank_alloc,
    compute_rank_avg,
    critical_path_min,
    makespan,
    topological_order,
    validate_graph,
    validate_schedule,
)
from .generators import (
    ForkJoinSpec,
    gen_erls_adversary,
    gen_forkjoin,
    gen_heft_adversary,
    gen_hlp_adversary,
)
from .graphio import read_graph, write_graph
from .offline import est_schedule, heft_schedule, hlp_pipeline, list_schedule, ols_schedule
from .online import arrival_stream, erls_decide, online_run, rule_allocate
from .relaxation import build_hlp, inject_solution, round_allocation, solve_lp
from .bench import brute_force_opt, lower_bounds, run_experiment

__version__ = "0.1.0"

__all__ = [
    "Allocation",
    "ForkJoinSpec",
    "Placement",
    "Platform",
    "RankTable",
    "Schedule",
    "Task",
    "TaskGraph",
    "arrival_stream",
    "brute_force_opt",
    "build_hlp",
    "compute_rank_alloc",
    "compute_rank_avg",
    "critical_path_min",
    "erls_decide",
    "est_schedule",
    "gen_erls_adversary",
    "gen_forkjoin",
    "gen_heft_adversary",
    "gen_hlp_adversary",
    "heft_schedule",
    "hlp_pipeline",
    "inject_solution",
    "list_schedule",
    "lower_bounds",
    "makespan",
    "ols_schedule",
    "online_run",
    "read_graph",
    "round_allocation",
    "rule_allocate",
    "run_experiment",
    "solve_lp",
    "topological_order",
    "validate_graph",
    "validate_schedule",
    "write_graph",
]
