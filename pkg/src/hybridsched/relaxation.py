"""Fractional allocation: build the relaxed allocation program and round it.

The program minimises a variable ``lam`` that upper-bounds the classical
makespan lower bounds: chain completion times (one row per edge and per
source task, plus ``C_j <= lam``) and the average load per resource type.
For two resource types the per-task assignment is a single variable
``x_j`` (fraction on the CPU side); for ``Q >= 3`` types there is one
``x_{j,q}`` per allowed type and an assignment row ``sum_q x_{j,q} = 1``.
Types a task cannot run on are eliminated by variable fixing rather than
big-M costs.

The builder also derives crash hints for the bundled simplex: every
completion variable is bounded below by the task's fastest-possible path
completion (a valid inequality), and assignment variables start on the
task's fastest side, which makes all rows except the load rows feasible at
the starting point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np
import scipy.sparse as sp

from . import simplex
from .core import Allocation, Platform, TaskGraph, topological_order, validate_graph
from .errors import (
    InfeasibleError,
    InfeasibleInjectionError,
    IterationLimitError,
    UnboundedError,
)

INJECT_TOL = 1e-7
ROUND_TOL = 1e-9

LAMBDA = "lam"


@dataclass(frozen=True)
class LPRow:
    name: str
    coeffs: dict[str, float]
    sense: str  # "<=" or "=="
    rhs: float

    def evaluate(self, values: Mapping[str, float]) -> float:
        return sum(c * values[v] for v, c in self.coeffs.items())


@dataclass
class LPModel:
    """The relaxed allocation program for one graph/platform pair."""

    platform: Platform
    task_ids: list[int]
    var_names: list[str]
    lb: dict[str, float]
    ub: dict[str, float]
    rows: list[LPRow]
    fixed: dict[str, float]  # eliminated assignment variables
    # pexp[j] = (constant, {var: coef}): expected processing time of task j
    pexp: dict[int, tuple[float, dict[str, float]]]
    tight_lb: dict[str, float] = field(default_factory=dict)
    start_at_upper: set[str] = field(default_factory=set)

    @property
    def q(self) -> int:
        return self.platform.q

    def x_name(self, task_id: int, q: int | None = None) -> str:
        if self.q == 2:
            return f"x_{task_id}"
        return f"x_{task_id}_{q}"

    def c_name(self, task_id: int) -> str:
        return f"C_{task_id}"

    def num_rows(self) -> int:
        return len(self.rows)

    def num_vars(self) -> int:
        return len(self.var_names)


@dataclass
class LPSolution:
    """Fractional assignment: ``x[(task, type)]`` covers every type, also the
    eliminated ones, so rounding needs no model access."""

    x: dict[tuple[int, int], float]
    completion: dict[int, float]
    objective: float
    status: str  # optimal | injected
    iterations: int = 0

    def x_cpu(self, task_id: int) -> float:
        return self.x[(task_id, 0)]


def build_hlp(g: TaskGraph, platform: Platform) -> LPModel:
    """Build the relaxed allocation program (two-type or general form)."""
    validate_graph(g, platform)
    Q = platform.q

    var_names: list[str] = []
    lb: dict[str, float] = {}
    ub: dict[str, float] = {}
    fixed: dict[str, float] = {}
    pexp: dict[int, tuple[float, dict[str, float]]] = {}
    tight_lb: dict[str, float] = {}
    start_at_upper: set[str] = set()

    def add_var(name: str, lo: float, hi: float) -> None:
        var_names.append(name)
        lb[name] = lo
        ub[name] = hi

    # Assignment variables and expected-time expressions.
    for t in g.tasks:
        allowed = t.allowed_types()
        if Q == 2:
            name = f"x_{t.id}"
            if len(allowed) == 2:
                add_var(name, 0.0, 1.0)
                pexp[t.id] = (t.proc_times[1], {name: t.proc_times[0] - t.proc_times[1]})
                if t.proc_times[0] <= t.proc_times[1]:
                    start_at_upper.add(name)
            elif allowed == [0]:
                fixed[name] = 1.0
                pexp[t.id] = (t.proc_times[0], {})
            else:
                fixed[name] = 0.0
                pexp[t.id] = (t.proc_times[1], {})
        else:
            if len(allowed) == 1:
                q0 = allowed[0]
                for q in range(Q):
                    fixed[f"x_{t.id}_{q}"] = 1.0 if q == q0 else 0.0
                pexp[t.id] = (t.proc_times[q0], {})
            else:
                coeffs = {}
                qmin = min(allowed, key=lambda q: (t.proc_times[q], q))
                for q in allowed:
                    name = f"x_{t.id}_{q}"
                    add_var(name, 0.0, 1.0)
                    coeffs[name] = t.proc_times[q]
                    if q == qmin:
                        start_at_upper.add(name)
                for q in range(Q):
                    if q not in allowed:
                        fixed[f"x_{t.id}_{q}"] = 0.0
                pexp[t.id] = (0.0, coeffs)

    for t in g.tasks:
        add_var(f"C_{t.id}", 0.0, math.inf)
    add_var(LAMBDA, 0.0, math.inf)

    rows: list[LPRow] = []

    def le(name: str, coeffs: dict[str, float], rhs: float) -> None:
        rows.append(LPRow(name, coeffs, "<=", rhs))

    # Chain rows: completion after predecessors, release for sources.
    for i, j in g.edges:
        const, coeffs = pexp[j]
        row = dict(coeffs)
        row[f"C_{i}"] = row.get(f"C_{i}", 0.0) + 1.0
        row[f"C_{j}"] = row.get(f"C_{j}", 0.0) - 1.0
        le(f"chain_{i}_{j}", row, -const)
    for j in g.sources():
        const, coeffs = pexp[j]
        row = dict(coeffs)
        row[f"C_{j}"] = row.get(f"C_{j}", 0.0) - 1.0
        le(f"release_{j}", row, -const)

    # Horizon rows.
    for t in g.tasks:
        le(f"horizon_{t.id}", {f"C_{t.id}": 1.0, LAMBDA: -1.0}, 0.0)

    # Load rows, one per resource type.
    for q in range(Q):
        coeffs: dict[str, float] = {}
        const = 0.0
        for t in g.tasks:
            if q in t.forbidden:
                continue
            p = t.proc_times[q]
            if Q == 2:
                name = f"x_{t.id}"
                if name in fixed:
                    const += p * (fixed[name] if q == 0 else 1.0 - fixed[name])
                elif q == 0:
                    coeffs[name] = coeffs.get(name, 0.0) + p
                else:
                    const += p
                    coeffs[name] = coeffs.get(name, 0.0) - p
            else:
                name = f"x_{t.id}_{q}"
                if name in fixed:
                    const += p * fixed[name]
                else:
                    coeffs[name] = coeffs.get(name, 0.0) + p
        if not coeffs and const == 0.0:
            continue  # no work can land on this type; the row is vacuous
        coeffs[LAMBDA] = -float(platform.type_counts[q])
        le(f"load_{q}", coeffs, -const)

    # Assignment rows for the general form.
    if Q >= 3:
        for t in g.tasks:
            names = [f"x_{t.id}_{q}" for q in t.allowed_types()]
            if len(names) >= 2:
                rows.append(
                    LPRow(f"assign_{t.id}", {n: 1.0 for n in names}, "==", 1.0)
                )

    # Crash hints: fastest-path completion lower bounds (valid inequalities).
    reach: dict[int, float] = {}
    for j in topological_order(g):
        tail = max((reach[i] for i in g.predecessors[j]), default=0.0)
        reach[j] = tail + g.task_by_id[j].min_time()
        tight_lb[f"C_{j}"] = reach[j]
    tight_lb[LAMBDA] = max(reach.values(), default=0.0)

    return LPModel(
        platform=platform,
        task_ids=[t.id for t in g.tasks],
        var_names=var_names,
        lb=lb,
        ub=ub,
        rows=rows,
        fixed=fixed,
        pexp=pexp,
        tight_lb=tight_lb,
        start_at_upper=start_at_upper,
    )


def _to_standard(model: LPModel) -> tuple[simplex.StandardLP, np.ndarray, np.ndarray]:
    col = {name: i for i, name in enumerate(model.var_names)}
    n = len(model.var_names)
    data, ri, ci = [], [], []
    senses, b = [], []
    for k, row in enumerate(model.rows):
        for name, coef in row.coeffs.items():
            ri.append(k)
            ci.append(col[name])
            data.append(coef)
        senses.append(row.sense)
        b.append(row.rhs)
    A = sp.csc_matrix(
        (data, (ri, ci)), shape=(len(model.rows), n)
    )
    c = np.zeros(n)
    c[col[LAMBDA]] = 1.0
    lb = np.array([model.lb[v] for v in model.var_names])
    ub = np.array([model.ub[v] for v in model.var_names])
    lp = simplex.StandardLP(c=c, A=A, senses=senses, b=np.array(b), lb=lb, ub=ub)
    at_upper = np.array([v in model.start_at_upper for v in model.var_names])
    tight = np.array([model.tight_lb.get(v, model.lb[v]) for v in model.var_names])
    return lp, at_upper, tight


def solve_lp(
    model: LPModel,
    pricing: str = "auto",
    max_iter: int | None = None,
    solver: Callable[[simplex.StandardLP], simplex.SimplexResult] | None = None,
) -> LPSolution:
    """Solve the relaxation; ``solver`` may swap in an external LP engine
    honouring the ``StandardLP`` contract."""
    lp, at_upper, tight = _to_standard(model)
    if solver is None:
        result = simplex.solve(
            lp, at_upper=at_upper, tight_lb=tight, max_iter=max_iter, pricing=pricing
        )
    else:
        result = solver(lp)
    if result.status == "iteration_limit":
        raise IterationLimitError(f"simplex stopped after {result.iterations} pivots")
    if result.status == "infeasible":
        raise InfeasibleError("relaxation reported infeasible; model is malformed")
    if result.status == "unbounded":
        raise UnboundedError("relaxation reported unbounded; model is malformed")

    values = dict(zip(model.var_names, result.x))
    values.update(model.fixed)
    return _make_solution(model, values, float(result.objective), "optimal", result.iterations)


def _make_solution(
    model: LPModel, values: Mapping[str, float], objective: float, status: str, iterations: int = 0
) -> LPSolution:
    x: dict[tuple[int, int], float] = {}
    for j in model.task_ids:
        if model.q == 2:
            xj = min(1.0, max(0.0, values[f"x_{j}"]))
            x[(j, 0)] = xj
            x[(j, 1)] = 1.0 - xj
        else:
            for q in range(model.q):
                x[(j, q)] = min(1.0, max(0.0, values[f"x_{j}_{q}"]))
    completion = {j: values[f"C_{j}"] for j in model.task_ids}
    return LPSolution(
        x=x, completion=completion, objective=objective, status=status, iterations=iterations
    )


def round_allocation(sol: LPSolution, g: TaskGraph) -> Allocation:
    """Integral allocation from the fractional assignment.

    Two types: CPU side iff ``x_j >= 1/2``.  More types: the type with the
    largest fraction; ties go to the smallest processing time, then to the
    smallest type index.  Forbidden types are never selected.
    """
    type_of: dict[int, int] = {}
    for t in g.tasks:
        allowed = t.allowed_types()
        if len(allowed) == 1:
            type_of[t.id] = allowed[0]
        elif t.arity == 2:
            type_of[t.id] = 0 if sol.x[(t.id, 0)] >= 0.5 - ROUND_TOL else 1
        else:
            best = max(sol.x[(t.id, q)] for q in allowed)
            cands = [q for q in allowed if sol.x[(t.id, q)] >= best - ROUND_TOL]
            type_of[t.id] = min(cands, key=lambda q: (t.proc_times[q], q))
    return Allocation(type_of)


def inject_solution(
    g: TaskGraph,
    platform: Platform,
    x_values: Mapping[int, float] | Mapping[int, Sequence[float]],
    completions: Mapping[int, float],
    lam: float,
) -> LPSolution:
    """Wrap externally chosen values as an LPSolution after verifying them
    against every model row (tolerance 1e-7); useful for pinning schedules
    to a known fractional assignment.
    """
    model = build_hlp(g, platform)
    values: dict[str, float] = dict(model.fixed)
    values[LAMBDA] = float(lam)

    for t in g.tasks:
        if t.id not in completions:
            raise InfeasibleInjectionError(f"C_{t.id}", math.inf)
        values[f"C_{t.id}"] = float(completions[t.id])
        if t.id not in x_values:
            if model.q == 2 and f"x_{t.id}" in model.fixed:
                continue
            if model.q >= 3 and f"x_{t.id}_0" in model.fixed:
                continue
            raise InfeasibleInjectionError(model.x_name(t.id, 0), math.inf)
        given = x_values[t.id]
        if model.q == 2:
            values.setdefault(f"x_{t.id}", float(given))
            if abs(values[f"x_{t.id}"] - float(given)) > INJECT_TOL:
                raise InfeasibleInjectionError(f"x_{t.id}", abs(values[f"x_{t.id}"] - float(given)))
        else:
            seq = list(given)  # type: ignore[arg-type]
            if len(seq) != model.q:
                raise InfeasibleInjectionError(model.x_name(t.id, 0), math.inf)
            for q, val in enumerate(seq):
                name = f"x_{t.id}_{q}"
                if name in model.fixed:
                    if abs(model.fixed[name] - float(val)) > INJECT_TOL:
                        raise InfeasibleInjectionError(name, abs(model.fixed[name] - float(val)))
                else:
                    values[name] = float(val)

    # Bound checks first, then every row.
    for name in model.var_names:
        v = values[name]
        if v < model.lb[name] - INJECT_TOL or v > model.ub[name] + INJECT_TOL:
            raise InfeasibleInjectionError(f"bound_{name}", max(model.lb[name] - v, v - model.ub[name]))
    for row in model.rows:
        lhs = row.evaluate(values)
        violation = abs(lhs - row.rhs) if row.sense == "==" else lhs - row.rhs
        if violation > INJECT_TOL:
            raise InfeasibleInjectionError(row.name, violation)

    return _make_solution(model, values, float(lam), "injected")


def dump_cplex_lp(model: LPModel, name: str = "hybridsched") -> str:
    """Model in CPLEX-LP text format for cross-checks with external solvers."""
    out = [f"\\ {name}: relaxed allocation program", "Minimize", f" obj: {LAMBDA}", "Subject To"]

    def term(coef: float, var: str, first: bool) -> str:
        sign = "-" if coef < 0 else ("" if first else "+")
        mag = abs(coef)
        lead = "" if first and sign == "" else f"{sign} "
        return f"{lead}{mag:.17g} {var}"

    order = {v: i for i, v in enumerate(model.var_names)}
    for row in model.rows:
        parts = []
        for var in sorted(row.coeffs, key=order.__getitem__):
            parts.append(term(row.coeffs[var], var, first=not parts))
        op = "=" if row.sense == "==" else "<="
        out.append(f" {row.name}: {' '.join(parts)} {op} {row.rhs:.17g}")
    out.append("Bounds")
    for var in model.var_names:
        lo, hi = model.lb[var], model.ub[var]
        if math.isinf(hi):
            out.append(f" {var} >= {lo:.17g}")
        else:
            out.append(f" {lo:.17g} <= {var} <= {hi:.17g}")
    out.append("End")
    return "\n".join(out) + "\n"
