
import numpy as np
import pytest

from hybridsched.core import Platform, TaskGraph, critical_path_min
from hybridsched.errors import InfeasibleInjectionError, IterationLimitError
from hybridsched.generators import gen_hlp_adversary
from hybridsched.relaxation import (
    LPSolution,
    build_hlp,
    dump_cplex_lp,
    inject_solution,
    round_allocation,
    solve_lp,
)

from conftest import random_dag, tg
from oracles import vertex_enum_lp_optimum


# ---------------------------------------------------------------------------
# build_hlp
# ---------------------------------------------------------------------------

def test_single_task_model_shape(plat11):
    model = build_hlp(tg([(0, (2, 4))]), plat11)
    x_vars = [v for v in model.var_names if v.startswith("x_")]
    c_vars = [v for v in model.var_names if v.startswith("C_")]
    assert x_vars == ["x_0"]
    assert c_vars == ["C_0"]
    assert "lam" in model.var_names
    assert model.num_rows() == 4  # release, horizon, two loads


def test_hlp_adversary_pins_cpu_only_task():
    g, plat = gen_hlp_adversary(3)
    model = build_hlp(g, plat)
    assert model.fixed["x_14"] == 1.0  # the long CPU-only task
    assert "x_14" not in model.var_names


def test_empty_graph_solves_to_zero(plat11):
    model = build_hlp(TaskGraph([], []), plat11)
    assert model.var_names == ["lam"]
    assert model.num_rows() == 0
    sol = solve_lp(model)
    assert sol.objective == 0.0
    assert sol.status == "optimal"


def test_qhlp_has_assignment_rows():
    g = tg([(0, (2, 3, 4)), (1, (5, 1, 2))], [(0, 1)])
    model = build_hlp(g, Platform((2, 1, 1)))
    assign = [r for r in model.rows if r.sense == "=="]
    assert len(assign) == 2
    assert all(set(r.coeffs.values()) == {1.0} for r in assign)


# ---------------------------------------------------------------------------
# solve_lp
# ---------------------------------------------------------------------------

def test_symmetric_pair_splits(plat11):
    g = tg([(0, (2, 2)), (1, (2, 2))])
    sol = solve_lp(build_hlp(g, plat11))
    assert sol.objective == pytest.approx(2.0, abs=1e-9)


def test_gpu_favorable_task(plat11):
    sol = solve_lp(build_hlp(tg([(0, (4, 1))]), plat11))
    assert sol.objective == pytest.approx(1.0, abs=1e-9)
    assert sol.x[(0, 0)] == pytest.approx(0.0, abs=1e-7)


def test_hlp_adversary_optimum_value():
    g, plat = gen_hlp_adversary(3)
    sol = solve_lp(build_hlp(g, plat))
    assert sol.objective == pytest.approx(10.5, abs=1e-6)


def test_solution_satisfies_rows_and_binding_lambda():
    rng = np.random.default_rng(77)
    for _ in range(10):
        g = random_dag(rng, int(rng.integers(1, 9)), float(rng.random()) * 0.6,
                       allow_forbidden=True)
        plat = Platform((int(rng.integers(1, 5)), int(rng.integers(1, 3))))
        model = build_hlp(g, plat)
        sol = solve_lp(model)
        values = dict(model.fixed)
        for j in model.task_ids:
            values.setdefault(f"x_{j}", sol.x[(j, 0)])
            values[f"C_{j}"] = sol.completion[j]
        values["lam"] = sol.objective
        binding = [0.0]
        for row in model.rows:
            lhs = row.evaluate(values)
            assert lhs <= row.rhs + 1e-7
            if "lam" in row.coeffs:
                # lam appears negatively: the bound expression it dominates
                lam_coef = -row.coeffs["lam"]
                expr = (lhs + lam_coef * values["lam"] - row.rhs) / lam_coef
                binding.append(expr)
        assert sol.objective == pytest.approx(max(binding), abs=1e-7)


def test_lower_bound_properties():
    rng = np.random.default_rng(13)
    for _ in range(12):
        g = random_dag(rng, int(rng.integers(1, 10)), float(rng.random()) * 0.5)
        plat = Platform((int(rng.integers(1, 5)), int(rng.integers(1, 3))))
        lam = solve_lp(build_hlp(g, plat)).objective
        assert lam >= critical_path_min(g) - 1e-7
        assert lam >= max(t.min_time() for t in g.tasks) - 1e-7


def test_matches_vertex_enumeration_oracle_small():
    rng = np.random.default_rng(4242)
    for _ in range(25):
        g = random_dag(rng, int(rng.integers(1, 7)), float(rng.random()) * 0.6,
                       allow_forbidden=True)
        plat = Platform((int(rng.integers(1, 5)), int(rng.integers(1, 3))))
        lam = solve_lp(build_hlp(g, plat)).objective
        ref = vertex_enum_lp_optimum(g, plat)
        assert lam == pytest.approx(ref, abs=1e-6)


def test_iteration_limit_raises(plat11):
    g = tg([(0, (4, 1)), (1, (1, 4))])
    with pytest.raises(IterationLimitError):
        solve_lp(build_hlp(g, plat11), max_iter=0)


def test_pluggable_solver_hook(plat11):
    from hybridsched import simplex

    calls = []

    def spy(lp):
        calls.append(lp)
        return simplex.solve(lp)

    sol = solve_lp(build_hlp(tg([(0, (4, 1))]), plat11), solver=spy)
    assert len(calls) == 1
    assert sol.objective == pytest.approx(1.0, abs=1e-7)


# ---------------------------------------------------------------------------
# round_allocation
# ---------------------------------------------------------------------------

def _two_type_solution(x0: float) -> LPSolution:
    return LPSolution(
        x={(0, 0): x0, (0, 1): 1 - x0}, completion={0: 1.0}, objective=1.0,
        status="injected",
    )


def test_round_half_goes_cpu():
    g = tg([(0, (1, 1))])
    assert round_allocation(_two_type_solution(0.5), g)[0] == 0


def test_round_below_half_goes_gpu():
    g = tg([(0, (1, 1))])
    assert round_allocation(_two_type_solution(0.49), g)[0] == 1


def test_round_q3_tie_prefers_fastest_type():
    g = tg([(0, (5, 3, 9))])
    sol = LPSolution(
        x={(0, 0): 0.4, (0, 1): 0.4, (0, 2): 0.2},
        completion={0: 1.0},
        objective=1.0,
        status="injected",
    )
    assert round_allocation(sol, g)[0] == 1


def test_round_q3_remaining_tie_prefers_smallest_index():
    g = tg([(0, (3, 3, 9))])
    sol = LPSolution(
        x={(0, 0): 0.4, (0, 1): 0.4, (0, 2): 0.2},
        completion={0: 1.0},
        objective=1.0,
        status="injected",
    )
    assert round_allocation(sol, g)[0] == 0


def test_round_never_selects_forbidden():
    g = tg([(0, (2, 1), {0})])
    sol = LPSolution(
        x={(0, 0): 0.0, (0, 1): 1.0}, completion={0: 1.0}, objective=1.0,
        status="injected",
    )
    assert round_allocation(sol, g)[0] == 1


# ---------------------------------------------------------------------------
# inject_solution
# ---------------------------------------------------------------------------

def _pinned_fractional_assignment(m: int, eps: float = 1e-4):
    n_wave = 2 * m + 1
    lam = m * (2 * m + 1) / (m - 1)
    x, comp = {}, {}
    for j in range(n_wave):
        x[j] = 0.5
        comp[j] = float(m)
    for j in range(n_wave, 2 * n_wave):
        x[j] = 0.5 - eps
        comp[j] = 2 * m + 2 * eps * (m - 1)
    a = 2 * n_wave
    x[a] = 1.0
    comp[a] = lam
    return x, comp, lam


def test_inject_accepts_known_fractional_solution():
    g, plat = gen_hlp_adversary(3)
    x, comp, lam = _pinned_fractional_assignment(3)
    sol = inject_solution(g, plat, x, comp, lam)
    assert sol.status == "injected"
    assert sol.objective == pytest.approx(10.5)
    assert sol.x[(0, 0)] == pytest.approx(0.5)


def test_inject_rejects_lambda_below_load(plat11):
    g = tg([(0, (2, 2)), (1, (2, 2))])
    with pytest.raises(InfeasibleInjectionError) as exc:
        inject_solution(g, plat11, {0: 1.0, 1: 1.0}, {0: 2.0, 1: 2.0}, 2.0)
    assert "load_0" in exc.value.row_name


def test_inject_accepts_all_zero_graph(plat11):
    g = tg([(0, (0, 0))])
    sol = inject_solution(g, plat11, {0: 1.0}, {0: 0.0}, 0.0)
    assert sol.objective == 0.0


def test_inject_reports_first_violated_row(plat11):
    g = tg([(0, (2, 2)), (1, (2, 2))], [(0, 1)])
    with pytest.raises(InfeasibleInjectionError):
        # completion of the successor ignores the chain row
        inject_solution(g, plat11, {0: 1.0, 1: 1.0}, {0: 2.0, 1: 2.0}, 10.0)


def test_inject_q3_sequences():
    g = tg([(0, (2, 3, 4))])
    plat = Platform((1, 1, 1))
    sol = inject_solution(g, plat, {0: [1.0, 0.0, 0.0]}, {0: 2.0}, 2.0)
    assert sol.x[(0, 0)] == 1.0
    with pytest.raises(InfeasibleInjectionError):
        inject_solution(g, plat, {0: [0.5, 0.0, 0.0]}, {0: 2.0}, 2.0)


# ---------------------------------------------------------------------------
# CPLEX-LP dump
# ---------------------------------------------------------------------------

def test_dump_cplex_structure(plat11):
    text = dump_cplex_lp(build_hlp(tg([(0, (2, 4))], ()), plat11))
    assert text.startswith("\\ hybridsched")
    assert "Minimize" in text and "Subject To" in text
    assert " obj: lam" in text
    assert "Bounds" in text and text.rstrip().endswith("End")
    assert "release_0:" in text
    assert "0 <= x_0 <= 1" in text
