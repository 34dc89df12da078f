"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line
(run with ``pytest -s tests/test_acceptance.py`` to see them live).

The heavy fork-join matrices are computed once in module-scoped fixtures and
shared between the bound, closure and report criteria.
"""

import math
import time
from contextlib import contextmanager
from pathlib import Path

import numpy as np
import pytest

from hybridsched.bench import (
    BenchConfig,
    brute_force_opt,
    forkjoin_suite,
    load_config,
    records_to_csv,
    run_experiment,
)
from hybridsched.core import Platform, makespan, validate_graph, validate_schedule
from hybridsched.generators import (
    ForkJoinSpec,
    gen_erls_adversary,
    gen_forkjoin,
    gen_heft_adversary,
    gen_hlp_adversary,
)
from hybridsched.graphio import graph_to_json
from hybridsched.offline import est_schedule, heft_schedule
from hybridsched.online import online_run
from hybridsched.relaxation import build_hlp, inject_solution, round_allocation, solve_lp

from conftest import random_dag
from oracles import vertex_enum_lp_optimum

REPO_ROOT = Path(__file__).resolve().parent.parent

REL_TOL = 1e-6


@contextmanager
def criterion(num: int, desc: str):
    try:
        yield
    except BaseException:
        print(f"ACCEPTANCE {num:2d} FAIL  {desc}", flush=True)
        raise
    print(f"ACCEPTANCE {num:2d} PASS  {desc}", flush=True)


# ---------------------------------------------------------------------------
# Shared suites
# ---------------------------------------------------------------------------

SEEDS = list(range(1, 51))  # 50 seeds x 4 (phases, width) combos = 200 instances


@pytest.fixture(scope="module")
def q2_suite():
    config = BenchConfig(
        instances=forkjoin_suite([2, 5], [20, 50], SEEDS, q=2),
        platforms=["16,2", "32,4", "64,8", "128,16"],
        algorithms=["hlp-est", "hlp-ols", "heft"],
    )
    t0 = time.perf_counter()
    records = run_experiment(config)
    return records, time.perf_counter() - t0


@pytest.fixture(scope="module")
def q3_suite():
    config = BenchConfig(
        instances=forkjoin_suite([2, 5], [20, 50], SEEDS, q=3),
        platforms=["16,2,2", "32,4,4", "64,8,8", "128,16,16"],
        algorithms=["qhlp-est", "qhlp-ols"],
    )
    t0 = time.perf_counter()
    records = run_experiment(config)
    return records, time.perf_counter() - t0


@pytest.fixture(scope="module")
def erls_suite():
    """500 random 7-task instances spanning antichain to chain density."""
    rows = []
    t0 = time.perf_counter()
    for i in range(500):
        rng = np.random.default_rng(9000 + i)
        density = i / 499
        g = random_dag(rng, 7, density, low=1.0, high=10.0)
        m, k = [(2, 1), (2, 2), (4, 1), (4, 2)][i % 4]
        plat = Platform((m, k))
        res = online_run(g, plat, "erls", mode="random", seed=i)
        validate_schedule(res.schedule, g, plat)
        rows.append(
            {
                "mk": makespan(res.schedule),
                "opt": brute_force_opt(g, plat),
                "bound": 4 * math.sqrt(m / k),
            }
        )
    return rows, time.perf_counter() - t0


# ---------------------------------------------------------------------------
# Criteria
# ---------------------------------------------------------------------------

def test_criterion_1_hlp_adversary_golden():
    with criterion(1, "worst-case bipartite instance: lambda*=10.5, EST makespan 30"):
        t0 = time.perf_counter()
        g, plat = gen_hlp_adversary(3)
        sol = solve_lp(build_hlp(g, plat))
        assert sol.objective == pytest.approx(10.5, abs=1e-6)

        n_wave = 7
        lam = 10.5
        eps = 1e-4
        x = {j: 0.5 for j in range(n_wave)}
        x.update({j: 0.5 - eps for j in range(n_wave, 2 * n_wave)})
        x[2 * n_wave] = 1.0
        comp = {j: 3.0 for j in range(n_wave)}
        comp.update({j: 6 + 4 * eps for j in range(n_wave, 2 * n_wave)})
        comp[2 * n_wave] = lam
        injected = inject_solution(g, plat, x, comp, lam)

        sched = est_schedule(g, plat, round_allocation(injected, g))
        validate_schedule(sched, g, plat)
        mk = makespan(sched)
        assert mk == 30.0
        assert mk / injected.objective == pytest.approx(30.0 / 10.5, abs=1e-9)
        assert time.perf_counter() - t0 < 1.0


def test_criterion_2_heft_adversary_golden():
    with criterion(2, "rank-baiting instance: single-phase makespan 130/81, ratio >= 1.20"):
        t0 = time.perf_counter()
        g, plat = gen_heft_adversary(4, 2)
        sched = heft_schedule(g, plat)
        validate_schedule(sched, g, plat)
        mk = makespan(sched)
        assert mk == pytest.approx(130 / 81, abs=1e-9)
        lam = solve_lp(build_hlp(g, plat)).objective
        assert mk / lam >= 1.20
        assert time.perf_counter() - t0 < 1.0


def test_criterion_3_erls_adversary_golden():
    with criterion(3, "online chain bait: makespan 8 vs optimum 4, ratio sqrt(m/k)"):
        t0 = time.perf_counter()
        g, plat = gen_erls_adversary(4, 1)
        res = online_run(g, plat, "erls", mode="natural")
        validate_schedule(res.schedule, g, plat)
        mk = makespan(res.schedule)
        opt = brute_force_opt(g, plat)
        assert mk == 8.0
        assert opt == 4.0
        assert mk / opt == pytest.approx(math.sqrt(4 / 1), abs=1e-9)
        assert time.perf_counter() - t0 < 1.0


def test_criterion_4_approximation_bounds(q2_suite, q3_suite):
    with criterion(4, "200-instance fork-join suite: makespans within 6x (12x for Q=3) of the bound"):
        q2_records, q2_time = q2_suite
        q3_records, q3_time = q3_suite
        n_checked = 0
        for rec in q2_records:
            assert rec.status == "ok", (rec.instance, rec.platform, rec.status)
            if rec.algorithm in ("hlp-est", "hlp-ols"):
                assert rec.makespan <= 6 * rec.lp_star * (1 + REL_TOL), (
                    rec.instance, rec.platform, rec.algorithm, rec.ratio,
                )
                n_checked += 1
        for rec in q3_records:
            assert rec.status == "ok", (rec.instance, rec.platform, rec.status)
            assert rec.makespan <= 12 * rec.lp_star * (1 + REL_TOL)
            n_checked += 1
        assert n_checked == 200 * 4 * 2 + 200 * 4 * 2
        assert q2_time + q3_time < 600.0


def test_criterion_5_online_bound_oracle(erls_suite):
    with criterion(5, "500 tiny instances: online makespan within 4*sqrt(m/k) of exact optimum"):
        rows, elapsed = erls_suite
        assert len(rows) == 500
        for row in rows:
            assert row["mk"] <= row["bound"] * row["opt"] + 1e-9
        assert elapsed < 300.0


def test_criterion_6_simplex_oracle_equivalence():
    with criterion(6, "bundled simplex matches vertex enumeration on 100 random models"):
        rng = np.random.default_rng(606)
        for _ in range(100):
            n = int(rng.integers(1, 7))
            g = random_dag(rng, n, float(rng.random()) * 0.6, allow_forbidden=True,
                           low=0.0, high=10.0)
            plat = Platform((int(rng.integers(1, 5)), int(rng.integers(1, 3))))
            lam = solve_lp(build_hlp(g, plat)).objective
            ref = vertex_enum_lp_optimum(g, plat)
            assert lam == pytest.approx(ref, abs=1e-6), (n, lam, ref)


TABLE_COUNTS = {
    (2, 100): 203, (2, 200): 403, (2, 300): 603, (2, 400): 803, (2, 500): 1003,
    (5, 100): 506, (5, 200): 1006, (5, 300): 1506, (5, 400): 2006, (5, 500): 2506,
    (10, 100): 1011, (10, 200): 2011, (10, 300): 3011, (10, 400): 4011, (10, 500): 5011,
}


def test_criterion_7_generator_fidelity():
    with criterion(7, "fork-join counts match the published table; identical seeds, identical bytes"):
        for (p, w), expected in TABLE_COUNTS.items():
            g = gen_forkjoin(ForkJoinSpec(p, w, seed=1))
            assert len(g.tasks) == expected, (p, w)
            validate_graph(g, Platform((16, 2)))
            again = gen_forkjoin(ForkJoinSpec(p, w, seed=1))
            assert graph_to_json(g) == graph_to_json(again)
        for gen, args in [
            (gen_hlp_adversary, (3,)),
            (gen_heft_adversary, (4, 2)),
            (gen_erls_adversary, (4, 1)),
        ]:
            graph, plat = gen(*args)
            validate_graph(graph, plat)


def test_criterion_8_feasibility_closure(q2_suite, q3_suite, erls_suite):
    with criterion(8, "every schedule on every suite instance validated feasible"):
        q2_records, _ = q2_suite
        q3_records, _ = q3_suite
        # the matrix runner validates each schedule before recording "ok"
        bad = [r for r in q2_records + q3_records if r.status != "ok"]
        assert bad == []
        rows, _ = erls_suite  # each run validated inside the fixture
        assert len(rows) == 500


def test_criterion_9_comparative_report(q2_suite, tmp_path):
    with criterion(9, "pairwise report exists, parses, and OLS mean stays in the sanity band"):
        from hybridsched.report import (
            parse_summary_csv,
            render_figures,
            summarize_runs,
            summary_to_csv,
        )

        records, _ = q2_suite
        summary = summarize_runs(records_to_csv(records))
        text = summary_to_csv(summary)
        out = tmp_path / "summary.csv"
        out.write_text(text)
        parsed = parse_summary_csv(out.read_text())

        assert ("pairwise_makespan", "forkjoin", "hlp-ols", "hlp-est") in parsed
        assert ("pairwise_makespan", "forkjoin", "hlp-ols", "heft") in parsed
        mean_ols = parsed[("ratio_vs_lp", "forkjoin", "hlp-ols", "")]["mean"]
        mean_est = parsed[("ratio_vs_lp", "forkjoin", "hlp-est", "")]["mean"]
        assert mean_ols <= mean_est + 0.05

        figures = render_figures(summary, tmp_path / "figs")
        assert all(p.exists() and p.stat().st_size > 0 for p in figures)


def test_criterion_10_bench_determinism(tmp_path):
    with criterion(10, "rerunning the default matrix twice gives byte-identical CSVs"):
        config = load_config(REPO_ROOT / "configs" / "default.toml")
        first = records_to_csv(run_experiment(config))
        second = records_to_csv(run_experiment(config))
        assert first == second
        (tmp_path / "runs.csv").write_text(first)
