import numpy as np
import pytest
import scipy.sparse as sp

from hybridsched.simplex import StandardLP, solve


def _lp(c, A, senses, b, lb, ub):
    return StandardLP(
        c=np.asarray(c, dtype=float),
        A=sp.csc_matrix(np.asarray(A, dtype=float).reshape(len(senses), len(c))),
        senses=list(senses),
        b=np.asarray(b, dtype=float),
        lb=np.asarray(lb, dtype=float),
        ub=np.asarray(ub, dtype=float),
    )


def test_box_corner():
    # max x + y with x + y <= 1 on the unit box
    res = solve(_lp([-1, -1], [[1, 1]], ["<="], [1], [0, 0], [1, 1]))
    assert res.status == "optimal"
    assert res.objective == pytest.approx(-1.0, abs=1e-9)


def test_equality_row():
    res = solve(_lp([2, 1], [[1, 1]], ["=="], [1], [0, 0], [1, 1]))
    assert res.status == "optimal"
    assert res.objective == pytest.approx(1.0, abs=1e-9)
    assert res.x == pytest.approx([0.0, 1.0], abs=1e-9)


def test_infeasible():
    res = solve(_lp([1], [[1]], ["=="], [-1], [0], [1]))
    assert res.status == "infeasible"


def test_unbounded():
    res = solve(
        StandardLP(
            c=np.array([-1.0]),
            A=sp.csc_matrix((0, 1)),
            senses=[],
            b=np.zeros(0),
            lb=np.zeros(1),
            ub=np.array([np.inf]),
        )
    )
    assert res.status == "unbounded"


def test_no_rows_sits_at_bounds():
    res = solve(
        StandardLP(
            c=np.array([1.0, -1.0]),
            A=sp.csc_matrix((0, 2)),
            senses=[],
            b=np.zeros(0),
            lb=np.array([3.0, 0.0]),
            ub=np.array([np.inf, 2.0]),
        )
    )
    assert res.status == "optimal"
    assert res.x == pytest.approx([3.0, 2.0])


def test_bound_flip_path():
    # Optimum needs x at its upper bound with no constraint ever binding.
    res = solve(_lp([-1, 0], [[1, 1]], ["<="], [10], [0, 0], [2, 2]))
    assert res.objective == pytest.approx(-2.0, abs=1e-9)


def test_iteration_limit_status():
    res = solve(_lp([2, 1], [[1, 1]], ["=="], [1], [0, 0], [1, 1]), max_iter=0)
    assert res.status == "iteration_limit"


def test_bland_matches_auto():
    rng = np.random.default_rng(5)
    for _ in range(25):
        n, m = int(rng.integers(2, 6)), int(rng.integers(1, 5))
        A = rng.normal(size=(m, n)).round(2)
        b = rng.uniform(0.5, 3, size=m).round(2)
        c = rng.normal(size=n).round(2)
        senses = ["<=" if rng.random() < 0.7 else "==" for _ in range(m)]
        lb = np.zeros(n)
        ub = np.where(rng.random(n) < 0.5, 1.0, np.inf)
        lp = _lp(c, A, senses, b, lb, ub)
        auto = solve(lp, pricing="auto")
        bland = solve(lp, pricing="bland")
        assert auto.status == bland.status
        if auto.status == "optimal":
            assert auto.objective == pytest.approx(bland.objective, abs=1e-7)


def test_tight_lb_and_warm_start_do_not_change_optimum():
    # x >= 1 is implied by the equality row; passing it as a tightened bound
    # plus an at-upper start must not move the optimum.
    lp = _lp([1, 3], [[1, 1]], ["=="], [2], [0, 0], [1, 1])
    plain = solve(lp)
    hinted = solve(
        lp,
        at_upper=np.array([True, False]),
        tight_lb=np.array([1.0, 0.0]),
    )
    assert plain.objective == pytest.approx(hinted.objective, abs=1e-9)
    assert hinted.objective == pytest.approx(1 * 1 + 3 * 1, abs=1e-9)
