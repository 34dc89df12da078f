"""Bundled linear-programming solver.

A bounded-variable primal simplex over a sparse constraint matrix with a
dense, explicitly maintained basis inverse (BLAS rank-one updates, adaptive
refactorisation).  Two phases: artificial variables are introduced only for
rows violated by the starting point, so a good crash basis (see
``relaxation``) usually skips phase one entirely.

Pricing is Dantzig's rule on incrementally maintained reduced costs, with a
fresh per-candidate verification so stale values can never trigger a wrong
pivot, and switches permanently to Bland's rule after a long degenerate
stall, which guarantees termination.  Pricing can also be forced to
``"bland"``.  Everything is deterministic.

The solver is deliberately self-contained; callers wanting an external
engine for very large models can implement the same ``solve()`` contract.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.linalg.blas import dger

BASIC, AT_LOWER, AT_UPPER = 0, 1, 2

FEAS_TOL = 1e-7
COST_TOL = 1e-9
PIVOT_TOL = 1e-9
STALL_LIMIT = 500
CHECK_EVERY = 150
RESID_TOL = 1e-9


@dataclass
class StandardLP:
    """min c.x  s.t.  A x (<= or ==) b,  lb <= x <= ub."""

    c: np.ndarray
    A: sp.csc_matrix
    senses: list[str]
    b: np.ndarray
    lb: np.ndarray
    ub: np.ndarray


@dataclass
class SimplexResult:
    status: str  # optimal | infeasible | unbounded | iteration_limit
    objective: float
    x: np.ndarray
    iterations: int = 0


@dataclass
class _Work:
    """Mutable solver state over the extended column space
    [structural | slacks | artificials]."""

    A: sp.csc_matrix
    AT: sp.csr_matrix
    b: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    n_struct: int
    n_slack: int
    basis: np.ndarray
    status: np.ndarray
    binv: np.ndarray
    xb: np.ndarray

    @property
    def m(self) -> int:
        return len(self.b)

    @property
    def n(self) -> int:
        return self.A.shape[1]

    def nonbasic_values(self) -> np.ndarray:
        v = np.where(self.status == AT_UPPER, self.ub, self.lb)
        v[self.status == BASIC] = 0.0
        return v

    def column(self, j: int) -> np.ndarray:
        """Current tableau column Binv @ A_j."""
        lo, hi = self.A.indptr[j], self.A.indptr[j + 1]
        idx, vals = self.A.indices[lo:hi], self.A.data[lo:hi]
        if len(idx) == 1:
            return self.binv[:, idx[0]] * vals[0]
        return self.binv[:, idx] @ vals

    def basic_residual(self) -> float:
        """Feasibility defect of the maintained basic values (cheap, sparse)."""
        if self.m == 0:
            return 0.0
        lhs = self.A[:, self.basis] @ self.xb + self.A @ self.nonbasic_values()
        return float(np.abs(lhs - self.b).max())

    def refactor(self) -> None:
        """Rebuild the basis inverse and the basic values from scratch."""
        if self.m == 0:
            return
        bmat = self.A[:, self.basis].toarray()
        self.binv = np.asfortranarray(np.linalg.inv(bmat))
        rhs = self.b - self.A @ self.nonbasic_values()
        self.xb = self.binv @ rhs

    def reduced_costs(self, c: np.ndarray) -> np.ndarray:
        if self.m == 0:
            return c.copy()
        y = c[self.basis] @ self.binv
        return c - self.AT @ y

    def full_values(self) -> np.ndarray:
        v = self.nonbasic_values()
        v[self.basis] = self.xb
        return v

    def solution(self) -> np.ndarray:
        return self.full_values()[: self.n_struct]


def solve(
    lp: StandardLP,
    at_upper: np.ndarray | None = None,
    tight_lb: np.ndarray | None = None,
    max_iter: int | None = None,
    pricing: str = "auto",
) -> SimplexResult:
    """Solve the LP.

    ``at_upper`` marks structural variables whose starting point is their
    upper bound; ``tight_lb`` optionally replaces lower bounds with tighter
    values the caller guarantees are valid inequalities (the feasible set,
    and hence the optimum, must be unchanged).
    """
    n_struct = len(lp.c)
    m = len(lp.b)
    lb = lp.lb.astype(float).copy()
    ub = lp.ub.astype(float).copy()
    if tight_lb is not None:
        lb = np.maximum(lb, tight_lb)

    # Slack columns for inequality rows.
    ineq_rows = [i for i, s in enumerate(lp.senses) if s == "<="]
    n_slack = len(ineq_rows)
    slack_of_row = {i: n_struct + k for k, i in enumerate(ineq_rows)}

    # Starting statuses for structural variables and slacks.
    status = np.full(n_struct + n_slack, AT_LOWER, dtype=np.int8)
    if at_upper is not None:
        status[:n_struct][at_upper & np.isfinite(ub[:n_struct])] = AT_UPPER

    lb = np.concatenate([lb, np.zeros(n_slack)])
    ub = np.concatenate([ub, np.full(n_slack, np.inf)])

    v_struct = np.where(status[:n_struct] == AT_UPPER, ub[:n_struct], lb[:n_struct])
    resid = lp.b - lp.A @ v_struct

    # Basic variable per row: the slack where it is feasible at the start,
    # an artificial column otherwise (always for equality rows).
    basis = np.empty(m, dtype=np.int64)
    art_rows, art_signs = [], []
    xb = np.zeros(m)
    next_col = n_struct + n_slack
    for i in range(m):
        if lp.senses[i] == "<=" and resid[i] >= 0.0:
            basis[i] = slack_of_row[i]
            status[slack_of_row[i]] = BASIC
            xb[i] = resid[i]
        else:
            sign = 1.0 if resid[i] >= 0 else -1.0
            art_rows.append(i)
            art_signs.append(sign)
            basis[i] = next_col
            xb[i] = abs(resid[i])
            next_col += 1
    n_art = len(art_rows)

    if n_slack == 0:
        cols = [lp.A]
    else:
        cols = [lp.A, sp.identity(m, format="csc")[:, ineq_rows]]
    if n_art:
        art = sp.csc_matrix(
            (art_signs, (art_rows, range(n_art))), shape=(m, n_art)
        )
        cols.append(art)
    A = sp.hstack(cols, format="csc") if len(cols) > 1 else lp.A.tocsc()

    lb = np.concatenate([lb, np.zeros(n_art)])
    ub = np.concatenate([ub, np.full(n_art, np.inf)])
    status = np.concatenate([status, np.full(n_art, BASIC, dtype=np.int8)])

    binv = np.asfortranarray(np.eye(m))
    for i, sign in zip(art_rows, art_signs):
        if sign < 0:
            binv[i, i] = -1.0

    w = _Work(
        A=A,
        AT=A.T.tocsr(),
        b=lp.b.astype(float),
        lb=lb,
        ub=ub,
        n_struct=n_struct,
        n_slack=n_slack,
        basis=basis,
        status=status,
        binv=binv,
        xb=xb,
    )

    if max_iter is None:
        max_iter = 50 * (m + w.n)
    iters = 0

    # Artificials may never re-enter the basis; fixed variables cannot move.
    frozen = np.zeros(w.n, dtype=bool)
    frozen[n_struct + n_slack:] = True
    frozen[: n_struct + n_slack] |= (
        ub[: n_struct + n_slack] - lb[: n_struct + n_slack]
    ) <= 0.0

    # ---- Phase 1: drive artificial variables to zero ----------------------
    art_basic = w.basis >= n_struct + n_slack
    if n_art and w.xb[art_basic].sum() > FEAS_TOL:
        c1 = np.zeros(w.n)
        c1[n_struct + n_slack:] = 1.0
        status_code, used = _iterate(w, c1, frozen, max_iter, pricing)
        iters += used
        if status_code != "optimal":
            return SimplexResult(status_code, np.nan, w.solution(), iters)
        if c1 @ w.full_values() > FEAS_TOL:
            return SimplexResult("infeasible", np.nan, w.solution(), iters)
    # Pin artificials at zero for phase 2.
    w.ub[n_struct + n_slack:] = 0.0
    w.xb[w.basis >= n_struct + n_slack] = 0.0

    # ---- Phase 2: the real objective --------------------------------------
    c2 = np.zeros(w.n)
    c2[:n_struct] = lp.c
    status_code, used = _iterate(w, c2, frozen, max_iter - iters, pricing)
    iters += used
    x = w.solution()
    if status_code != "optimal":
        return SimplexResult(status_code, np.nan, x, iters)
    return SimplexResult("optimal", float(lp.c @ x), x, iters)


def _iterate(
    w: _Work, c: np.ndarray, frozen: np.ndarray, max_iter: int, pricing: str
) -> tuple[str, int]:
    """Run simplex pivots until optimality for objective ``c``.

    Reduced costs are updated incrementally from the pivot row; before a
    candidate enters, its reduced cost is recomputed exactly from the fresh
    tableau column, so numerical drift can only cost re-pricing, never a
    wrong pivot.
    """
    m = w.m
    use_bland = pricing == "bland"
    stall = 0
    last_obj = np.inf
    iters = 0
    since_check = 0
    d = w.reduced_costs(c)

    while True:
        if iters >= max_iter:
            return "iteration_limit", iters

        eligible = ~frozen & (
            ((w.status == AT_LOWER) & (d < -COST_TOL))
            | ((w.status == AT_UPPER) & (d > COST_TOL))
        )
        if not eligible.any():
            # Rule out stale-cost optimality before declaring victory.
            d = w.reduced_costs(c)
            eligible = ~frozen & (
                ((w.status == AT_LOWER) & (d < -COST_TOL))
                | ((w.status == AT_UPPER) & (d > COST_TOL))
            )
            if not eligible.any():
                return "optimal", iters

        if use_bland:
            j = int(np.argmax(eligible))
        else:
            j = int(np.argmax(np.where(eligible, np.abs(d), 0.0)))
        sigma = 1.0 if w.status[j] == AT_LOWER else -1.0

        col = w.column(j) if m else np.zeros(0)
        # Exact reduced cost of the candidate from the fresh column.
        d_j = float(c[j] - c[w.basis] @ col) if m else float(c[j])
        if sigma * d_j > -COST_TOL:
            d[j] = d_j  # stale entry; reprice
            continue
        d[j] = d_j

        step_dir = sigma * col

        # Ratio test: basic variables hitting a bound, or the entering
        # variable flipping to its opposite bound.
        t_flip = w.ub[j] - w.lb[j]
        limits = np.full(m, np.inf)
        sig_rows = np.abs(step_dir) > PIVOT_TOL
        if sig_rows.any():
            bound = np.where(step_dir > 0, w.lb[w.basis], w.ub[w.basis])
            with np.errstate(invalid="ignore", divide="ignore", over="ignore"):
                lim = (w.xb - bound) / step_dir
            limits[sig_rows] = np.maximum(lim[sig_rows], 0.0)
        t_rows = limits.min() if m else np.inf

        if t_flip <= t_rows:
            if not np.isfinite(t_flip):
                return "unbounded", iters
            # Bound flip, no basis change, reduced costs unchanged.
            w.xb -= step_dir * t_flip
            w.status[j] = AT_UPPER if w.status[j] == AT_LOWER else AT_LOWER
            iters += 1
            continue
        if not np.isfinite(t_rows):
            return "unbounded", iters

        tied = np.flatnonzero(limits <= t_rows + 1e-12)
        if use_bland:
            r = int(tied[np.argmin(w.basis[tied])])
        else:
            r = int(tied[np.argmax(np.abs(step_dir[tied]))])

        t = limits[r]
        leaving = w.basis[r]
        w.xb -= step_dir * t
        w.status[leaving] = AT_LOWER if step_dir[r] > 0 else AT_UPPER
        enter_from = w.lb[j] if sigma > 0 else w.ub[j]
        w.basis[r] = j
        w.status[j] = BASIC
        w.xb[r] = enter_from + sigma * t

        # Rank-one update of the basis inverse, then of the reduced costs.
        piv = col[r]
        pivrow = w.binv[r] / piv
        w.binv = dger(-1.0, col, pivrow, a=w.binv, overwrite_a=1)
        w.binv[r] = pivrow
        rho = w.AT @ pivrow
        d -= d_j * rho
        d[j] = 0.0

        iters += 1
        since_check += 1
        if since_check >= CHECK_EVERY:
            since_check = 0
            scale = 1.0 + float(np.abs(w.b).max()) if m else 1.0
            if w.basic_residual() > RESID_TOL * scale:
                w.refactor()
            d = w.reduced_costs(c)

        if not use_bland and pricing == "auto":
            obj = float(c @ w.full_values()) if m else 0.0
            if obj < last_obj - 1e-12 * max(1.0, abs(last_obj)):
                stall = 0
                last_obj = obj
            else:
                stall += 1
                if stall > STALL_LIMIT:
                    use_bland = True
