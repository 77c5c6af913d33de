"""Bounded-variable revised simplex over sparse rows.

The engine works on the computational form ``A x + I s + I a = rhs`` where
``s`` are row slacks (sign ranges encode the row sense) and ``a`` are
artificial columns used only to patch an infeasible starting basis in
phase 1.  Factorizations use a sparse LU of the basis plus a product-form
eta file, refactored periodically.  Dantzig pricing switches to Bland's
rule after a degenerate stall, which guarantees termination.

A dual-simplex reoptimization path supports warm starts after bound
changes (branch-and-bound fixings): the parent basis stays dual feasible,
so a handful of dual pivots restore primal feasibility.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .errors import SolverError

# Nonbasic statuses; BASIC entries are tracked via the basis array.
BASIC = 0
AT_LOWER = 1
AT_UPPER = 2
FREE = 3

FEAS_TOL = 1e-7       # admissible primal residual at optimality
DUAL_TOL = 1e-9       # reduced-cost threshold for pricing
PIVOT_TOL = 1e-9      # smallest coefficient eligible to block a ratio test
PIVOT_ACCEPT = 1e-7   # smallest pivot taken without a refactor-and-retry
HARRIS_DELTA = 1e-7   # bound-violation slack in the two-pass ratio test
STALL_LIMIT = 150     # degenerate steps before Bland's rule engages
REFACTOR_EVERY = 40   # eta-file length triggering refactorization

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"


@dataclass
class LpSolution:
    """Result of one LP solve on the structural columns."""

    x: np.ndarray
    objective: float
    status: str
    duals: np.ndarray
    iterations: int


class _Eta:
    __slots__ = ("r", "w")

    def __init__(self, r: int, w: np.ndarray):
        self.r = r
        self.w = w

    def ftran(self, v: np.ndarray) -> None:
        t = v[self.r] / self.w[self.r]
        if t != 0.0:
            v -= t * self.w
        v[self.r] = t

    def btran(self, v: np.ndarray) -> None:
        w = self.w
        r = self.r
        v[r] = (v[r] - (w @ v - w[r] * v[r])) / w[r]


class SimplexEngine:
    """One LP workspace.  Separate engines share no state and may run
    concurrently; a single engine must not be used from two threads."""

    def __init__(self, a: sp.spmatrix, senses: np.ndarray, rhs: np.ndarray,
                 lower: np.ndarray, upper: np.ndarray, obj: np.ndarray):
        m, n = a.shape
        self.m, self.n = m, n
        self.rhs = np.asarray(rhs, dtype=float)
        self.senses = np.asarray(senses)
        eye = sp.identity(m, format="csc")
        self.a_full = sp.hstack([sp.csc_matrix(a), eye, eye], format="csc")
        self.a_full_t = sp.csr_matrix(self.a_full.T)
        self.n_tot = n + 2 * m
        self.slack0 = n
        self.art0 = n + m

        # Column bounds for the computational form.  Slack sign ranges
        # encode the row sense: 'L' -> [0, inf), 'G' -> (-inf, 0],
        # 'E' -> [0, 0].
        lo = np.empty(self.n_tot)
        up = np.empty(self.n_tot)
        lo[:n] = lower
        up[:n] = upper
        sl = slice(n, n + m)
        lo[sl] = np.where(self.senses == "G", -np.inf, 0.0)
        up[sl] = np.where(self.senses == "L", np.inf, 0.0)
        lo[self.art0:] = 0.0
        up[self.art0:] = 0.0
        self.lower = lo
        self.upper = up

        self.obj = np.zeros(self.n_tot)
        self.obj[:n] = obj

        self.basis = np.empty(m, dtype=np.int64)
        self.stat = np.empty(self.n_tot, dtype=np.int8)
        self.xb = np.zeros(m)
        self._lu = None
        self._etas: list[_Eta] = []
        self.iterations = 0

    # -- factorization ----------------------------------------------------

    def _refactor(self) -> None:
        bmat = self.a_full[:, self.basis]
        try:
            self._lu = splu(sp.csc_matrix(bmat))
        except RuntimeError as exc:
            raise SolverError(f"singular basis during refactorization: {exc}") from None
        self._etas = []

    def _ftran(self, v: np.ndarray) -> np.ndarray:
        u = self._lu.solve(v)
        for eta in self._etas:
            eta.ftran(u)
        return u

    def _btran(self, v: np.ndarray) -> np.ndarray:
        u = v.copy()
        for eta in reversed(self._etas):
            eta.btran(u)
        return self._lu.solve(u, trans="T")

    def _push_eta(self, r: int, w: np.ndarray) -> None:
        self._etas.append(_Eta(r, w.copy()))
        if len(self._etas) >= REFACTOR_EVERY:
            self._refactor()
            self._recompute_xb()

    def _col_dense(self, j: int) -> np.ndarray:
        a = self.a_full
        v = np.zeros(self.m)
        start, end = a.indptr[j], a.indptr[j + 1]
        v[a.indices[start:end]] = a.data[start:end]
        return v

    # -- state ------------------------------------------------------------

    def _nonbasic_values(self) -> np.ndarray:
        x = np.where(self.stat == AT_UPPER, self.upper, self.lower)
        x[self.stat == FREE] = 0.0
        x[self.stat == BASIC] = 0.0
        # FREE columns have infinite lower bounds; zero them explicitly.
        bad = ~np.isfinite(x)
        x[bad] = 0.0
        return x

    def _recompute_xb(self) -> None:
        xnb = self._nonbasic_values()
        rhs_eff = self.rhs - self.a_full @ xnb
        self.xb = self._ftran(rhs_eff)

    def _value_of(self, j: int) -> float:
        if self.stat[j] == AT_UPPER:
            return self.upper[j]
        if self.stat[j] == FREE:
            return 0.0
        v = self.lower[j]
        return v if np.isfinite(v) else 0.0

    def full_x(self) -> np.ndarray:
        x = self._nonbasic_values()
        x[self.basis] = self.xb
        return x

    def state(self) -> tuple[np.ndarray, np.ndarray]:
        return self.basis.copy(), self.stat.copy()

    def load_state(self, basis: np.ndarray, stat: np.ndarray) -> None:
        self.basis = basis.copy()
        self.stat = stat.copy()
        self._refactor()
        self._recompute_xb()

    def set_bounds(self, col: int, lo: float, up: float) -> None:
        self.lower[col] = lo
        self.upper[col] = up

    def structural_bounds(self, lower: np.ndarray, upper: np.ndarray) -> None:
        self.lower[: self.n] = lower
        self.upper[: self.n] = upper

    # -- cold start -------------------------------------------------------

    def _cold_start(self) -> None:
        n, m = self.n, self.m
        self.stat[:] = AT_LOWER
        finite_lo = np.isfinite(self.lower[:n])
        finite_up = np.isfinite(self.upper[:n])
        self.stat[:n][~finite_lo & finite_up] = AT_UPPER
        self.stat[:n][~finite_lo & ~finite_up] = FREE
        self.stat[self.slack0:] = AT_LOWER
        # Slacks whose single bound is zero sit at it either way; '>=' rows
        # keep their slack at the upper bound (zero).
        gmask = np.asarray(self.senses == "G")
        self.stat[self.slack0:self.art0][gmask] = AT_UPPER
        self.lower[self.art0:] = 0.0
        self.upper[self.art0:] = 0.0

        xnb = self._nonbasic_values()
        xnb[self.slack0:] = 0.0
        r = self.rhs - self.a_full[:, :n] @ xnb[:n]

        self._art_cost = np.zeros(self.n_tot)
        slack_lo = self.lower[self.slack0:self.art0]
        slack_up = self.upper[self.slack0:self.art0]
        for i in range(m):
            ri = r[i]
            if slack_lo[i] - FEAS_TOL <= ri <= slack_up[i] + FEAS_TOL:
                self.basis[i] = self.slack0 + i
                self.stat[self.slack0 + i] = BASIC
                self.xb[i] = ri
            else:
                j = self.art0 + i
                self.basis[i] = j
                self.stat[j] = BASIC
                self.xb[i] = ri
                if ri >= 0.0:
                    self.upper[j] = np.inf
                    self._art_cost[j] = 1.0
                else:
                    self.lower[j] = -np.inf
                    self._art_cost[j] = -1.0
        self._refactor()

    # -- primal simplex ---------------------------------------------------

    def _price(self, cost: np.ndarray) -> np.ndarray:
        y = self._btran(cost[self.basis])
        return cost - self.a_full_t @ y

    def _primal_loop(self, cost: np.ndarray, phase_one: bool, max_iter: int) -> str:
        stall = 0
        bland = False
        retried = False
        movable = self.upper - self.lower > 0.0
        for _ in range(max_iter):
            self.iterations += 1
            d = self._price(cost)
            stat = self.stat
            cand_lo = (stat == AT_LOWER) & movable & (d < -DUAL_TOL)
            cand_up = (stat == AT_UPPER) & movable & (d > DUAL_TOL)
            cand_fr = (stat == FREE) & (np.abs(d) > DUAL_TOL)
            cand = cand_lo | cand_up | cand_fr
            idx = np.flatnonzero(cand)
            if idx.size == 0:
                return OPTIMAL
            if bland:
                j = int(idx[0])
            else:
                j = int(idx[np.argmax(np.abs(d[idx]))])
            sigma = 1.0 if (stat[j] == AT_LOWER or (stat[j] == FREE and d[j] < 0)) else -1.0

            w = self._ftran(self._col_dense(j))
            theta, block = self._primal_ratio(j, sigma, w, bland)
            if theta is None:
                if phase_one:
                    raise SolverError("phase-1 objective unbounded; inconsistent setup")
                return UNBOUNDED

            # A razor-thin pivot poisons the eta file; refresh the
            # factorization once and re-derive the step before accepting.
            if (block >= 0 and abs(w[block]) < PIVOT_ACCEPT
                    and self._etas and not retried):
                self._refactor()
                self._recompute_xb()
                retried = True
                continue
            retried = False

            if theta <= 1e-10:
                stall += 1
                if stall >= STALL_LIMIT:
                    bland = True
            else:
                stall = 0
                bland = False

            if block == -1:
                # Bound flip: the entering column runs to its other bound.
                if theta > 0.0:
                    self.xb -= sigma * theta * w
                self.stat[j] = AT_UPPER if sigma > 0 else AT_LOWER
            else:
                enter_val = self._value_of(j) + sigma * theta
                if theta > 0.0:
                    self.xb -= sigma * theta * w
                leave = self.basis[block]
                hit_lower = sigma * w[block] > 0
                if self.lower[leave] == self.upper[leave]:
                    self.stat[leave] = AT_LOWER
                else:
                    self.stat[leave] = AT_LOWER if hit_lower else AT_UPPER
                self.stat[j] = BASIC
                self.basis[block] = j
                self.xb[block] = enter_val
                self._push_eta(block, w)
        raise SolverError("primal simplex iteration limit exceeded")

    def _primal_ratio(self, j: int, sigma: float, w: np.ndarray,
                      bland: bool) -> tuple[float | None, int]:
        """Two-pass (Harris) ratio test.  Pass one finds the largest step
        admissible when blocking bounds may flex by a small delta; pass
        two picks the numerically strongest pivot among blockers within
        that step.  Returns (theta, blocking basis position), with -1 for
        a bound flip and (None, -1) when unbounded."""
        lo_b = self.lower[self.basis]
        up_b = self.upper[self.basis]
        sw = sigma * w

        dec = sw > PIVOT_TOL
        inc = sw < -PIVOT_TOL
        ratios = np.full(self.m, np.inf)
        relaxed = np.full(self.m, np.inf)
        with np.errstate(invalid="ignore"):
            ratios[dec] = (self.xb[dec] - lo_b[dec]) / sw[dec]
            relaxed[dec] = (self.xb[dec] - lo_b[dec] + HARRIS_DELTA) / sw[dec]
            ratios[inc] = (up_b[inc] - self.xb[inc]) / (-sw[inc])
            relaxed[inc] = (up_b[inc] - self.xb[inc] + HARRIS_DELTA) / (-sw[inc])
        ratios[~np.isfinite(ratios)] = np.inf
        relaxed[~np.isfinite(relaxed)] = np.inf
        np.maximum(ratios, 0.0, out=ratios)
        np.maximum(relaxed, 0.0, out=relaxed)

        theta_max = float(relaxed.min(initial=np.inf))
        span = self.upper[j] - self.lower[j]
        if np.isfinite(span) and span <= theta_max:
            return span, -1
        if not np.isfinite(theta_max):
            return None, -1

        near = np.flatnonzero(ratios <= theta_max)
        if near.size == 0:
            near = np.array([int(np.argmin(ratios))])
        if bland:
            block = int(near[np.argmin(self.basis[near])])
        else:
            block = int(near[np.argmax(np.abs(sw[near]))])
        return float(ratios[block]), block

    # -- dual simplex -----------------------------------------------------

    def _dual_loop(self, cost: np.ndarray, max_iter: int) -> str:
        movable = self.upper - self.lower > 0.0
        retried = False
        for _ in range(max_iter):
            self.iterations += 1
            lo_b = self.lower[self.basis]
            up_b = self.upper[self.basis]
            viol_lo = lo_b - self.xb
            viol_up = self.xb - up_b
            worst_lo = viol_lo.max(initial=-np.inf)
            worst_up = viol_up.max(initial=-np.inf)
            if max(worst_lo, worst_up) <= FEAS_TOL:
                return OPTIMAL
            below = worst_lo >= worst_up
            r = int(np.argmax(viol_lo)) if below else int(np.argmax(viol_up))

            e = np.zeros(self.m)
            e[r] = 1.0
            rho = self._btran(e)
            alpha = self.a_full_t @ rho
            d = self._price(cost)

            stat = self.stat
            if below:
                elig = ((stat == AT_LOWER) & movable & (alpha < -PIVOT_TOL)) | \
                       ((stat == AT_UPPER) & movable & (alpha > PIVOT_TOL)) | \
                       ((stat == FREE) & (np.abs(alpha) > PIVOT_TOL))
            else:
                elig = ((stat == AT_LOWER) & movable & (alpha > PIVOT_TOL)) | \
                       ((stat == AT_UPPER) & movable & (alpha < -PIVOT_TOL)) | \
                       ((stat == FREE) & (np.abs(alpha) > PIVOT_TOL))
            idx = np.flatnonzero(elig)
            if idx.size == 0:
                return INFEASIBLE

            ratios = np.abs(d[idx]) / np.abs(alpha[idx])
            best = ratios.min()
            near = idx[ratios <= best + 1e-12]
            q = int(near[np.argmax(np.abs(alpha[near]))])

            if abs(alpha[q]) < PIVOT_ACCEPT and self._etas and not retried:
                self._refactor()
                self._recompute_xb()
                retried = True
                continue
            retried = False

            target = lo_b[r] if below else up_b[r]
            delta = (self.xb[r] - target) / alpha[q]
            w = self._ftran(self._col_dense(q))
            enter_val = self._value_of(q) + delta
            self.xb -= delta * w
            leave = self.basis[r]
            if self.lower[leave] == self.upper[leave]:
                self.stat[leave] = AT_LOWER
            else:
                self.stat[leave] = AT_LOWER if below else AT_UPPER
            self.stat[q] = BASIC
            self.basis[r] = q
            self.xb[r] = enter_val
            self._push_eta(r, w)
        raise SolverError("dual simplex iteration limit exceeded")

    # -- drivers ----------------------------------------------------------

    def _max_iter(self) -> int:
        return 200 * (self.m + self.n) + 20000

    def solve_cold(self) -> LpSolution:
        self.iterations = 0
        self._cold_start()
        if np.any(self._art_cost != 0.0):
            status = self._primal_loop(self._art_cost, phase_one=True,
                                       max_iter=self._max_iter())
            if status != OPTIMAL:
                raise SolverError("phase 1 ended in an impossible state")
            infeas = float(self._art_cost[self.basis] @ self.xb)
            scale = max(1.0, float(np.abs(self.rhs).max(initial=0.0)))
            if infeas > FEAS_TOL * scale:
                return self._finish(INFEASIBLE)
            self.lower[self.art0:] = 0.0
            self.upper[self.art0:] = 0.0
        status = self._primal_loop(self.obj, phase_one=False,
                                   max_iter=self._max_iter())
        return self._finish(status)

    def dual_reoptimize(self) -> LpSolution:
        """Reoptimize after bound changes from a dual-feasible basis."""
        self.iterations = 0
        self._recompute_xb()
        status = self._dual_loop(self.obj, max_iter=self._max_iter())
        if status == INFEASIBLE:
            return self._finish(INFEASIBLE)
        # Bound changes can leave stray reduced-cost violations (e.g. a
        # freed direction); a primal cleanup certifies optimality.
        status = self._primal_loop(self.obj, phase_one=False,
                                   max_iter=self._max_iter())
        return self._finish(status)

    def _finish(self, status: str) -> LpSolution:
        if status != OPTIMAL:
            return LpSolution(
                x=np.zeros(self.n), objective=np.nan, status=status,
                duals=np.zeros(self.m), iterations=self.iterations,
            )
        # Verify against a fresh factorization; eta drift can leave the
        # incremental values feasible while the true ones are not, in
        # which case the (dual feasible) basis is repaired in place.
        scale = max(1.0, float(np.abs(self.rhs).max(initial=0.0)))
        for attempt in range(4):
            self._refactor()
            self._recompute_xb()
            if self._primal_residual() <= FEAS_TOL * scale:
                break
            if attempt == 3:
                raise SolverError(
                    f"primal residual {self._primal_residual():.3e} "
                    "after optimality claim"
                )
            repaired = self._dual_loop(self.obj, max_iter=self._max_iter())
            if repaired == INFEASIBLE:
                return LpSolution(
                    x=np.zeros(self.n), objective=np.nan, status=INFEASIBLE,
                    duals=np.zeros(self.m), iterations=self.iterations,
                )
            inner = self._primal_loop(self.obj, phase_one=False,
                                      max_iter=self._max_iter())
            if inner != OPTIMAL:
                return self._finish(inner)
        x = self.full_x()
        y = self._btran(self.obj[self.basis])
        return LpSolution(
            x=x[: self.n],
            objective=float(self.obj[: self.n] @ x[: self.n]),
            status=OPTIMAL,
            duals=y,
            iterations=self.iterations,
        )

    def _primal_residual(self) -> float:
        x = self.full_x()
        lo_violation = float(np.max(self.lower - x, initial=0.0))
        up_violation = float(np.max(x - self.upper, initial=0.0))
        row_violation = float(np.max(np.abs(self.a_full @ x - self.rhs), initial=0.0))
        return max(lo_violation, up_violation, row_violation)


def solve_arrays(a, senses, rhs, lower, upper, obj) -> LpSolution:
    """One-shot LP solve over raw arrays (rows: a x <sense> rhs)."""
    engine = SimplexEngine(a, senses, rhs, lower, upper, obj)
    return engine.solve_cold()
