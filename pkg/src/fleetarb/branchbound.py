"""MILP solving: LP relaxations, best-first branch and bound, and an
exhaustive oracle for tiny instances.

The tree search is deterministic: best-first on the LP bound with node-id
tie-breaks, branching on the most fractional binary with lowest-column-
index tie-breaks, and a depth-first dive from the root for the first
incumbent.  Warm starts reuse the parent basis through the dual simplex;
any numerical trouble falls back to a cold two-phase solve.
"""

from __future__ import annotations

import heapq
import time
from dataclasses import dataclass

import numpy as np

from .errors import OracleSizeError, SolverError
from .milp import MilpInstance
from .simplex import INFEASIBLE, OPTIMAL, UNBOUNDED, LpSolution, SimplexEngine

INT_TOL = 1e-6
GAP_TOL = 1e-6

STATUS_OPTIMAL = "optimal"
STATUS_FEASIBLE = "feasible"
STATUS_INFEASIBLE = "infeasible"


@dataclass
class SolveLimits:
    """Stopping criteria for the tree search.

    ``gap`` is the relative optimality gap target.  ``max_nodes`` and
    ``gap`` keep runs deterministic; a wall-clock ``time_s`` limit is
    honored but makes the stopping point timing-dependent.
    """

    time_s: float | None = None
    gap: float = GAP_TOL
    max_nodes: int | None = None


@dataclass
class MilpSolution:
    """Best integer solution found plus proof state."""

    x: np.ndarray | None
    objective: float
    bound: float
    gap: float
    status: str
    nodes: int
    hit_limit: bool = False

    def value(self, col: int) -> float:
        return float(self.x[col])


def _engine_for(instance: MilpInstance) -> SimplexEngine:
    return SimplexEngine(
        instance.a, instance.senses, instance.rhs,
        instance.lower.copy(), instance.upper.copy(), instance.obj,
    )


def solve_lp(instance: MilpInstance, lower: np.ndarray | None = None,
             upper: np.ndarray | None = None) -> LpSolution:
    """Solve the LP relaxation (integrality dropped, bounds kept)."""
    engine = SimplexEngine(
        instance.a, instance.senses, instance.rhs,
        (instance.lower if lower is None else lower).copy(),
        (instance.upper if upper is None else upper).copy(),
        instance.obj,
    )
    return engine.solve_cold()


def _relative_gap(incumbent: float, bound: float) -> float:
    return (incumbent - bound) / max(1.0, abs(incumbent))


def _most_fractional(x: np.ndarray, int_cols: np.ndarray) -> tuple[int, float]:
    """Column index of the most fractional integer variable and its
    fractional distance; (-1, 0) when integral."""
    if int_cols.size == 0:
        return -1, 0.0
    vals = x[int_cols]
    dist = np.abs(vals - np.round(vals))
    worst = int(np.argmax(dist))
    if dist[worst] <= INT_TOL:
        return -1, 0.0
    return int(int_cols[worst]), float(dist[worst])


class _Tree:
    """Shared machinery for solving child LPs from a parent basis."""

    def __init__(self, instance: MilpInstance):
        self.instance = instance
        self.engine = _engine_for(instance)

    def apply_fixes(self, fixes: dict[int, float]) -> None:
        lo = self.instance.lower.copy()
        up = self.instance.upper.copy()
        for col, v in fixes.items():
            lo[col] = up[col] = v
        self.engine.structural_bounds(lo, up)

    def warm_solve(self, fixes: dict[int, float], basis, stat) -> LpSolution:
        self.apply_fixes(fixes)
        try:
            self.engine.load_state(basis, stat)
            return self.engine.dual_reoptimize()
        except SolverError:
            return self.engine.solve_cold()


def _dive(tree: _Tree, root_sol: LpSolution, int_cols: np.ndarray,
          fixes: dict[int, float]) -> tuple[np.ndarray | None, float, int]:
    """Depth-first dive for a first incumbent.  Each round pins every
    binary already sitting at an integer value plus the most fractional
    one rounded to its nearest bound, then reoptimizes; an infeasible
    step retries once with the opposite rounding.  Returns
    (x, objective, lp_solves), with x None when the dive dead-ends."""
    sol = root_sol
    fixes = dict(fixes)
    solves = 0
    for _ in range(int_cols.size):
        col, _ = _most_fractional(sol.x, int_cols)
        if col < 0:
            return sol.x, sol.objective, solves
        basis, stat = tree.engine.state()
        vals = sol.x[int_cols]
        settled_mask = np.abs(vals - np.round(vals)) <= INT_TOL
        settled = {
            int(c): float(v)
            for c, v in zip(int_cols[settled_mask], np.round(vals[settled_mask]))
            if int(c) not in fixes
        }
        value = 1.0 if sol.x[col] >= 0.5 else 0.0
        sol_try = None
        for bulk, v in ((settled, value), (settled, 1.0 - value),
                        ({}, value), ({}, 1.0 - value)):
            attempt = {**fixes, **bulk, col: v}
            cand = tree.warm_solve(attempt, basis, stat)
            solves += 1
            if cand.status == OPTIMAL:
                fixes = attempt
                sol_try = cand
                break
        if sol_try is None:
            return None, np.inf, solves
        sol = sol_try
    col, _ = _most_fractional(sol.x, int_cols)
    if col < 0:
        return sol.x, sol.objective, solves
    return None, np.inf, solves


def solve_milp(instance: MilpInstance, limits: SolveLimits | None = None,
               node_log=None) -> MilpSolution:
    """Best-first branch and bound on the instance's binary columns.

    Returns status ``optimal`` when the relative gap is at most 1e-6,
    otherwise ``feasible`` with the achieved gap; ``infeasible`` when the
    root relaxation (or every branch) is infeasible.
    """
    limits = limits or SolveLimits()
    t_start = time.monotonic()
    tree = _Tree(instance)
    engine = tree.engine
    root = engine.solve_cold()
    nodes = 1
    if root.status == INFEASIBLE:
        return MilpSolution(None, np.inf, np.inf, np.inf, STATUS_INFEASIBLE, nodes)
    if root.status == UNBOUNDED:
        raise SolverError("MILP relaxation is unbounded; check column bounds")

    int_cols = instance.free_binary_cols()
    root_basis, root_stat = engine.state()

    def log(node_id, depth, bound, incumbent, gap):
        if node_log is not None:
            inc = "" if incumbent is None else f"{incumbent:.9g}"
            node_log.write(f"{node_id},{depth},{bound:.9g},{inc},{gap:.3g}\n")

    branch_col, _ = _most_fractional(root.x, int_cols)
    if branch_col < 0:
        log(0, 0, root.objective, root.objective, 0.0)
        return MilpSolution(root.x, root.objective, root.objective, 0.0,
                            STATUS_OPTIMAL, nodes)

    inc_x, inc_obj = _dive(tree, root, int_cols, {})[:2]
    best_bound = root.objective

    # Open nodes: (lp bound, insertion id, depth, fixes, basis, stat, branch col)
    heap: list = []
    counter = 1
    heapq.heappush(
        heap, (root.objective, 0, 0, {}, root_basis, root_stat, branch_col)
    )
    hit_limit = False

    while heap:
        bound, node_id, depth, fixes, basis, stat, bcol = heapq.heappop(heap)
        best_bound = max(best_bound, bound)
        gap_now = np.inf if inc_x is None else _relative_gap(inc_obj, best_bound)
        log(node_id, depth, best_bound, None if inc_x is None else inc_obj, gap_now)
        if inc_x is not None and gap_now <= limits.gap:
            break
        if limits.max_nodes is not None and nodes >= limits.max_nodes:
            hit_limit = True
            break
        if limits.time_s is not None and time.monotonic() - t_start > limits.time_s:
            hit_limit = True
            break

        for value in (0.0, 1.0):
            child_fixes = dict(fixes)
            child_fixes[bcol] = value
            sol = tree.warm_solve(child_fixes, basis, stat)
            nodes += 1
            if sol.status != OPTIMAL:
                continue
            if inc_x is not None and _relative_gap(inc_obj, sol.objective) <= limits.gap:
                continue
            col, _ = _most_fractional(sol.x, int_cols)
            if col < 0:
                if inc_x is None or sol.objective < inc_obj:
                    inc_x, inc_obj = sol.x.copy(), sol.objective
                continue
            cb, cs = engine.state()
            heapq.heappush(
                heap, (sol.objective, counter, depth + 1, child_fixes, cb, cs, col)
            )
            counter += 1

    if inc_x is None:
        if hit_limit:
            return MilpSolution(None, np.inf, best_bound, np.inf,
                                STATUS_FEASIBLE, nodes, hit_limit=True)
        return MilpSolution(None, np.inf, np.inf, np.inf, STATUS_INFEASIBLE, nodes)

    if not heap and not hit_limit:
        best_bound = inc_obj
    gap = max(0.0, _relative_gap(inc_obj, best_bound))
    status = STATUS_OPTIMAL if gap <= GAP_TOL else STATUS_FEASIBLE
    return MilpSolution(inc_x, inc_obj, best_bound, gap, status, nodes,
                        hit_limit=hit_limit)


# --------------------------------------------------------------------------
# Exhaustive oracle
# --------------------------------------------------------------------------


def oracle_solve(instance: MilpInstance, max_binaries: int = 24) -> MilpSolution:
    """Enumerate every assignment of the free binaries, pruning partial
    assignments against rows made of binary columns only, and solve the
    continuous LP for each survivor.  Exact by construction."""
    free = instance.free_binary_cols()
    if free.size > max_binaries:
        raise OracleSizeError(
            f"instance has {free.size} free binaries; oracle accepts <= {max_binaries}"
        )
    a = instance.a
    int_mask = instance.is_integer
    pos_of = {int(c): k for k, c in enumerate(free)}

    # Pure-binary rows: constant contribution of pinned columns plus the
    # free terms, with running min/max addable activity for pruning.
    row_terms: list[tuple[int, float, float, list[tuple[int, float]]]] = []
    per_free: list[list[tuple[int, float]]] = [[] for _ in range(free.size)]
    for i in range(instance.n_rows):
        cols = a.indices[a.indptr[i]:a.indptr[i + 1]]
        vals = a.data[a.indptr[i]:a.indptr[i + 1]]
        if not np.all(int_mask[cols]):
            continue
        base = 0.0
        terms = []
        for c, v in zip(cols, vals):
            c = int(c)
            if c in pos_of:
                terms.append((pos_of[c], float(v)))
            else:
                base += float(v) * instance.lower[c]
        if not terms:
            continue
        row_id = len(row_terms)
        row_terms.append((i, base, float(instance.rhs[i]), terms))
        for k, v in terms:
            per_free[k].append((row_id, v))

    n_pure = len(row_terms)
    act = np.zeros(n_pure)
    min_add = np.zeros(n_pure)
    max_add = np.zeros(n_pure)
    senses = np.empty(n_pure, dtype="U1")
    rhs = np.zeros(n_pure)
    for rid, (i, base, r, terms) in enumerate(row_terms):
        act[rid] = base
        senses[rid] = instance.senses[i]
        rhs[rid] = r
        for _, v in terms:
            min_add[rid] += min(0.0, v)
            max_add[rid] += max(0.0, v)

    tol = 1e-9

    def row_ok(rid: int) -> bool:
        lo = act[rid] + min_add[rid]
        hi = act[rid] + max_add[rid]
        s = senses[rid]
        if s == "L":
            return lo <= rhs[rid] + tol
        if s == "G":
            return hi >= rhs[rid] - tol
        return lo <= rhs[rid] + tol and hi >= rhs[rid] - tol

    engine = _engine_for(instance)
    assignment = np.zeros(free.size)
    best_obj = np.inf
    best_x: np.ndarray | None = None
    lp_solves = 0
    prev_state: tuple[np.ndarray, np.ndarray] | None = None

    lo_base = instance.lower.copy()
    up_base = instance.upper.copy()

    def leaf_solve() -> None:
        nonlocal best_obj, best_x, lp_solves, prev_state
        lo = lo_base.copy()
        up = up_base.copy()
        lo[free] = assignment
        up[free] = assignment
        engine.structural_bounds(lo, up)
        if prev_state is None:
            sol = engine.solve_cold()
        else:
            try:
                engine.load_state(*prev_state)
                sol = engine.dual_reoptimize()
            except SolverError:
                sol = engine.solve_cold()
        lp_solves += 1
        if sol.status == OPTIMAL:
            prev_state = engine.state()
            if sol.objective < best_obj - 1e-12:
                best_obj = sol.objective
                best_x = sol.x.copy()

    def descend(k: int) -> None:
        if k == free.size:
            leaf_solve()
            return
        for value in (0.0, 1.0):
            assignment[k] = value
            touched = per_free[k]
            ok = True
            for rid, v in touched:
                act[rid] += v * value
                min_add[rid] -= min(0.0, v)
                max_add[rid] -= max(0.0, v)
            for rid, _ in touched:
                if not row_ok(rid):
                    ok = False
                    break
            if ok:
                descend(k + 1)
            for rid, v in touched:
                act[rid] -= v * value
                min_add[rid] += min(0.0, v)
                max_add[rid] += max(0.0, v)

    descend(0)

    if best_x is None:
        return MilpSolution(None, np.inf, np.inf, np.inf, STATUS_INFEASIBLE, lp_solves)
    return MilpSolution(best_x, best_obj, best_obj, 0.0, STATUS_OPTIMAL, lp_solves)
