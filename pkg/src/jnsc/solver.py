"""Best-first branch and bound for the rainbow-flow 0-1 programs.

Bounds come from the LP relaxation, solved by HiGHS simplex and warm-started
from the parent node's basis. Incumbents come from a greedy topological
construction, re-run on every LP solution with the LP values as color
preferences.
"""

from __future__ import annotations

import heapq
import math
import time
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
import highspy
import scipy.sparse as sp

from .crnf import IlpModel, close_assignment, greedy_assignment

INT_TOL = 1e-6


class Status(str, Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    TIMED_OUT = "timed-out-with-incumbent"
    NO_SOLUTION = "timed-out-no-solution"


@dataclass
class IlpSolution:
    assignment: np.ndarray | None
    objective_value: float
    status: Status
    bound: float
    nodes: int = 0
    lp_solves: int = 0
    elapsed: float = 0.0
    model: IlpModel | None = field(default=None, repr=False)

    @property
    def gap(self) -> float:
        if self.assignment is None:
            return math.inf
        return max(0.0, self.bound - self.objective_value)

    @property
    def feasible(self) -> bool:
        return self.assignment is not None


class _Relaxation:
    """The LP relaxation held in one HiGHS instance.

    Nodes differ only in column bounds, so each solve starts from the basis of
    the node's parent.
    """

    def __init__(self, model: IlpModel):
        self.n = model.n_vars
        A = sp.vstack([model.A_ub, model.A_eq]).tocsc() if model.A_eq.shape[0] else model.A_ub.tocsc()
        lp = highspy.HighsLp()
        lp.num_col_ = self.n
        lp.num_row_ = A.shape[0]
        lp.col_cost_ = -np.asarray(model.c, dtype=float)
        lp.col_lower_ = np.asarray(model.lb, dtype=float)
        lp.col_upper_ = np.asarray(model.ub, dtype=float)
        lp.row_lower_ = np.concatenate([np.full(model.A_ub.shape[0], -highspy.kHighsInf), model.b_eq])
        lp.row_upper_ = np.concatenate([model.b_ub, model.b_eq])
        lp.a_matrix_.format_ = highspy.MatrixFormat.kColwise
        lp.a_matrix_.start_ = A.indptr
        lp.a_matrix_.index_ = A.indices
        lp.a_matrix_.value_ = A.data
        self.h = highspy.Highs()
        self.h.setOptionValue("output_flag", False)
        self.h.setOptionValue("presolve", "off")
        self.h.setOptionValue("solver", "simplex")
        self.h.passModel(lp)
        self.idx = np.arange(self.n, dtype=np.int32)
        self.solves = 0

    def solve(self, lb, ub, basis=None):
        self.h.changeColsBounds(self.n, self.idx, np.asarray(lb, float), np.asarray(ub, float))
        if basis is not None:
            self.h.setBasis(basis)
        self.h.run()
        self.solves += 1
        status = self.h.getModelStatus()
        if status == highspy.HighsModelStatus.kInfeasible:
            return None, -math.inf, None
        if status != highspy.HighsModelStatus.kOptimal:
            raise RuntimeError(f"LP relaxation failed: {self.h.modelStatusToString(status)}")
        x = np.array(self.h.getSolution().col_value)
        return x, -self.h.getInfo().objective_function_value, self.h.getBasis()


def combinatorial_bound(model: IlpModel) -> float:
    """Per-sink ``min(K, incoming slots)``; valid for the cardinality objective only."""
    net, desc = model.net, model.desc
    total = 0
    for t in net.sinks:
        if t in net.sources:
            total += desc.count
            continue
        slots = sum(math.floor(net.capacity(u, t) / desc.rate + 1e-9) for u in net.predecessors(t))
        total += min(desc.count, slots)
    return float(total)


def _color_index(model: IlpModel) -> np.ndarray | None:
    """``(K, m)`` matrix: row ``k`` lists color ``k``'s variables in a shared order."""
    net, desc = model.net, model.desc
    rows = []
    for k in desc.ids:
        rows.append([model.node_vars[(v, k)] for v in net.node_ids]
                    + [model.edge_vars[(e, k)] for e in net.edge_list])
    return np.array(rows, dtype=np.int64) if rows and rows[0] else None


def _orbit(color_idx, lb, ub, j):
    """Colors interchangeable with the color of variable ``j`` under the current fixings.

    Returns the positions of ``j``'s counterparts in those colors (``j`` first).
    """
    hit = np.nonzero(color_idx == j)
    if hit[0].size == 0:
        return [j]
    k, col = int(hit[0][0]), int(hit[1][0])
    ref_lb, ref_ub = lb[color_idx[k]], ub[color_idx[k]]
    out = [j]
    for k2 in range(color_idx.shape[0]):
        if k2 == k:
            continue
        if np.array_equal(lb[color_idx[k2]], ref_lb) and np.array_equal(ub[color_idx[k2]], ref_ub):
            out.append(int(color_idx[k2, col]))
    return out


def _pick_branch_var(x, fixed_mask):
    frac = np.abs(x - np.round(x))
    cand = np.nonzero((frac > INT_TOL) & ~fixed_mask)[0]
    if cand.size == 0:
        return None
    # most fractional; argmax returns the smallest index on ties
    return int(cand[np.argmax(frac[cand])])


def _prunable(bound, incumbent, integral):
    if integral:
        return math.floor(bound + 1e-6) <= incumbent + 1e-9
    return bound <= incumbent + 1e-9


def solve(model: IlpModel, time_limit: float | None = None, heuristic: bool = True,
          node_limit: int | None = None, orbital: bool = True,
          initial: np.ndarray | None = None) -> IlpSolution:
    """Exact optimum by best-first branch and bound.

    Ties in the open list are broken by creation order, so runs are
    deterministic. With ``time_limit`` (seconds) the best incumbent found so
    far is returned along with the global upper bound. ``initial`` seeds the
    incumbent with a known feasible assignment.
    """
    t0 = time.perf_counter()
    integral = model.integral_objective
    # colors are interchangeable unless symmetry-breaking rows already tie them down
    lo, hi = model.families.get("symmetry", (0, 0))
    symmetric = orbital and hi == lo
    color_idx = _color_index(model) if symmetric else None
    best_x, best_val = None, -math.inf

    def offer(x):
        nonlocal best_x, best_val
        if x is None or not model.is_feasible(x):
            return
        val = model.evaluate(x)
        if val > best_val + 1e-9:
            best_x, best_val = x, val

    if initial is not None:
        offer(np.asarray(initial, dtype=float))
    if heuristic:
        offer(greedy_assignment(model))

    relax = _Relaxation(model)
    x0, root, basis0 = relax.solve(model.lb, model.ub)
    if x0 is None:
        return IlpSolution(None, -math.inf, Status.INFEASIBLE, -math.inf, 0, relax.solves,
                           time.perf_counter() - t0, model)
    if integral:
        root = math.floor(root + 1e-6)
    heap = [(-root, 0, model.lb.copy(), model.ub.copy(), x0, basis0)]
    counter = 1
    nodes = 0
    timed_out = False
    while heap:
        neg_bound, _, lb, ub, x, basis = heapq.heappop(heap)
        bound = -neg_bound
        if _prunable(bound, best_val, integral):
            continue
        if (time_limit is not None and time.perf_counter() - t0 > time_limit) or \
                (node_limit is not None and nodes >= node_limit):
            heapq.heappush(heap, (neg_bound, -1, lb, ub, x, basis))
            timed_out = True
            break
        nodes += 1
        if heuristic:
            offer(greedy_assignment(model, scores=x))
        j = _pick_branch_var(x, lb == ub)
        if j is None:
            offer(close_assignment(model, np.round(x)) if model.edge_vars else np.round(x))
            offer(np.round(x))
            continue
        # orbital branching: either j is set, or j and every symmetric copy are cleared
        orbit = _orbit(color_idx, lb, ub, j) if color_idx is not None else [j]
        for value in (1.0, 0.0):
            clb, cub = lb.copy(), ub.copy()
            if value:
                clb[j] = cub[j] = 1.0
            else:
                clb[orbit] = cub[orbit] = 0.0
            cx, cb, cbasis = relax.solve(clb, cub, basis)
            if cx is None:
                continue
            if integral:
                cb = math.floor(cb + 1e-6)
            if _prunable(cb, best_val, integral):
                continue
            heapq.heappush(heap, (-cb, counter, clb, cub, cx, cbasis))
            counter += 1
    elapsed = time.perf_counter() - t0
    if timed_out:
        bound = max(-h[0] for h in heap)
        status = Status.TIMED_OUT if best_x is not None else Status.NO_SOLUTION
        return IlpSolution(best_x, best_val, status, max(bound, best_val), nodes, relax.solves,
                           elapsed, model)
    if best_x is None:
        return IlpSolution(None, -math.inf, Status.INFEASIBLE, -math.inf, nodes, relax.solves,
                           elapsed, model)
    val = float(round(best_val)) if integral else best_val
    return IlpSolution(best_x, val, Status.OPTIMAL, val, nodes, relax.solves, elapsed, model)
