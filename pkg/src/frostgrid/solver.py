"""Exact branch-and-bound over binary variables with LP-relaxation bounding.

Node selection is best-bound first, branching picks the most fractional
binary (ties to the lowest variable id), so single-worker runs are fully
deterministic. An optional thread pool shares the node queue; incumbent
and bound updates stay atomic under one lock, which preserves soundness
(bound <= optimum <= incumbent) while node counts may vary between runs.

File-based interop for external solvers lives in ``frostgrid.mps`` and is
re-exported here.
"""

from __future__ import annotations

import heapq
import math
import threading
import time
from dataclasses import dataclass

import numpy as np

from .errors import NumericError
from .milp import BINARY, MilpModel, MilpSolution, validate_solution
from .mps import export_mps, export_solution, import_mps, import_solution  # noqa: F401
from . import simplex

OPTIMAL = "optimal"
FEASIBLE = "feasible"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
LIMIT_REACHED = "limit-reached"
NUMERIC = "numeric-error"

_PRUNE_EPS = 1e-9       # slack when fathoming against the incumbent
_INT_TOL = 1e-6         # integrality tolerance on binaries
_IMPROVE_EPS = 1e-12    # minimal incumbent improvement


@dataclass
class SolveConfig:
    time_limit_s: float = 3600.0
    rel_gap_tol: float = 1e-4
    abs_tol: float = 1e-6
    node_limit: int | None = None
    worker_count: int = 1

    def __post_init__(self):
        if not (self.time_limit_s > 0):
            raise ValueError("time_limit_s must be > 0")
        if self.rel_gap_tol < 0 or self.abs_tol < 0:
            raise ValueError("tolerances must be >= 0")
        if self.node_limit is not None and self.node_limit < 1:
            raise ValueError("node_limit must be >= 1 when set")
        if self.worker_count < 1:
            raise ValueError("worker_count must be >= 1")


@dataclass
class SolveResult:
    solution: MilpSolution | None
    incumbent_obj: float | None
    best_bound: float
    rel_gap: float
    nodes_explored: int
    wall_time_s: float
    status: str


def to_dense(model: MilpModel):
    """Dense (c, A, senses, b, lower, upper, binary_ids) arrays for the LP core."""
    n = model.n_variables
    m = model.n_constraints
    c = np.zeros(n)
    for vid, coeff in model.objective:
        c[vid] += coeff
    A = np.zeros((m, n))
    b = np.empty(m)
    senses = []
    for r, con in enumerate(model.constraints):
        for vid, coeff in con.terms:
            A[r, vid] += coeff
        b[r] = con.rhs
        senses.append(con.sense)
    lower = np.array([v.lower for v in model.variables])
    upper = np.array([v.upper for v in model.variables])
    binaries = np.array(model.binary_ids(), dtype=int)
    return c, A, senses, b, lower, upper, binaries


class _Node:
    __slots__ = ("bound", "seq", "blo", "bhi")

    def __init__(self, bound, seq, blo, bhi):
        self.bound = bound
        self.seq = seq
        self.blo = blo
        self.bhi = bhi

    def __lt__(self, other):
        return (self.bound, self.seq) < (other.bound, other.seq)


class _Search:
    """Shared branch-and-bound state; all mutation happens under ``cond``."""

    def __init__(self, model: MilpModel, cfg: SolveConfig, completer=None,
                 branch_first=None):
        self.cfg = cfg
        self.c, self.A, self.senses, self.b, self.lower, self.upper, self.binaries = to_dense(model)
        self.prepared = simplex.PreparedLp(self.c, self.A, self.senses, self.b)
        self.completer = completer
        # boolean mask over self.binaries: branch these before the rest
        if branch_first is None:
            self.tier1 = np.ones(len(self.binaries), dtype=bool)
        else:
            first = set(int(v) for v in branch_first)
            self.tier1 = np.array([vid in first for vid in self.binaries], dtype=bool)
        self.heap = []
        self.seq = 0
        self.incumbent = None
        self.incumbent_obj = math.inf
        self.nodes_explored = 0
        self.stop_reason = None       # None | limit | gap | unbounded | numeric
        self.error_msg = None
        self.root_status = None
        self.in_flight = {}
        self.cond = threading.Condition()
        self.t0 = time.perf_counter()

    # -- helpers (call under lock) ------------------------------------------

    def elapsed(self) -> float:
        return time.perf_counter() - self.t0

    def prune_threshold(self) -> float:
        if not math.isfinite(self.incumbent_obj):
            return math.inf
        slack = max(_PRUNE_EPS, self.cfg.rel_gap_tol * abs(self.incumbent_obj))
        return self.incumbent_obj - slack

    def open_bound(self) -> float:
        bounds = [n.bound for n in self.heap]
        bounds.extend(self.in_flight.values())
        return min(bounds) if bounds else math.inf

    def gap_closed(self) -> bool:
        if not math.isfinite(self.incumbent_obj):
            return False
        return self.open_bound() >= self.prune_threshold()

    def push(self, bound, blo, bhi):
        heapq.heappush(self.heap, _Node(bound, self.seq, blo, bhi))
        self.seq += 1

    # -- node processing -----------------------------------------------------

    def try_incumbent(self, values: np.ndarray, obj: float):
        if obj < self.incumbent_obj - _IMPROVE_EPS:
            self.incumbent_obj = obj
            self.incumbent = values.copy()

    def process(self, node: _Node):
        """Solve the node LP and either fathom, accept, or branch."""
        lo = self.lower.copy()
        hi = self.upper.copy()
        lo[self.binaries] = node.blo
        hi[self.binaries] = node.bhi
        res = self.prepared.solve(lo, hi)

        completed = None
        if (res.status == simplex.OPTIMAL and self.completer is not None
                and res.objective < self.prune_threshold()):
            completed = self.completer(res.x)

        with self.cond:
            self.nodes_explored += 1
            if node.seq == 0:
                self.root_status = res.status
            if res.status == simplex.INFEASIBLE:
                return
            if res.status == simplex.UNBOUNDED:
                self.stop_reason = "unbounded"
                return
            obj = res.objective
            if obj >= self.prune_threshold():
                return
            if completed is not None:
                cobj = float(self.c @ completed)
                self.try_incumbent(completed, cobj)
                if cobj <= obj + _PRUNE_EPS:
                    return   # subtree cannot beat the bound it just achieved
                if obj >= self.prune_threshold():
                    return
            xb = res.x[self.binaries]
            frac = np.minimum(np.abs(xb), np.abs(1.0 - xb))
            if frac.size == 0 or frac.max() <= _INT_TOL:
                self.try_incumbent(res.x, obj)
                return
            tier1_frac = np.where(self.tier1, frac, 0.0)
            if tier1_frac.max() > _INT_TOL:
                j = int(np.argmax(tier1_frac))
            else:
                j = int(np.argmax(frac))
            left_hi = node.bhi.copy()
            left_hi[j] = 0.0
            right_lo = node.blo.copy()
            right_lo[j] = 1.0
            self.push(obj, node.blo, left_hi)
            self.push(obj, right_lo, node.bhi)


def solve(model: MilpModel, cfg: SolveConfig | None = None,
          warm_start: np.ndarray | None = None, completer=None,
          branch_first=None) -> SolveResult:
    """Solve a model to proven optimality (or to the configured limits).

    ``warm_start`` is an optional full assignment used as the initial
    incumbent; it is validated first and silently ignored if infeasible.
    ``completer`` may turn a node-LP solution into a full feasible
    assignment (round-and-repair); when its objective matches the node
    bound the node is fathomed on the spot. ``branch_first`` lists binary
    variable ids to branch on before any others (most-fractional within
    each tier).
    """
    cfg = cfg or SolveConfig()
    search = _Search(model, cfg, completer=completer, branch_first=branch_first)

    if warm_start is not None:
        candidate = np.asarray(warm_start, dtype=float)
        sol = MilpSolution(candidate, model.objective_value(candidate), FEASIBLE)
        if validate_solution(model, sol, cfg.abs_tol).is_feasible:
            search.try_incumbent(candidate, sol.objective_value)

    nb = len(search.binaries)
    search.push(-math.inf, np.zeros(nb), np.ones(nb))

    try:
        if cfg.worker_count == 1:
            _run_serial(search)
        else:
            _run_threaded(search, cfg.worker_count)
    except NumericError as exc:
        search.stop_reason = "numeric"
        search.error_msg = str(exc)

    return _finish(search)


def _run_serial(search: _Search):
    cfg = search.cfg
    while search.heap:
        if search.elapsed() > cfg.time_limit_s:
            search.stop_reason = "limit"
            return
        if cfg.node_limit is not None and search.nodes_explored >= cfg.node_limit:
            search.stop_reason = "limit"
            return
        if search.gap_closed():
            return
        node = heapq.heappop(search.heap)
        if node.bound >= search.prune_threshold():
            search.heap.clear()   # best-first: everything left is at least as bad
            return
        search.process(node)
        if search.stop_reason:
            return


def _run_threaded(search: _Search, workers: int):
    def loop():
        while True:
            with search.cond:
                while True:
                    if search.stop_reason:
                        search.cond.notify_all()
                        return
                    if search.elapsed() > search.cfg.time_limit_s:
                        search.stop_reason = "limit"
                        search.cond.notify_all()
                        return
                    if search.cfg.node_limit is not None and \
                            search.nodes_explored >= search.cfg.node_limit:
                        search.stop_reason = "limit"
                        search.cond.notify_all()
                        return
                    if search.heap:
                        break
                    if not search.in_flight:
                        search.cond.notify_all()
                        return
                    search.cond.wait(0.05)
                node = heapq.heappop(search.heap)
                if node.bound >= search.prune_threshold():
                    search.heap.clear()
                    search.cond.notify_all()
                    return
                tid = threading.get_ident()
                search.in_flight[tid] = node.bound
            try:
                search.process(node)
            finally:
                with search.cond:
                    search.in_flight.pop(threading.get_ident(), None)
                    search.cond.notify_all()

    errors = []

    def guarded():
        try:
            loop()
        except NumericError as exc:
            with search.cond:
                search.stop_reason = "numeric"
                search.error_msg = str(exc)
                search.cond.notify_all()
        except Exception as exc:  # pragma: no cover - defensive
            errors.append(exc)
            with search.cond:
                search.stop_reason = "numeric"
                search.error_msg = repr(exc)
                search.cond.notify_all()

    threads = [threading.Thread(target=guarded, daemon=True) for _ in range(workers)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()


def _finish(search: _Search) -> SolveResult:
    wall = search.elapsed()
    inc_exists = math.isfinite(search.incumbent_obj)

    if search.stop_reason == "unbounded":
        return SolveResult(None, None, -math.inf, math.inf,
                           search.nodes_explored, wall, UNBOUNDED)
    if search.stop_reason == "numeric":
        sol = _make_solution(search, FEASIBLE) if inc_exists else None
        return SolveResult(sol, search.incumbent_obj if inc_exists else None,
                           -math.inf, math.inf, search.nodes_explored, wall, NUMERIC)

    if search.stop_reason == "limit":
        best_bound = search.open_bound()
        if inc_exists:
            best_bound = min(best_bound, search.incumbent_obj)
        gap = _rel_gap(search.incumbent_obj, best_bound) if inc_exists else math.inf
        sol = _make_solution(search, FEASIBLE) if inc_exists else None
        return SolveResult(sol, search.incumbent_obj if inc_exists else None,
                           best_bound, gap, search.nodes_explored, wall, LIMIT_REACHED)

    # search ran to completion (queue exhausted or gap closed)
    if not inc_exists:
        if search.root_status == simplex.UNBOUNDED:
            return SolveResult(None, None, -math.inf, math.inf,
                               search.nodes_explored, wall, UNBOUNDED)
        return SolveResult(None, None, math.inf, math.inf,
                           search.nodes_explored, wall, INFEASIBLE)
    best_bound = min(search.open_bound(), search.incumbent_obj)
    gap = _rel_gap(search.incumbent_obj, best_bound)
    sol = _make_solution(search, OPTIMAL)
    return SolveResult(sol, search.incumbent_obj, best_bound, gap,
                       search.nodes_explored, wall, OPTIMAL)


def _rel_gap(incumbent: float, bound: float) -> float:
    if not math.isfinite(bound):
        return math.inf if bound < 0 else 0.0
    return max(0.0, (incumbent - bound) / max(abs(incumbent), 1e-9))


def _make_solution(search: _Search, status: str) -> MilpSolution:
    return MilpSolution(search.incumbent.copy(), float(search.incumbent_obj), status)
