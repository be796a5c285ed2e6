"""Plan evaluation, Monte Carlo robustness checks, Pareto sweeps, exhaustive oracle.

Violations have a closed form for a fixed placement: the lower-side slack
at a check point is max(0, f_lo - pessimistic coverage) and the upper-side
slack max(0, optimistic coverage - f_hi); no smaller slack pair can satisfy
the coverage rows, so these values are the exact per-placement optimum of
the penalty term. The exhaustive oracle leans on that to grade every
k-subset of candidate sites independently of the MILP machinery.
"""

from __future__ import annotations

import concurrent.futures
import csv
import dataclasses
import itertools
import math
import time
from dataclasses import dataclass

import numpy as np

from .errors import BudgetExceededError
from .graph import UnionFind, complete_graph
from .heuristic import heuristic_plan
from .instance import (
    InfluenceMatrix,
    OrchardInstance,
    build_influence_matrix,
    _pairwise_distances,
)
from .milp import MilpModel, VariableCatalog, build_layout_model, extract_plan
from .plan import DesignPlan
from . import solver


@dataclass(frozen=True)
class ViolationStats:
    """Summary of per-draw average violations under sampled uncertainty."""

    mean: float
    max: float
    std: float
    draws: int
    seed: int


@dataclass(frozen=True)
class ParetoRecord:
    alpha: float
    obj_part1_m: float
    obj_part2: float
    rel_gap: float
    wall_time_s: float
    status: str


PARETO_CSV_HEADER = ["alpha", "obj_part1_m", "obj_part2", "rel_gap", "wall_time_s", "status"]


def _heater_bounds(plan: DesignPlan, inst: OrchardInstance):
    """Per-heater uncertainty bounds: the instance's per-site values for grid
    plans; for continuous plans the instance-wide scalars (conservative
    min/max when sites are heterogeneous)."""
    if plan.site_ids is not None:
        ids = list(plan.site_ids)
        return inst.ku_lo[ids], inst.ku_hi[ids]
    k = plan.k
    return (
        np.full(k, float(inst.ku_lo.min(initial=1.0))),
        np.full(k, float(inst.ku_hi.max(initial=1.0))),
    )


def _influence_rows(plan: DesignPlan, inst: OrchardInstance) -> np.ndarray:
    """(n_heaters, n_cp) influence of each heater at each check point."""
    if plan.k == 0 or inst.n_check_points == 0:
        return np.zeros((plan.k, inst.n_check_points))
    d = _pairwise_distances(plan.heaters, inst.check_points)
    return np.exp(-inst.k_tun * d)


def worst_case_violations(plan: DesignPlan, inst: OrchardInstance):
    """Tight per-check-point slacks over the whole uncertainty box.

    Returns (mu_lo, mu_hi, obj_part2) where obj_part2 averages the summed
    slacks over check points.
    """
    F = _influence_rows(plan, inst)
    klo, khi = _heater_bounds(plan, inst)
    cov_lo = klo @ F if plan.k else np.zeros(inst.n_check_points)
    cov_hi = khi @ F if plan.k else np.zeros(inst.n_check_points)
    mu_lo = np.maximum(0.0, inst.f_lo - cov_lo)
    mu_hi = np.maximum(0.0, cov_hi - inst.f_hi)
    obj2 = float((mu_lo + mu_hi).mean()) if inst.n_check_points else 0.0
    return mu_lo, mu_hi, obj2


def sampled_violations(plan: DesignPlan, inst: OrchardInstance,
                       seed: int = 0, draws: int = 1000) -> ViolationStats:
    """Monte Carlo violation statistics under sampled heating multipliers.

    Each draw samples one multiplier per heater, uniform on its interval,
    from a Philox (counter-based) generator keyed by ``seed``; the single
    block of shape (draws, n_heaters) makes results reproducible for a
    given seed regardless of platform.
    """
    if draws < 1:
        raise ValueError("draws must be >= 1")
    F = _influence_rows(plan, inst)
    klo, khi = _heater_bounds(plan, inst)
    gen = np.random.Generator(np.random.Philox(seed))
    ku = gen.uniform(klo, khi, size=(draws, plan.k))
    cov = ku @ F if plan.k else np.zeros((draws, inst.n_check_points))
    viol = np.maximum(0.0, inst.f_lo - cov) + np.maximum(0.0, cov - inst.f_hi)
    per_draw = viol.mean(axis=1) if inst.n_check_points else np.zeros(draws)
    return ViolationStats(
        mean=float(per_draw.mean()),
        max=float(per_draw.max()),
        std=float(per_draw.std()),
        draws=draws,
        seed=seed,
    )


def scalarized_objective(inst: OrchardInstance, plan: DesignPlan,
                         alpha: float | None = None) -> float:
    """Normalized single objective of a plan: length/beta1 + alpha*sum(mu)/beta2."""
    a = inst.alpha if alpha is None else float(alpha)
    mu_lo, mu_hi, _ = worst_case_violations(plan, inst)
    return plan.obj_part1_m / inst.beta1_nor + a * float(mu_lo.sum() + mu_hi.sum()) / inst.beta2_nor


def _mst_length(dist: np.ndarray, subset) -> tuple:
    """Kruskal over the complete subgraph on ``subset``; returns (length, edges)."""
    edges = sorted(
        (float(dist[a, b]), a, b)
        for idx, a in enumerate(subset)
        for b in subset[idx + 1:]
    )
    uf = UnionFind(subset)
    total = 0.0
    chosen = []
    for w, a, b in edges:
        if uf.union(a, b):
            total += w
            chosen.append((a, b))
            if len(chosen) == len(subset) - 1:
                break
    return total, chosen


def exhaustive_oracle(inst: OrchardInstance, alpha: float | None = None,
                      budget: int = 1_000_000) -> DesignPlan:
    """Grade every k-subset of candidate sites and return the best plan.

    Completely independent of the MILP path: selection by enumeration,
    pipe length by Kruskal, violations by the closed form. Ties go to the
    lexicographically first subset. Refuses when C(n, k) exceeds ``budget``.
    """
    a = inst.alpha if alpha is None else float(alpha)
    if a < 0:
        raise ValueError("alpha must be >= 0")
    n, k = inst.n_sites, inst.k
    count = math.comb(n, k)
    if count > budget:
        raise BudgetExceededError(
            f"C({n},{k}) = {count} subsets exceeds the budget of {budget}"
        )

    dist = _pairwise_distances(inst.candidate_sites, inst.candidate_sites)
    H = build_influence_matrix(inst).h if inst.n_check_points else None

    best = None
    for subset in itertools.combinations(range(n), k):
        length, edges = _mst_length(dist, subset)
        if len(edges) != k - 1:
            continue  # cannot happen on a complete graph; defensive
        obj = length / inst.beta1_nor
        if H is not None:
            sel = list(subset)
            cov_lo = inst.ku_lo[sel] @ H[sel]
            cov_hi = inst.ku_hi[sel] @ H[sel]
            mu_sum = float(
                np.maximum(0.0, inst.f_lo - cov_lo).sum()
                + np.maximum(0.0, cov_hi - inst.f_hi).sum()
            )
        else:
            mu_sum = 0.0
        obj += a * mu_sum / inst.beta2_nor
        if best is None or obj < best[0] - 0.0:
            best = (obj, subset, length, edges, mu_sum)

    obj, subset, length, edges, mu_sum = best
    local = {site: i for i, site in enumerate(subset)}
    n_cp = inst.n_check_points
    return DesignPlan(
        heaters=inst.candidate_sites[list(subset)],
        site_ids=subset,
        pipe_edges=tuple(sorted((local[i], local[j]) for i, j in edges)),
        obj_part1_m=_recomputed_length(inst, subset, edges),
        obj_part2=(mu_sum / n_cp) if n_cp else None,
        alpha=a,
        provenance="oracle",
    )


def _recomputed_length(inst, subset, edges) -> float:
    pts = inst.candidate_sites
    local = {site: i for i, site in enumerate(subset)}
    ordered = sorted((local[i], local[j]) for i, j in edges)
    sel = pts[list(subset)]
    return sum(float(np.hypot(*(sel[a] - sel[b]))) for a, b in ordered)


def snap_to_sites(plan: DesignPlan, inst: OrchardInstance) -> DesignPlan:
    """Snap continuous heaters to distinct nearest candidate sites.

    Heaters claim sites greedily in plan order (ties to the lowest site id),
    then the pipe tree is rebuilt as the MST over the snapped sites. Used to
    compare continuous heuristic layouts with grid-restricted optima.
    """
    d = _pairwise_distances(plan.heaters, inst.candidate_sites)
    taken = []
    for row in d:
        order = np.lexsort((np.arange(inst.n_sites), row))
        for site in order:
            if site not in taken:
                taken.append(int(site))
                break
    subset = tuple(sorted(taken))
    dist = _pairwise_distances(inst.candidate_sites, inst.candidate_sites)
    _, edges = _mst_length(dist, subset)
    local = {site: i for i, site in enumerate(subset)}
    return DesignPlan(
        heaters=inst.candidate_sites[list(subset)],
        site_ids=subset,
        pipe_edges=tuple(sorted((local[i], local[j]) for i, j in edges)),
        obj_part1_m=_recomputed_length(inst, subset, edges),
        obj_part2=None,
        alpha=plan.alpha,
        provenance="heuristic",
    )


def warm_start_values(inst: OrchardInstance, model: MilpModel, cat: VariableCatalog,
                      plan: DesignPlan) -> np.ndarray | None:
    """Translate a grid-based plan into a full variable assignment.

    The pipe tree is oriented toward its lowest-id site, which sends the
    single arc to the dummy terminal; potentials are 1 + depth. Returns
    None when the plan cannot be expressed on this model.
    """
    if plan.site_ids is None or len(plan.site_ids) != cat.k:
        return None
    values = np.zeros(model.n_variables)
    sites = list(plan.site_ids)
    for i in sites:
        values[cat.ell[i]] = 1.0

    edges = []
    for a, b in plan.pipe_edges:
        i, j = sites[a], sites[b]
        e = (min(i, j), max(i, j))
        if e not in cat.z:
            return None
        edges.append(e)
        values[cat.z[e]] = 1.0

    root = min(sites)
    adj = {i: [] for i in sites}
    for i, j in edges:
        adj[i].append(j)
        adj[j].append(i)
    depth = {root: 0}
    queue = [root]
    while queue:
        node = queue.pop(0)
        for nb in adj[node]:
            if nb not in depth:
                depth[nb] = depth[node] + 1
                values[cat.w[(nb, node)]] = 1.0   # arcs point toward the root
                queue.append(nb)
    if len(depth) != len(sites):
        return None
    values[cat.z[(root, cat.tau)]] = 1.0
    values[cat.w[(root, cat.tau)]] = 1.0
    for i in sites:
        values[cat.u[i]] = 1.0 + depth[i]

    if cat.mu_lo:
        mu_lo, mu_hi, _ = worst_case_violations(plan, inst)
        for s, vid in cat.mu_lo.items():
            values[vid] = mu_lo[s]
        for s, vid in cat.mu_hi.items():
            values[vid] = mu_hi[s]
    return values


def _tree_completer(inst: OrchardInstance, model: MilpModel, cat: VariableCatalog,
                    H: InfluenceMatrix | None):
    """Round-and-repair for node relaxations: when the site and edge binaries
    are integral and already form a valid k-node tree, the orientation and
    violation variables have a feasible completion whose objective equals
    the node bound, so the node can be fathomed with a new incumbent."""
    ell_ids = np.array([vid for _, vid in sorted(cat.ell.items())])
    sites = np.array(sorted(cat.ell))
    edge_list = sorted(cat.real_edges())
    z_ids = np.array([cat.z[e] for e in edge_list])
    h = H.h if H is not None else None

    def completer(x: np.ndarray):
        ev = x[ell_ids]
        zv = x[z_ids]
        if np.minimum(np.abs(ev), np.abs(1 - ev)).max(initial=0.0) > 1e-6:
            return None
        if np.minimum(np.abs(zv), np.abs(1 - zv)).max(initial=0.0) > 1e-6:
            return None
        selected = [int(s) for s, v in zip(sites, ev) if v > 0.5]
        edges = [e for e, v in zip(edge_list, zv) if v > 0.5]
        if len(selected) != cat.k or len(edges) != cat.k - 1:
            return None
        adj = {i: [] for i in selected}
        for i, j in edges:
            if i not in adj or j not in adj:
                return None
            adj[i].append(j)
            adj[j].append(i)
        root = selected[0]
        depth = {root: 0}
        queue = [root]
        values = np.zeros(model.n_variables)
        while queue:
            node = queue.pop(0)
            for nb in adj[node]:
                if nb not in depth:
                    depth[nb] = depth[node] + 1
                    values[cat.w[(nb, node)]] = 1.0
                    queue.append(nb)
        if len(depth) != cat.k:
            return None   # cycle or disconnected edge set
        for i in selected:
            values[cat.ell[i]] = 1.0
            values[cat.u[i]] = 1.0 + depth[i]
        for e in edges:
            values[cat.z[e]] = 1.0
        values[cat.z[(root, cat.tau)]] = 1.0
        values[cat.w[(root, cat.tau)]] = 1.0
        if cat.mu_lo:
            sel = list(selected)
            cov_lo = inst.ku_lo[sel] @ h[sel]
            cov_hi = inst.ku_hi[sel] @ h[sel]
            mu_lo = np.maximum(0.0, inst.f_lo - cov_lo)
            mu_hi = np.maximum(0.0, cov_hi - inst.f_hi)
            for s, vid in cat.mu_lo.items():
                values[vid] = mu_lo[s]
            for s, vid in cat.mu_hi.items():
                values[vid] = mu_hi[s]
        return values

    return completer


def solve_instance(inst: OrchardInstance, cfg: solver.SolveConfig | None = None,
                   alpha: float | None = None, use_warm_start: bool = True):
    """Build the layout model for ``inst`` and solve it.

    Returns (plan_or_None, SolveResult). The heuristic layout, snapped to
    the candidate grid, seeds the incumbent so even a drastically
    time-limited run reports a usable design; node relaxations whose site
    and edge binaries already describe a tree are completed and fathomed
    without further branching.
    """
    a = inst.alpha if alpha is None else float(alpha)
    g = complete_graph(inst.candidate_sites)
    H = build_influence_matrix(inst) if inst.n_check_points else None
    model, cat = build_layout_model(inst, g, H, a)

    ws = None
    if use_warm_start:
        try:
            snapped = snap_to_sites(heuristic_plan(inst), inst)
            ws = warm_start_values(inst, model, cat, snapped)
        except Exception:
            ws = None

    branch_first = [vid for _, vid in sorted(cat.ell.items())]
    branch_first += [cat.z[e] for e in sorted(cat.real_edges())]
    result = solver.solve(
        model, cfg, warm_start=ws,
        completer=_tree_completer(inst, model, cat, H),
        branch_first=branch_first,
    )
    plan = None
    if result.solution is not None:
        plan = extract_plan(inst, g, cat, result.solution)
        plan = dataclasses.replace(plan, alpha=a)
    return plan, result


def pareto_sweep(inst: OrchardInstance, alphas, cfg: solver.SolveConfig | None = None,
                 workers: int = 1):
    """One exact solve per scalarization weight; failures are recorded in-row.

    Solves are independent, so they can fan out over a thread pool; records
    come back sorted by alpha either way.
    """
    alphas = [float(a) for a in alphas]
    if not alphas:
        raise ValueError("alphas must be non-empty")
    if any(a < 0 for a in alphas):
        raise ValueError("alphas must be >= 0")

    def run(a: float) -> ParetoRecord:
        t0 = time.perf_counter()
        try:
            plan, result = solve_instance(inst, cfg, alpha=a)
        except Exception:
            return ParetoRecord(a, math.nan, math.nan, math.nan,
                                time.perf_counter() - t0, "error")
        if plan is None:
            return ParetoRecord(a, math.nan, math.nan, result.rel_gap,
                                result.wall_time_s, result.status)
        obj2 = plan.obj_part2
        if obj2 is None:
            _, _, obj2 = worst_case_violations(plan, inst)
        return ParetoRecord(a, plan.obj_part1_m, obj2, result.rel_gap,
                            result.wall_time_s, result.status)

    if workers > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(run, alphas))
    else:
        records = [run(a) for a in alphas]
    return sorted(records, key=lambda r: r.alpha)


def write_pareto_csv(records, path) -> None:
    """CSV with the fixed header, '.' decimals, LF line endings."""
    with open(path, "w", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(PARETO_CSV_HEADER)
        for r in records:
            writer.writerow([
                f"{r.alpha:.10g}", f"{r.obj_part1_m:.10g}", f"{r.obj_part2:.10g}",
                f"{r.rel_gap:.10g}", f"{r.wall_time_s:.6g}", r.status,
            ])
