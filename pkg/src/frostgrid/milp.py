"""Solver-agnostic MILP representation and builders for the heater-layout problem.

The k-node minimum spanning tree part follows a Miller-Tucker-Zemlin style
construction: every undirected edge {i,j} (binary z) splits into a pair of
directed-arc binaries w_(i,j) / w_(j,i), a dummy terminal node collects the
single directed path endpoint, and continuous node potentials u forbid
directed cycles. Robust heat-coverage rows then couple site-selection
binaries to check-point violation slacks, and the objective trades
normalized pipe length against normalized violations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InfeasibleParametersError
from .graph import WeightedGraph, TreeSolution, validate_ktree
from .instance import OrchardInstance, InfluenceMatrix
from .plan import DesignPlan

BINARY = "binary"
CONTINUOUS = "continuous"

LESS_EQUAL = "<="
EQUAL = "="
GREATER_EQUAL = ">="

#: absolute tolerance for constraint residuals and binary integrality checks
DEFAULT_TOL = 1e-6


@dataclass
class Variable:
    name: str
    kind: str
    lower: float
    upper: float


@dataclass
class Constraint:
    name: str
    terms: list          # [(var_id, coeff), ...]
    sense: str           # one of <=, =, >=
    rhs: float


@dataclass
class MilpModel:
    """Variables, linear constraints, and a minimization objective."""

    name: str = "model"
    variables: list = field(default_factory=list)
    constraints: list = field(default_factory=list)
    objective: list = field(default_factory=list)   # [(var_id, coeff), ...]
    var_index: dict = field(default_factory=dict)

    def add_variable(self, name: str, kind: str, lower: float, upper: float) -> int:
        if name in self.var_index:
            raise ValueError(f"duplicate variable name {name!r}")
        if kind == BINARY and (lower, upper) != (0.0, 1.0):
            raise ValueError("binary variables must have bounds [0, 1]")
        if kind not in (BINARY, CONTINUOUS):
            raise ValueError(f"unknown variable kind {kind!r}")
        vid = len(self.variables)
        self.variables.append(Variable(name, kind, float(lower), float(upper)))
        self.var_index[name] = vid
        return vid

    def add_constraint(self, name: str, terms, sense: str, rhs: float) -> int:
        if sense not in (LESS_EQUAL, EQUAL, GREATER_EQUAL):
            raise ValueError(f"unknown constraint sense {sense!r}")
        for vid, coeff in terms:
            if not (0 <= vid < len(self.variables)):
                raise ValueError(f"constraint {name!r} references undefined variable id {vid}")
            if not math.isfinite(coeff):
                raise ValueError(f"constraint {name!r} has non-finite coefficient")
        cid = len(self.constraints)
        self.constraints.append(Constraint(name, [(int(v), float(c)) for v, c in terms], sense, float(rhs)))
        return cid

    def set_objective(self, terms) -> None:
        for vid, coeff in terms:
            if not (0 <= vid < len(self.variables)):
                raise ValueError(f"objective references undefined variable id {vid}")
        self.objective = [(int(v), float(c)) for v, c in terms]

    @property
    def n_variables(self) -> int:
        return len(self.variables)

    @property
    def n_constraints(self) -> int:
        return len(self.constraints)

    def binary_ids(self) -> list:
        return [i for i, v in enumerate(self.variables) if v.kind == BINARY]

    def objective_value(self, values) -> float:
        return float(sum(c * values[v] for v, c in self.objective))


@dataclass
class VariableCatalog:
    """Id maps for the layout model's decision variables.

    ``tau`` is the dummy terminal's node id (== site count). ``z`` covers
    both real edges (i, j) with i < j and dummy edges (i, tau); ``w`` holds
    every directed arc including (i, tau) and (tau, i).
    """

    tau: int
    k: int
    z: dict = field(default_factory=dict)       # (i, j) -> var id
    w: dict = field(default_factory=dict)       # (i, j) directed -> var id
    ell: dict = field(default_factory=dict)     # site -> var id
    u: dict = field(default_factory=dict)       # node or tau -> var id
    mu_lo: dict = field(default_factory=dict)   # check point -> var id
    mu_hi: dict = field(default_factory=dict)

    def real_edges(self) -> list:
        return [e for e in self.z if e[1] != self.tau]

    def dummy_edges(self) -> list:
        return [e for e in self.z if e[1] == self.tau]


def declare_variables(g: WeightedGraph, k: int, model: MilpModel, n_check_points: int = 0) -> VariableCatalog:
    """Create the layout decision variables in canonical order.

    Order: real-edge z, dummy-edge z, directed w (per real edge both
    directions, then per node the two dummy arcs), site selectors, node
    potentials (sites then the dummy terminal), then violation slacks.
    """
    n = g.node_count
    tau = n
    cat = VariableCatalog(tau=tau, k=int(k))

    for i, j, _ in g.edges:
        cat.z[(i, j)] = model.add_variable(f"z_{i}_{j}", BINARY, 0.0, 1.0)
    for i in range(n):
        cat.z[(i, tau)] = model.add_variable(f"z_{i}_{tau}", BINARY, 0.0, 1.0)
    for i, j, _ in g.edges:
        cat.w[(i, j)] = model.add_variable(f"w_{i}_{j}", BINARY, 0.0, 1.0)
        cat.w[(j, i)] = model.add_variable(f"w_{j}_{i}", BINARY, 0.0, 1.0)
    for i in range(n):
        cat.w[(i, tau)] = model.add_variable(f"w_{i}_{tau}", BINARY, 0.0, 1.0)
        cat.w[(tau, i)] = model.add_variable(f"w_{tau}_{i}", BINARY, 0.0, 1.0)
    for i in range(n):
        cat.ell[i] = model.add_variable(f"l_{i}", BINARY, 0.0, 1.0)
    for i in range(n):
        cat.u[i] = model.add_variable(f"u_{i}", CONTINUOUS, 0.0, float(k))
    cat.u[tau] = model.add_variable(f"u_{tau}", CONTINUOUS, 0.0, float(k))
    for s in range(n_check_points):
        cat.mu_lo[s] = model.add_variable(f"mul_{s}", CONTINUOUS, 0.0, math.inf)
    for s in range(n_check_points):
        cat.mu_hi[s] = model.add_variable(f"muh_{s}", CONTINUOUS, 0.0, math.inf)
    return cat


def build_kmst_constraints(g: WeightedGraph, k: int, model: MilpModel, cat: VariableCatalog) -> None:
    """Emit the exactly-k spanning tree constraints over ``g``.

    Per node, exactly one outgoing arc when selected (possibly to the dummy
    terminal) and at most k-1 incoming arcs; exactly one arc enters the
    terminal and none leave it; node potentials rise by one along selected
    arcs, which rules out directed cycles.

    Note on the potential range: selected nodes get u in [1, k]. The upper
    bound k (rather than k-1) is required so that depth-k orientations --
    in particular the only orientations available when k is 1 or 2 -- stay
    representable; it does not enlarge the set of selectable (z, l)
    configurations, which is pinned down by the degree and cycle rules.
    """
    n = g.node_count
    if k < 1:
        raise ValueError("k must be >= 1")
    if k > n:
        raise InfeasibleParametersError(f"k={k} exceeds node count {n}")
    tau = cat.tau

    for i, j, _ in g.edges:
        model.add_constraint(
            f"link_z_{i}_{j}",
            [(cat.z[(i, j)], 1.0), (cat.w[(i, j)], -1.0), (cat.w[(j, i)], -1.0)],
            EQUAL, 0.0,
        )
    for i in range(n):
        model.add_constraint(
            f"link_z_{i}_{tau}",
            [(cat.z[(i, tau)], 1.0), (cat.w[(i, tau)], -1.0), (cat.w[(tau, i)], -1.0)],
            EQUAL, 0.0,
        )

    adjacency = {i: [] for i in range(n)}
    for i, j, _ in g.edges:
        adjacency[i].append(j)
        adjacency[j].append(i)

    for i in range(n):
        out_terms = [(cat.w[(i, j)], 1.0) for j in sorted(adjacency[i])]
        out_terms.append((cat.w[(i, tau)], 1.0))
        out_terms.append((cat.ell[i], -1.0))
        model.add_constraint(f"outdeg_{i}", out_terms, EQUAL, 0.0)

    for i in range(n):
        in_terms = [(cat.w[(j, i)], 1.0) for j in sorted(adjacency[i])]
        in_terms.append((cat.ell[i], -(k - 1.0)))
        model.add_constraint(f"indeg_{i}", in_terms, LESS_EQUAL, 0.0)

    model.add_constraint(
        "tau_out", [(cat.w[(tau, i)], 1.0) for i in range(n)], EQUAL, 0.0
    )
    model.add_constraint(
        "tau_in", [(cat.w[(i, tau)], 1.0) for i in range(n)], EQUAL, 1.0
    )

    # potentials: u_i >= u_j + 1 when arc (i, j) is used, slack k otherwise
    def mtz_row(i, j):
        terms = [(cat.u[i], 1.0), (cat.u[j], -1.0), (cat.w[(i, j)], -(1.0 + k))]
        model.add_constraint(f"mtz_{i}_{j}", terms, GREATER_EQUAL, -float(k))

    for i, j, _ in g.edges:
        mtz_row(i, j)
        mtz_row(j, i)
    for i in range(n):
        mtz_row(i, tau)

    model.add_constraint("u_tau", [(cat.u[tau], 1.0)], EQUAL, 0.0)
    for i in range(n):
        model.add_constraint(
            f"u_ub_{i}", [(cat.u[i], 1.0), (cat.ell[i], -float(k))], LESS_EQUAL, 0.0
        )
    for i in range(n):
        model.add_constraint(
            f"u_lb_{i}", [(cat.u[i], 1.0), (cat.ell[i], -1.0)], GREATER_EQUAL, 0.0
        )

    model.add_constraint(
        "card_k", [(cat.ell[i], 1.0) for i in range(n)], EQUAL, float(k)
    )


def build_robust_coverage(inst: OrchardInstance, H: InfluenceMatrix,
                          model: MilpModel, cat: VariableCatalog) -> None:
    """Worst-case coverage rows per check point.

    Lower side uses each site's pessimistic multiplier, upper side the
    optimistic one, so a single deterministic pair of rows guards the whole
    uncertainty box. Violation slacks keep the rows always satisfiable.
    """
    n_s, n_cp = H.h.shape
    if n_s != inst.n_sites or n_cp != inst.n_check_points:
        raise ValueError("influence matrix shape does not match the instance")
    if len(cat.mu_lo) != n_cp or len(cat.mu_hi) != n_cp:
        raise ValueError("catalog was not declared with this check point count")

    for s in range(n_cp):
        lo_terms = [(cat.ell[i], float(inst.ku_lo[i] * H.h[i, s])) for i in range(n_s)]
        lo_terms.append((cat.mu_lo[s], 1.0))
        model.add_constraint(f"cov_lo_{s}", lo_terms, GREATER_EQUAL, float(inst.f_lo))
    for s in range(n_cp):
        hi_terms = [(cat.ell[i], float(inst.ku_hi[i] * H.h[i, s])) for i in range(n_s)]
        hi_terms.append((cat.mu_hi[s], -1.0))
        model.add_constraint(f"cov_hi_{s}", hi_terms, LESS_EQUAL, float(inst.f_hi))


def build_objective(inst: OrchardInstance, g: WeightedGraph,
                    model: MilpModel, cat: VariableCatalog,
                    alpha: float | None = None) -> None:
    """Minimize pipe length / beta1 + alpha * total violation / beta2.

    Dummy-edge z variables carry no length and are left out (coefficient 0);
    the violation term is dropped entirely when alpha is 0.
    """
    a = inst.alpha if alpha is None else float(alpha)
    if a < 0:
        raise ValueError("alpha must be >= 0")
    terms = [(cat.z[(i, j)], w / inst.beta1_nor) for i, j, w in g.edges]
    if a > 0:
        coeff = a / inst.beta2_nor
        terms.extend((vid, coeff) for _, vid in sorted(cat.mu_lo.items()))
        terms.extend((vid, coeff) for _, vid in sorted(cat.mu_hi.items()))
    model.set_objective(terms)


def build_layout_model(inst: OrchardInstance, g: WeightedGraph, H: InfluenceMatrix | None,
                       alpha: float | None = None):
    """Assemble the full model (tree + coverage + objective) for an instance."""
    model = MilpModel(name="frostgrid")
    n_cp = inst.n_check_points if H is not None else 0
    cat = declare_variables(g, inst.k, model, n_cp)
    build_kmst_constraints(g, inst.k, model, cat)
    if H is not None:
        build_robust_coverage(inst, H, model, cat)
    build_objective(inst, g, model, cat, alpha)
    return model, cat


@dataclass
class MilpSolution:
    """Variable values from a solve or an external import."""

    values: np.ndarray
    objective_value: float
    status: str   # optimal | feasible | infeasible | unbounded | limit-reached

    def value_of(self, model: MilpModel, name: str) -> float:
        return float(self.values[model.var_index[name]])


@dataclass
class ViolationReport:
    """Constraint and integrality violations of a candidate solution."""

    constraint_violations: list   # (name, lhs, sense, rhs, violation)
    binary_violations: list       # (name, value)

    @property
    def is_feasible(self) -> bool:
        return not self.constraint_violations and not self.binary_violations

    def summary(self) -> str:
        if self.is_feasible:
            return "feasible"
        lines = []
        for name, lhs, sense, rhs, viol in self.constraint_violations[:20]:
            lines.append(f"constraint {name}: lhs={lhs:.9g} {sense} rhs={rhs:.9g} (violated by {viol:.3g})")
        for name, value in self.binary_violations[:20]:
            lines.append(f"binary {name} = {value:.9g} is not 0/1")
        extra = len(self.constraint_violations) + len(self.binary_violations) - len(lines)
        if extra > 0:
            lines.append(f"... and {extra} more")
        return "\n".join(lines)


def validate_solution(model: MilpModel, sol: MilpSolution, tol: float = DEFAULT_TOL) -> ViolationReport:
    """Check every constraint and binary domain of ``sol`` against ``model``."""
    values = np.asarray(sol.values, dtype=float)
    if values.shape != (model.n_variables,):
        raise ValueError(
            f"solution has {values.shape} values for {model.n_variables} variables"
        )
    con_viol = []
    for con in model.constraints:
        lhs = sum(c * values[v] for v, c in con.terms)
        if con.sense == LESS_EQUAL:
            excess = lhs - con.rhs
        elif con.sense == GREATER_EQUAL:
            excess = con.rhs - lhs
        else:
            excess = abs(lhs - con.rhs)
        if excess > tol:
            con_viol.append((con.name, lhs, con.sense, con.rhs, excess))
    bin_viol = []
    for i, var in enumerate(model.variables):
        v = values[i]
        if var.kind == BINARY and min(abs(v), abs(v - 1.0)) > tol:
            bin_viol.append((var.name, float(v)))
        if v < var.lower - tol or v > var.upper + tol:
            con_viol.append((f"bound[{var.name}]", float(v), "in",
                             (var.lower, var.upper),
                             max(var.lower - v, v - var.upper)))
    return ViolationReport(con_viol, bin_viol)


def extract_plan(inst: OrchardInstance, g: WeightedGraph,
                 cat: VariableCatalog, sol: MilpSolution) -> DesignPlan:
    """Turn a feasible solution into a DesignPlan.

    The dummy terminal's edge is discarded; pipe length is recomputed from
    the graph weights of the selected real edges, and obj_part2 is the
    check-point average of the violation slacks.
    """
    if sol.status not in ("optimal", "feasible"):
        raise ValueError(f"cannot extract a plan from a {sol.status!r} solution")
    values = sol.values
    selected = sorted(i for i, vid in sorted(cat.ell.items()) if values[vid] > 0.5)
    weight = g.weight_map()
    chosen_edges = [
        (i, j) for (i, j) in sorted(cat.real_edges()) if values[cat.z[(i, j)]] > 0.5
    ]

    tree = TreeSolution(frozenset(selected), frozenset(chosen_edges),
                        sum(weight[e] for e in chosen_edges))
    if not validate_ktree(g, tree, cat.k):
        raise ValueError(
            f"solution does not describe a {cat.k}-node tree: "
            f"{len(selected)} selected sites, {len(chosen_edges)} selected edges"
        )

    local = {site: idx for idx, site in enumerate(selected)}
    obj_part1 = float(sum(weight[e] for e in chosen_edges))
    if cat.mu_lo:
        total_mu = sum(values[vid] for vid in cat.mu_lo.values())
        total_mu += sum(values[vid] for vid in cat.mu_hi.values())
        obj_part2 = float(total_mu) / len(cat.mu_lo)
    else:
        obj_part2 = None
    return DesignPlan(
        heaters=inst.candidate_sites[selected],
        site_ids=tuple(selected),
        pipe_edges=tuple((local[i], local[j]) for i, j in chosen_edges),
        obj_part1_m=obj_part1,
        obj_part2=obj_part2,
        alpha=float(inst.alpha),
        provenance="milp",
    )
