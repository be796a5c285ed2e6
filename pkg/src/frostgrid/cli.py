"""Command-line interface: generate / solve / heuristic / sweep / oracle / evaluate / render.

Exit codes: 0 success, 2 invalid input, 3 infeasible, 4 limit reached with
no incumbent, 5 internal or numeric error. The FROSTGRID_WORKERS
environment variable supplies the default worker count; a --workers flag
wins over it.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import evaluation, solver
from .errors import (
    BudgetExceededError,
    FrostgridError,
    ImportedSolutionError,
    InfeasibleInstanceError,
    InfeasibleParametersError,
    MappingError,
    NumericError,
    PlacementError,
    PlanMismatchError,
    RenderError,
)
from .graph import complete_graph
from .heuristic import heuristic_plan
from .instance import (
    GridParams,
    build_influence_matrix,
    generate_instance,
    instance_digest,
    load_instance,
    save_instance,
)
from .milp import build_layout_model, extract_plan
from .plan import load_plan, save_plan
from .render import LayerFlags, RenderSpec, render_svg

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_INFEASIBLE = 3
EXIT_LIMIT_NO_INCUMBENT = 4
EXIT_INTERNAL = 5


def _default_workers() -> int:
    try:
        return max(1, int(os.environ.get("FROSTGRID_WORKERS", "1")))
    except ValueError:
        return 1


def _solve_config(args) -> solver.SolveConfig:
    return solver.SolveConfig(
        time_limit_s=args.time_limit,
        rel_gap_tol=args.gap,
        worker_count=args.workers if args.workers else _default_workers(),
    )


def _emit(payload: dict) -> None:
    print(json.dumps(payload, indent=2, sort_keys=True))


# --- commands ---------------------------------------------------------------

def cmd_generate(args) -> int:
    params = GridParams(
        length_m=args.length,
        width_m=args.width,
        tree_spacing_m=args.tree_spacing,
        site_spacing_m=args.site_spacing,
        cp_spacing_m=args.cp_spacing,
        k=args.k,
        d_ht_m=args.d_ht,
        f_lo=args.f_lo,
        f_hi=args.f_hi,
        k_tun=args.k_tun,
        ku_lo=args.ku_lo,
        ku_hi=args.ku_hi,
        alpha=args.alpha,
        beta1_nor=args.beta1,
        beta2_nor=args.beta2,
    )
    inst = generate_instance(params)
    save_instance(inst, args.out)
    _emit({
        "out": str(args.out),
        "trees": inst.n_trees,
        "candidate_sites": inst.n_sites,
        "check_points": inst.n_check_points,
        "k": inst.k,
        "digest": instance_digest(inst),
    })
    return EXIT_OK


def cmd_solve(args) -> int:
    inst = load_instance(args.instance)
    alpha = inst.alpha if args.alpha is None else args.alpha

    if args.export_mps:
        g = complete_graph(inst.candidate_sites)
        H = build_influence_matrix(inst) if inst.n_check_points else None
        model, _ = build_layout_model(inst, g, H, alpha)
        solver.export_mps(model, args.export_mps)
        _emit({
            "exported_mps": str(args.export_mps),
            "variables": model.n_variables,
            "constraints": model.n_constraints,
        })
        return EXIT_OK

    if args.import_solution:
        g = complete_graph(inst.candidate_sites)
        H = build_influence_matrix(inst) if inst.n_check_points else None
        model, cat = build_layout_model(inst, g, H, alpha)
        sol, warnings = solver.import_solution(model, args.import_solution)
        for name in warnings:
            print(f"warning: variable {name} missing from solution, defaulted to 0", file=sys.stderr)
        plan = extract_plan(inst, g, cat, sol)
        save_plan(plan, args.out, instance_digest(inst))
        _emit({
            "out": str(args.out),
            "objective": sol.objective_value,
            "obj_part1_m": plan.obj_part1_m,
            "obj_part2": plan.obj_part2,
            "status": "imported",
        })
        return EXIT_OK

    plan, result = evaluation.solve_instance(inst, _solve_config(args), alpha=alpha)
    if result.status == solver.INFEASIBLE:
        print("model is infeasible", file=sys.stderr)
        return EXIT_INFEASIBLE
    if result.status in (solver.NUMERIC, solver.UNBOUNDED):
        print(f"solver failed: {result.status}", file=sys.stderr)
        return EXIT_INTERNAL
    if plan is None:
        print("hit limits before finding any feasible design", file=sys.stderr)
        return EXIT_LIMIT_NO_INCUMBENT
    save_plan(plan, args.out, instance_digest(inst))
    _emit({
        "out": str(args.out),
        "status": result.status,
        "objective": result.incumbent_obj,
        "best_bound": result.best_bound,
        "rel_gap": result.rel_gap,
        "nodes": result.nodes_explored,
        "wall_time_s": result.wall_time_s,
        "obj_part1_m": plan.obj_part1_m,
        "obj_part2": plan.obj_part2,
    })
    return EXIT_OK


def cmd_heuristic(args) -> int:
    inst = load_instance(args.instance)
    plan = heuristic_plan(inst)
    mu_lo, mu_hi, obj2 = evaluation.worst_case_violations(plan, inst)
    stats = evaluation.sampled_violations(plan, inst, seed=args.seed, draws=args.draws)
    save_plan(plan, args.out, instance_digest(inst))
    _emit({
        "out": str(args.out),
        "obj_part1_m": plan.obj_part1_m,
        "obj_part2_worst_case": obj2,
        "obj_part2_sampled_mean": stats.mean,
        "obj_part2_sampled_max": stats.max,
        "obj_part2_sampled_std": stats.std,
        "draws": stats.draws,
        "seed": stats.seed,
    })
    return EXIT_OK


def cmd_sweep(args) -> int:
    inst = load_instance(args.instance)
    alphas = [float(a) for a in args.alphas.split(",") if a.strip() != ""]
    workers = args.workers if args.workers else _default_workers()
    records = evaluation.pareto_sweep(inst, alphas, _solve_config(args), workers=workers)
    evaluation.write_pareto_csv(records, args.out)
    _emit({
        "out": str(args.out),
        "rows": len(records),
        "statuses": [r.status for r in records],
    })
    return EXIT_OK


def cmd_oracle(args) -> int:
    inst = load_instance(args.instance)
    plan = evaluation.exhaustive_oracle(inst, alpha=args.alpha, budget=args.budget)
    save_plan(plan, args.out, instance_digest(inst))
    _emit({
        "out": str(args.out),
        "obj_part1_m": plan.obj_part1_m,
        "obj_part2": plan.obj_part2,
        "scalarized": evaluation.scalarized_objective(inst, plan, plan.alpha),
        "site_ids": list(plan.site_ids),
    })
    return EXIT_OK


def cmd_evaluate(args) -> int:
    inst = load_instance(args.instance)
    plan = load_plan(args.plan, expected_digest=instance_digest(inst))
    mu_lo, mu_hi, obj2 = evaluation.worst_case_violations(plan, inst)
    stats = evaluation.sampled_violations(plan, inst, seed=args.seed, draws=args.draws)
    _emit({
        "plan": str(args.plan),
        "provenance": plan.provenance,
        "k": plan.k,
        "obj_part1_m": plan.obj_part1_m,
        "obj_part2_worst_case": obj2,
        "obj_part2_sampled_mean": stats.mean,
        "scalarized": evaluation.scalarized_objective(inst, plan, plan.alpha),
        "alpha": plan.alpha,
    })
    return EXIT_OK


def cmd_render(args) -> int:
    inst = load_instance(args.instance)
    plan = None
    if args.plan:
        plan = load_plan(args.plan, expected_digest=instance_digest(inst))
    spec = RenderSpec(
        canvas_px=(args.canvas_width, args.canvas_height),
        margin_px=args.margin,
        layers=LayerFlags(
            trees=not args.no_trees,
            candidate_sites=not args.no_sites,
            check_points=not args.no_cps,
            heaters=not args.no_heaters,
            pipes=not args.no_pipes,
        ),
    )
    svg = render_svg(inst, plan, spec)
    Path(args.out).write_text(svg)
    _emit({"out": str(args.out), "bytes": len(svg)})
    return EXIT_OK


# --- parser -----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="frostgrid",
        description="Design frost-prevention heater layouts for orchards.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a grid instance JSON file")
    g.add_argument("--length", type=float, default=180.0)
    g.add_argument("--width", type=float, default=120.0)
    g.add_argument("--tree-spacing", type=float, default=10.0)
    g.add_argument("--site-spacing", type=float, default=10.0)
    g.add_argument("--cp-spacing", type=float, default=10.0)
    g.add_argument("--k", type=int, default=21)
    g.add_argument("--d-ht", type=float, default=3.0)
    g.add_argument("--f-lo", type=float, default=0.5)
    g.add_argument("--f-hi", type=float, default=1.0)
    g.add_argument("--ku-lo", type=float, default=0.8)
    g.add_argument("--ku-hi", type=float, default=1.0)
    g.add_argument("--k-tun", type=float, default=0.01)
    g.add_argument("--alpha", type=float, default=5.0)
    g.add_argument("--beta1", type=float, default=600.0)
    g.add_argument("--beta2", type=float, default=240.0)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_generate)

    s = sub.add_parser("solve", help="solve the layout MILP for an instance")
    s.add_argument("instance")
    s.add_argument("--alpha", type=float, default=None, help="override the instance's alpha")
    s.add_argument("--time-limit", type=float, default=3600.0)
    s.add_argument("--gap", type=float, default=1e-4)
    s.add_argument("--workers", type=int, default=0, help="0 = use FROSTGRID_WORKERS or 1")
    s.add_argument("--export-mps", default=None, help="write the model as MPS and exit")
    s.add_argument("--import-solution", default=None, help="read an external solution instead of solving")
    s.add_argument("--out", default="plan.json")
    s.set_defaults(func=cmd_solve)

    h = sub.add_parser("heuristic", help="run the partition + MST baseline")
    h.add_argument("instance")
    h.add_argument("--draws", type=int, default=1000)
    h.add_argument("--seed", type=int, default=0)
    h.add_argument("--out", default="heuristic_plan.json")
    h.set_defaults(func=cmd_heuristic)

    w = sub.add_parser("sweep", help="Pareto sweep over scalarization weights")
    w.add_argument("instance")
    w.add_argument("--alphas", default="0.1,1,5,10,100,1000")
    w.add_argument("--time-limit", type=float, default=3600.0)
    w.add_argument("--gap", type=float, default=1e-4)
    w.add_argument("--workers", type=int, default=0)
    w.add_argument("--out", default="pareto.csv")
    w.set_defaults(func=cmd_sweep)

    o = sub.add_parser("oracle", help="exhaustive enumeration over site subsets")
    o.add_argument("instance")
    o.add_argument("--alpha", type=float, default=None)
    o.add_argument("--budget", type=int, default=1_000_000)
    o.add_argument("--out", default="oracle_plan.json")
    o.set_defaults(func=cmd_oracle)

    e = sub.add_parser("evaluate", help="recompute a plan's objective decomposition")
    e.add_argument("--plan", required=True)
    e.add_argument("--instance", required=True)
    e.add_argument("--draws", type=int, default=1000)
    e.add_argument("--seed", type=int, default=0)
    e.set_defaults(func=cmd_evaluate)

    r = sub.add_parser("render", help="draw instance (and plan) as SVG")
    r.add_argument("--instance", required=True)
    r.add_argument("--plan", default=None)
    r.add_argument("--out", required=True)
    r.add_argument("--canvas-width", type=int, default=900)
    r.add_argument("--canvas-height", type=int, default=680)
    r.add_argument("--margin", type=int, default=50)
    r.add_argument("--no-trees", action="store_true")
    r.add_argument("--no-sites", action="store_true")
    r.add_argument("--no-cps", action="store_true")
    r.add_argument("--no-heaters", action="store_true")
    r.add_argument("--no-pipes", action="store_true")
    r.set_defaults(func=cmd_render)

    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INVALID if exc.code not in (0, None) else 0

    try:
        return args.func(args)
    except (InfeasibleInstanceError, InfeasibleParametersError) as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except ImportedSolutionError as exc:
        print(f"rejected imported solution:\n{exc}", file=sys.stderr)
        return EXIT_INVALID
    except (MappingError, PlanMismatchError, RenderError, BudgetExceededError,
            ValueError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (NumericError, PlacementError, FrostgridError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
