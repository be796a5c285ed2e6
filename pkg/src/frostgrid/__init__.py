"""Frost-prevention heater layout design.

Places k hot-air heaters on a discrete candidate grid inside an orchard and
connects them with a minimum-length pipe tree, trading pipe length against
worst-case heat-coverage violations at check points. Ships an exact MILP
route (model builders + branch-and-bound solver), the partition/MST
heuristic baseline, Pareto sweeps over the trade-off weight, exhaustive
oracles for verification, and a CLI with SVG rendering.
"""

from .errors import (
    BudgetExceededError,
    ExportError,
    FrostgridError,
    ImportedSolutionError,
    InfeasibleInstanceError,
    InfeasibleParametersError,
    MappingError,
    NoSpanningTreeError,
    NumericError,
    PlacementError,
    PlanMismatchError,
    RenderError,
)
from .instance import (
    GridParams,
    HeatModel,
    InfluenceMatrix,
    OrchardInstance,
    build_influence_matrix,
    generate_instance,
    influence,
    instance_digest,
    load_instance,
    save_instance,
)
from .graph import TreeSolution, WeightedGraph, complete_graph, kruskal_mst, validate_ktree
from .plan import DesignPlan, load_plan, save_plan
from .milp import (
    MilpModel,
    MilpSolution,
    VariableCatalog,
    ViolationReport,
    build_kmst_constraints,
    build_layout_model,
    build_objective,
    build_robust_coverage,
    declare_variables,
    extract_plan,
    validate_solution,
)
from .solver import (
    SolveConfig,
    SolveResult,
    export_mps,
    export_solution,
    import_mps,
    import_solution,
    solve,
)
from .heuristic import PartitionScheme, heuristic_plan, partition, place_heaters
from .evaluation import (
    ParetoRecord,
    ViolationStats,
    exhaustive_oracle,
    pareto_sweep,
    sampled_violations,
    scalarized_objective,
    snap_to_sites,
    solve_instance,
    worst_case_violations,
    write_pareto_csv,
)
from .render import LayerFlags, RenderSpec, render_svg

__version__ = "0.1.0"
