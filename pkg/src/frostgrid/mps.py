"""MPS model export/import and text solution files for external solvers.

The bridge is file-based on purpose: a free-format MPS file goes out, a
plain ``variable_name value`` listing comes back, and nothing else is
shared with the external solver. Export is byte-deterministic for a given
model so files can be diffed and cached.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from .errors import ExportError, ImportedSolutionError, MappingError
from .milp import (
    BINARY,
    CONTINUOUS,
    EQUAL,
    GREATER_EQUAL,
    LESS_EQUAL,
    MilpModel,
    MilpSolution,
    validate_solution,
)

_OBJ_ROW = "COST"
_SENSE_TO_ROW = {LESS_EQUAL: "L", GREATER_EQUAL: "G", EQUAL: "E"}
_ROW_TO_SENSE = {v: k for k, v in _SENSE_TO_ROW.items()}


def _fmt(v: float) -> str:
    return f"{v:.12g}"


def _check_name(name: str) -> str:
    if not name or any(ch.isspace() for ch in name) or not name.isascii():
        raise ExportError(f"name {name!r} cannot be encoded in MPS")
    if name.upper() == _OBJ_ROW:
        raise ExportError(f"name {name!r} collides with the objective row")
    return name


def export_mps(model: MilpModel, path) -> None:
    """Write ``model`` as free-format MPS (minimization, integrality markers).

    Sections: NAME, ROWS, COLUMNS (binary runs wrapped in INTORG/INTEND),
    RHS (zero entries omitted), BOUNDS (finite non-default bounds only),
    ENDATA. Output bytes depend only on the model contents.
    """
    lines = [f"NAME          {_check_name(model.name)}"]
    lines.append("ROWS")
    lines.append(f" N  {_OBJ_ROW}")
    for con in model.constraints:
        lines.append(f" {_SENSE_TO_ROW[con.sense]}  {_check_name(con.name)}")

    # per-column entries: objective first, then constraint rows in order
    entries = [[] for _ in model.variables]
    for vid, coeff in model.objective:
        if coeff != 0.0:
            entries[vid].append((_OBJ_ROW, coeff))
    for con in model.constraints:
        for vid, coeff in con.terms:
            if coeff != 0.0:
                entries[vid].append((con.name, coeff))

    lines.append("COLUMNS")
    in_int = False
    marker_no = 0
    for vid, var in enumerate(model.variables):
        want_int = var.kind == BINARY
        if want_int != in_int:
            tag = "INTORG" if want_int else "INTEND"
            lines.append(f"    M{marker_no:<9} 'MARKER'    '{tag}'")
            marker_no += 1
            in_int = want_int
        name = _check_name(var.name)
        cols = entries[vid] or [(_OBJ_ROW, 0.0)]   # declare the column even if empty
        for row, coeff in cols:
            lines.append(f"    {name:<10} {row:<10} {_fmt(coeff)}")
    if in_int:
        lines.append(f"    M{marker_no:<9} 'MARKER'    'INTEND'")

    lines.append("RHS")
    for con in model.constraints:
        if con.rhs != 0.0:
            lines.append(f"    RHS        {con.name:<10} {_fmt(con.rhs)}")

    lines.append("BOUNDS")
    for var in model.variables:
        lo, hi = var.lower, var.upper
        if lo == hi:
            lines.append(f" FX BND        {var.name:<10} {_fmt(lo)}")
            continue
        if not math.isfinite(lo):
            lines.append(f" MI BND        {var.name:<10}")
        elif lo != 0.0:
            lines.append(f" LO BND        {var.name:<10} {_fmt(lo)}")
        if math.isfinite(hi):
            lines.append(f" UP BND        {var.name:<10} {_fmt(hi)}")
    lines.append("ENDATA")

    try:
        Path(path).write_text("\n".join(lines) + "\n")
    except OSError as exc:
        raise ExportError(f"cannot write MPS file {path}: {exc}") from exc


def import_mps(path) -> MilpModel:
    """Parse a free-format MPS file back into a model.

    Supports what export_mps emits (plus multi-pair COLUMNS/RHS lines).
    Integer columns with bounds [0, 1] become binary variables; any other
    integer domain is rejected.
    """
    model = MilpModel()
    section = None
    in_int = False
    row_sense = {}
    row_order = []
    obj_row = None
    col_terms = {}       # var name -> list of (row, coeff)
    col_order = []
    col_int = {}
    rhs = {}
    bounds = {}          # var name -> [lo, hi]

    for raw in Path(path).read_text().splitlines():
        line = raw.rstrip()
        if not line or line.lstrip().startswith("*"):
            continue
        if not line[0].isspace():
            head = line.split()
            section = head[0].upper()
            if section == "NAME":
                model.name = head[1] if len(head) > 1 else "model"
            if section == "ENDATA":
                break
            continue
        tokens = line.split()
        if section == "ROWS":
            kind, name = tokens[0].upper(), tokens[1]
            if kind == "N":
                obj_row = name
            else:
                if kind not in _ROW_TO_SENSE:
                    raise ValueError(f"unknown row kind {kind!r}")
                row_sense[name] = _ROW_TO_SENSE[kind]
                row_order.append(name)
        elif section == "COLUMNS":
            if len(tokens) >= 3 and tokens[1] == "'MARKER'":
                in_int = tokens[2] == "'INTORG'"
                continue
            col = tokens[0]
            if col not in col_terms:
                col_terms[col] = []
                col_order.append(col)
                col_int[col] = in_int
            for i in range(1, len(tokens) - 1, 2):
                col_terms[col].append((tokens[i], float(tokens[i + 1])))
        elif section == "RHS":
            for i in range(1, len(tokens) - 1, 2):
                rhs[tokens[i]] = float(tokens[i + 1])
        elif section == "BOUNDS":
            btype = tokens[0].upper()
            var = tokens[2]
            val = float(tokens[3]) if len(tokens) > 3 else None
            lo, hi = bounds.setdefault(var, [0.0, math.inf])
            if btype == "UP":
                hi = val
            elif btype == "LO":
                lo = val
            elif btype == "FX":
                lo = hi = val
            elif btype == "MI":
                lo = -math.inf
            elif btype == "PL":
                hi = math.inf
            elif btype == "BV":
                lo, hi = 0.0, 1.0
            else:
                raise ValueError(f"unsupported bound type {btype!r}")
            bounds[var] = [lo, hi]
        elif section == "RANGES":
            raise ValueError("RANGES section is not supported")

    if obj_row is None:
        raise ValueError("MPS file has no objective (N) row")

    for col in col_order:
        lo, hi = bounds.get(col, [0.0, math.inf])
        if col_int[col]:
            if (lo, hi) != (0.0, 1.0):
                raise ValueError(f"integer column {col!r} must have bounds [0, 1]")
            model.add_variable(col, BINARY, 0.0, 1.0)
        else:
            model.add_variable(col, CONTINUOUS, lo, hi)

    obj_terms = []
    row_terms = {name: [] for name in row_order}
    for col in col_order:
        vid = model.var_index[col]
        for row, coeff in col_terms[col]:
            if row == obj_row:
                obj_terms.append((vid, coeff))
            elif row in row_terms:
                row_terms[row].append((vid, coeff))
            else:
                raise ValueError(f"column {col!r} references unknown row {row!r}")
    for name in row_order:
        model.add_constraint(name, row_terms[name], row_sense[name], rhs.get(name, 0.0))
    model.set_objective(obj_terms)
    return model


def export_solution(model: MilpModel, sol: MilpSolution, path) -> None:
    """Write ``variable_name value`` lines, full double precision."""
    lines = [f"# objective {sol.objective_value:.17g}"]
    for var, value in zip(model.variables, sol.values):
        lines.append(f"{var.name} {float(value):.17g}")
    Path(path).write_text("\n".join(lines) + "\n")


def import_solution(model: MilpModel, path, tol: float = 1e-6):
    """Read a ``variable_name value`` solution file and validate it.

    Missing variables default to 0 and are returned as a warning list.
    Unknown names raise MappingError; a solution that fails validation
    raises ImportedSolutionError carrying the ViolationReport.

    Returns (MilpSolution, warnings).
    """
    values = np.zeros(model.n_variables)
    seen = set()
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise MappingError(f"{path}:{lineno}: expected 'name value', got {raw!r}")
        name, text = parts
        if name not in model.var_index:
            raise MappingError(f"{path}:{lineno}: unknown variable {name!r}")
        values[model.var_index[name]] = float(text)
        seen.add(name)

    warnings = [v.name for v in model.variables if v.name not in seen]
    sol = MilpSolution(
        values=values,
        objective_value=model.objective_value(values),
        status="feasible",
    )
    report = validate_solution(model, sol, tol)
    if not report.is_feasible:
        raise ImportedSolutionError(
            f"imported solution violates the model:\n{report.summary()}", report
        )
    return sol, warnings
