"""Design plans: a chosen heater layout plus its pipe tree, with JSON persistence."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import PlanMismatchError
from .graph import UnionFind

PLAN_SCHEMA_VERSION = 1

PROVENANCES = ("milp", "heuristic", "imported", "oracle")


@dataclass(frozen=True)
class DesignPlan:
    """A concrete design: heater coordinates, pipe edges, objective decomposition.

    ``pipe_edges`` index into ``heaters`` and must form a spanning tree
    (empty when there are fewer than two heaters). ``site_ids`` is set for
    grid-based plans and None for continuous (heuristic) placements.
    ``obj_part1_m`` is total pipe length in meters; ``obj_part2`` the average
    power-fraction range violation over check points (None if not evaluated).
    """

    heaters: np.ndarray          # (k, 2)
    site_ids: tuple | None
    pipe_edges: tuple            # ((a, b), ...) with a < b, indices into heaters
    obj_part1_m: float
    obj_part2: float | None
    alpha: float
    provenance: str

    def __post_init__(self):
        pts = np.asarray(self.heaters, dtype=float)
        if pts.size == 0:
            pts = pts.reshape(0, 2)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise ValueError("heaters must be an (n, 2) coordinate array")
        object.__setattr__(self, "heaters", pts)
        edges = tuple((min(int(a), int(b)), max(int(a), int(b))) for a, b in self.pipe_edges)
        object.__setattr__(self, "pipe_edges", edges)
        if self.site_ids is not None:
            ids = tuple(int(i) for i in self.site_ids)
            if len(ids) != len(pts):
                raise ValueError("site_ids length must match heaters")
            object.__setattr__(self, "site_ids", ids)
        if self.provenance not in PROVENANCES:
            raise ValueError(f"unknown provenance {self.provenance!r}")
        self._validate_tree()

    def _validate_tree(self):
        n = len(self.heaters)
        edges = self.pipe_edges
        if n <= 1:
            if edges:
                raise ValueError("a plan with <= 1 heater cannot have pipe edges")
        else:
            if len(edges) != n - 1:
                raise ValueError(f"expected {n - 1} pipe edges for {n} heaters, got {len(edges)}")
            uf = UnionFind(range(n))
            for a, b in edges:
                if not (0 <= a < n and 0 <= b < n) or a == b:
                    raise ValueError(f"pipe edge ({a},{b}) references an unknown heater")
                if not uf.union(a, b):
                    raise ValueError("pipe edges contain a cycle")
        total = self.pipe_length()
        if not math.isfinite(self.obj_part1_m) or abs(total - self.obj_part1_m) > 1e-9:
            raise ValueError(
                f"obj_part1_m={self.obj_part1_m} does not match edge lengths {total}"
            )

    def pipe_length(self) -> float:
        total = 0.0
        for a, b in self.pipe_edges:
            total += float(np.hypot(*(self.heaters[a] - self.heaters[b])))
        return total

    @property
    def k(self) -> int:
        return len(self.heaters)


def plan_to_dict(plan: DesignPlan, instance_digest: str | None = None) -> dict:
    d = {
        "schema_version": PLAN_SCHEMA_VERSION,
        "provenance": plan.provenance,
        "alpha": float(plan.alpha),
        "heaters": [[float(x), float(y)] for x, y in plan.heaters],
        "site_ids": list(plan.site_ids) if plan.site_ids is not None else None,
        "pipe_edges": [[a, b] for a, b in plan.pipe_edges],
        "obj_part1_m": float(plan.obj_part1_m),
        "obj_part2": None if plan.obj_part2 is None else float(plan.obj_part2),
    }
    if instance_digest is not None:
        d["instance_digest"] = instance_digest
    return d


def plan_from_dict(d: dict) -> DesignPlan:
    version = d.get("schema_version")
    if version != PLAN_SCHEMA_VERSION:
        raise ValueError(f"unsupported plan schema_version: {version!r}")
    return DesignPlan(
        heaters=np.asarray(d["heaters"], dtype=float).reshape(-1, 2),
        site_ids=tuple(d["site_ids"]) if d.get("site_ids") is not None else None,
        pipe_edges=tuple(tuple(e) for e in d["pipe_edges"]),
        obj_part1_m=d["obj_part1_m"],
        obj_part2=d.get("obj_part2"),
        alpha=d["alpha"],
        provenance=d["provenance"],
    )


def save_plan(plan: DesignPlan, path, instance_digest: str | None = None) -> None:
    Path(path).write_text(json.dumps(plan_to_dict(plan, instance_digest), indent=2) + "\n")


def load_plan(path, expected_digest: str | None = None) -> DesignPlan:
    """Read a plan file; verify the instance digest when one is expected.

    The stored digest is only checked when both sides have one, so plans
    can still be inspected without the originating instance.
    """
    d = json.loads(Path(path).read_text())
    stored = d.get("instance_digest")
    if expected_digest is not None and stored is not None and stored != expected_digest:
        raise PlanMismatchError(
            f"plan belongs to instance {stored}, expected {expected_digest}"
        )
    return plan_from_dict(d)
