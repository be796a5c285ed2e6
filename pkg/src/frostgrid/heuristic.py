"""Two-stage baseline layout: equal-area partition, center placement, MST.

The orchard is split into a rows-by-cols grid of equal cells whose aspect
ratio tracks the orchard's, one heater goes at each cell center (pushed off
any too-close tree), and the heaters are joined by a Kruskal MST over their
pairwise distances. Placement is continuous: heaters land wherever the cell
centers fall, not on the candidate grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import PlacementError
from .graph import complete_graph, kruskal_mst
from .instance import OrchardInstance
from .plan import DesignPlan

#: worst acceptable |cols/rows - L/W| before falling back to a non-exact grid
_ASPECT_LIMIT = 4.0

_PUSH_ITERATIONS = 10


@dataclass(frozen=True)
class PartitionScheme:
    rows: int
    cols: int
    cell_w: float
    cell_h: float

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ValueError("partition needs at least one row and column")


def partition(inst: OrchardInstance) -> PartitionScheme:
    """Pick the equal-area grid whose cell aspect best matches the orchard.

    Exact factorizations rows*cols == k are preferred; when none has an
    aspect deviation within the limit, the smallest grid with rows*cols >= k
    is used instead and only the first k cells get heaters.
    """
    k = inst.k
    ratio = inst.length_m / inst.width_m

    exact = []
    for rows in range(1, k + 1):
        if k % rows == 0:
            cols = k // rows
            exact.append((abs(cols / rows - ratio), rows, cols))
    score, rows, cols = min(exact)
    if score > _ASPECT_LIMIT:
        over = []
        for rows in range(1, k + 1):
            cols = math.ceil(k / rows)
            over.append((rows * cols - k, abs(cols / rows - ratio), rows, cols))
        _, _, rows, cols = min(over)
    return PartitionScheme(rows, cols, inst.length_m / cols, inst.width_m / rows)


def place_heaters(inst: OrchardInstance, scheme: PartitionScheme) -> np.ndarray:
    """Cell centers in row-major order (bottom row first), pushed clear of trees.

    A center within d_ht of a tree root moves along the ray from that tree
    through the center until the distance is exactly d_ht (a center sitting
    on a root moves along +x); the result is re-checked against all trees
    for a bounded number of rounds.
    """
    centers = []
    for r in range(scheme.rows):
        for c in range(scheme.cols):
            centers.append(((c + 0.5) * scheme.cell_w, (r + 0.5) * scheme.cell_h))
            if len(centers) == inst.k:
                break
        if len(centers) == inst.k:
            break

    trees = inst.trees
    placed = []
    for px, py in centers:
        p = np.array([px, py])
        if len(trees):
            for _ in range(_PUSH_ITERATIONS):
                d = np.hypot(trees[:, 0] - p[0], trees[:, 1] - p[1])
                nearest = int(np.argmin(d))
                if d[nearest] >= inst.d_ht_m - 1e-12:
                    break
                direction = p - trees[nearest]
                norm = float(np.hypot(*direction))
                if norm < 1e-12:
                    direction = np.array([1.0, 0.0])
                    norm = 1.0
                p = trees[nearest] + direction * (inst.d_ht_m / norm)
            else:
                raise PlacementError(
                    f"could not push cell center ({px:.3f}, {py:.3f}) clear of trees "
                    f"within {_PUSH_ITERATIONS} iterations"
                )
        placed.append(p)
    return np.array(placed).reshape(len(placed), 2)


def heuristic_plan(inst: OrchardInstance) -> DesignPlan:
    """Run both stages and package the result (violations left unevaluated)."""
    scheme = partition(inst)
    heaters = place_heaters(inst, scheme)
    if len(heaters) > 1:
        mst = kruskal_mst(complete_graph(heaters))
        edges = tuple(sorted(mst.edges))
    else:
        edges = ()
    obj_part1 = sum(
        float(np.hypot(*(heaters[a] - heaters[b]))) for a, b in edges
    )
    return DesignPlan(
        heaters=heaters,
        site_ids=None,
        pipe_edges=edges,
        obj_part1_m=obj_part1,
        obj_part2=None,
        alpha=inst.alpha,
        provenance="heuristic",
    )
