"""Orchard geometry: grid generation, heat influence, and instance (de)serialization.

An orchard is a rectangle [0, L] x [0, W] holding three point families:
tree roots, candidate heater locations, and check points where total
heating power is constrained. A heater at distance d delivers the power
fraction exp(-k_tun * d); the influence matrix tabulates that fraction
for every (candidate site, check point) pair.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

from .errors import InfeasibleInstanceError

Point2D = tuple[float, float]

SCHEMA_VERSION = 1

#: geometric slack for "on the boundary" / "at exactly d_ht" comparisons
GEOM_TOL = 1e-9


def influence(source: Point2D, target: Point2D, k_tun: float) -> float:
    """Fraction of peak heater power reaching ``target`` from a heater at ``source``.

    Exponential decay in Euclidean distance: exp(-k_tun * dist). The value is
    1.0 exactly when the points coincide and falls off strictly with distance.
    """
    xs, ys = float(source[0]), float(source[1])
    xt, yt = float(target[0]), float(target[1])
    if not all(math.isfinite(v) for v in (xs, ys, xt, yt)):
        raise ValueError("influence: coordinates must be finite")
    if not (math.isfinite(k_tun) and k_tun > 0):
        raise ValueError(f"influence: k_tun must be finite and > 0, got {k_tun}")
    return math.exp(-k_tun * math.hypot(xt - xs, yt - ys))


@dataclass(frozen=True)
class HeatModel:
    """Absolute-power model of one heater: peak power and spatial decay rate.

    Peak power cancels out of the layout optimization (constraints are in
    power fractions); it is kept for reporting watts at a point.
    """

    p0_watts: float
    k_tun: float

    def __post_init__(self):
        if not (math.isfinite(self.p0_watts) and self.p0_watts > 0):
            raise ValueError("p0_watts must be finite and > 0")
        if not (math.isfinite(self.k_tun) and self.k_tun > 0):
            raise ValueError("k_tun must be finite and > 0")

    def power_at(self, source: Point2D, target: Point2D) -> float:
        return self.p0_watts * influence(source, target, self.k_tun)


@dataclass(frozen=True)
class OrchardInstance:
    """Immutable problem instance: geometry, heater economics, and robustness bounds.

    ``ku_lo``/``ku_hi`` are the per-candidate-site interval bounds of the
    uncertain heating-effect multiplier. Instances are safe to share
    read-only across solver or sweep workers.
    """

    length_m: float
    width_m: float
    trees: np.ndarray            # (n_t, 2) tree root coordinates, meters
    candidate_sites: np.ndarray  # (n_s, 2)
    check_points: np.ndarray     # (n_cp, 2)
    k: int
    d_ht_m: float
    f_lo: float
    f_hi: float
    k_tun: float
    ku_lo: np.ndarray            # (n_s,)
    ku_hi: np.ndarray            # (n_s,)
    alpha: float
    beta1_nor: float
    beta2_nor: float

    def __post_init__(self):
        object.__setattr__(self, "trees", _as_points(self.trees, "trees"))
        object.__setattr__(self, "candidate_sites", _as_points(self.candidate_sites, "candidate_sites"))
        object.__setattr__(self, "check_points", _as_points(self.check_points, "check_points"))
        object.__setattr__(self, "ku_lo", np.asarray(self.ku_lo, dtype=float))
        object.__setattr__(self, "ku_hi", np.asarray(self.ku_hi, dtype=float))
        self._validate()

    def _validate(self):
        if not (math.isfinite(self.length_m) and self.length_m > 0):
            raise ValueError("length_m must be > 0")
        if not (math.isfinite(self.width_m) and self.width_m > 0):
            raise ValueError("width_m must be > 0")
        for name in ("d_ht_m", "f_lo", "f_hi", "k_tun", "alpha", "beta1_nor", "beta2_nor"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if self.d_ht_m < 0:
            raise ValueError("d_ht_m must be >= 0")
        if not (0 <= self.f_lo <= self.f_hi):
            raise ValueError("need 0 <= f_lo <= f_hi")
        if self.k_tun <= 0:
            raise ValueError("k_tun must be > 0")
        if self.alpha < 0:
            raise ValueError("alpha must be >= 0")
        if self.beta1_nor <= 0 or self.beta2_nor <= 0:
            raise ValueError("normalization factors must be > 0")
        if int(self.k) != self.k or self.k < 1:
            raise ValueError("k must be an integer >= 1")
        object.__setattr__(self, "k", int(self.k))

        n_s = len(self.candidate_sites)
        if self.k > n_s:
            raise ValueError(f"k={self.k} exceeds candidate site count {n_s}")
        if self.ku_lo.shape != (n_s,) or self.ku_hi.shape != (n_s,):
            raise ValueError("ku_lo/ku_hi must have one entry per candidate site")
        if not np.all((self.ku_lo > 0) & (self.ku_lo <= self.ku_hi)):
            raise ValueError("need 0 < ku_lo[i] <= ku_hi[i] for every site")

        for name in ("trees", "candidate_sites", "check_points"):
            pts = getattr(self, name)
            if len(pts) and not (
                np.all(pts[:, 0] >= -GEOM_TOL)
                and np.all(pts[:, 0] <= self.length_m + GEOM_TOL)
                and np.all(pts[:, 1] >= -GEOM_TOL)
                and np.all(pts[:, 1] <= self.width_m + GEOM_TOL)
            ):
                raise ValueError(f"{name} contains points outside the orchard rectangle")

        if len(self.trees) and len(self.candidate_sites):
            d = _pairwise_distances(self.candidate_sites, self.trees)
            if d.min() < self.d_ht_m - GEOM_TOL:
                raise ValueError("a candidate site violates the tree clearance distance")

    @property
    def n_trees(self) -> int:
        return len(self.trees)

    @property
    def n_sites(self) -> int:
        return len(self.candidate_sites)

    @property
    def n_check_points(self) -> int:
        return len(self.check_points)


@dataclass(frozen=True)
class InfluenceMatrix:
    """Dense heat-influence table: rows are candidate sites, columns check points."""

    h: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "h", np.asarray(self.h, dtype=float))
        if self.h.ndim != 2:
            raise ValueError("influence matrix must be 2-D")
        if self.h.size and not (np.all(self.h > 0.0) and np.all(self.h <= 1.0)):
            raise ValueError("influence entries must lie in (0, 1]")


def build_influence_matrix(inst: OrchardInstance) -> InfluenceMatrix:
    """Tabulate influence(site_i, check_point_s) for the whole instance."""
    d = _pairwise_distances(inst.candidate_sites, inst.check_points)
    return InfluenceMatrix(np.exp(-inst.k_tun * d))


@dataclass(frozen=True)
class GridParams:
    """Inputs for regular-grid instance generation.

    Defaults reproduce the 180 m x 120 m reference orchard: 216 trees,
    187 candidate sites, 216 check points, 21 heaters.
    """

    length_m: float = 180.0
    width_m: float = 120.0
    tree_spacing_m: float = 10.0
    site_spacing_m: float = 10.0
    cp_spacing_m: float = 10.0
    k: int = 21
    d_ht_m: float = 3.0
    f_lo: float = 0.5
    f_hi: float = 1.0
    k_tun: float = 0.01
    ku_lo: float = 0.8
    ku_hi: float = 1.0
    alpha: float = 5.0
    beta1_nor: float = 600.0
    beta2_nor: float = 240.0


def _axis_coords(extent: float, spacing: float, inset: float) -> np.ndarray:
    """1-D grid coordinates inset from both ends of [0, extent]."""
    if extent - 2 * inset < -GEOM_TOL:
        return np.empty(0)
    count = int(math.floor((extent - 2 * inset) / spacing + GEOM_TOL)) + 1
    return inset + spacing * np.arange(max(count, 0))


def _grid_points(xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Cartesian product of axis coordinates, x-major then y (row by row)."""
    if len(xs) == 0 or len(ys) == 0:
        return np.empty((0, 2))
    gx, gy = np.meshgrid(xs, ys)
    return np.column_stack([gx.ravel(), gy.ravel()])


def generate_instance(params: GridParams) -> OrchardInstance:
    """Build a regular-grid orchard instance.

    Trees sit on a grid with spacing tree_spacing_m, inset half a spacing
    from the boundary. Candidate sites live on the cell-center lattice of
    the tree grid (offset half a site spacing in both axes, confined to the
    tree grid's hull) and are then filtered to keep the tree clearance
    d_ht_m. Check points get their own boundary-inset grid; with the
    default spacings they coincide with the tree roots.
    """
    L, W = params.length_m, params.width_m
    for name in ("length_m", "width_m", "tree_spacing_m", "site_spacing_m", "cp_spacing_m"):
        v = getattr(params, name)
        if not (math.isfinite(v) and v > 0):
            raise ValueError(f"{name} must be finite and > 0")
    if params.d_ht_m < 0:
        raise ValueError("d_ht_m must be >= 0")

    tree_xs = _axis_coords(L, params.tree_spacing_m, params.tree_spacing_m / 2)
    tree_ys = _axis_coords(W, params.tree_spacing_m, params.tree_spacing_m / 2)
    trees = _grid_points(tree_xs, tree_ys)

    half_t = params.tree_spacing_m / 2
    half_s = params.site_spacing_m / 2
    if len(tree_xs) and len(tree_ys):
        site_xs = _axis_coords(L, params.site_spacing_m, half_t + half_s)
        site_ys = _axis_coords(W, params.site_spacing_m, half_t + half_s)
    else:
        # degenerate orchard with no tree grid: fall back to a boundary-inset grid
        site_xs = _axis_coords(L, params.site_spacing_m, half_s)
        site_ys = _axis_coords(W, params.site_spacing_m, half_s)
    sites = _grid_points(site_xs, site_ys)

    if len(trees) and len(sites):
        dist = _pairwise_distances(sites, trees).min(axis=1)
        sites = sites[dist >= params.d_ht_m - GEOM_TOL]

    if len(sites) == 0:
        raise InfeasibleInstanceError(
            "grid produced zero candidate sites after tree-clearance filtering"
        )
    if params.k > len(sites):
        raise InfeasibleInstanceError(
            f"k={params.k} heaters requested but only {len(sites)} candidate sites survive filtering"
        )

    cp_xs = _axis_coords(L, params.cp_spacing_m, params.cp_spacing_m / 2)
    cp_ys = _axis_coords(W, params.cp_spacing_m, params.cp_spacing_m / 2)
    cps = _grid_points(cp_xs, cp_ys)

    n_s = len(sites)
    return OrchardInstance(
        length_m=L,
        width_m=W,
        trees=trees,
        candidate_sites=sites,
        check_points=cps,
        k=params.k,
        d_ht_m=params.d_ht_m,
        f_lo=params.f_lo,
        f_hi=params.f_hi,
        k_tun=params.k_tun,
        ku_lo=np.full(n_s, params.ku_lo),
        ku_hi=np.full(n_s, params.ku_hi),
        alpha=params.alpha,
        beta1_nor=params.beta1_nor,
        beta2_nor=params.beta2_nor,
    )


# --- JSON instance files -------------------------------------------------

def instance_to_dict(inst: OrchardInstance) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "length_m": float(inst.length_m),
        "width_m": float(inst.width_m),
        "trees": _points_to_lists(inst.trees),
        "candidate_sites": _points_to_lists(inst.candidate_sites),
        "check_points": _points_to_lists(inst.check_points),
        "k": int(inst.k),
        "d_ht_m": float(inst.d_ht_m),
        "f_lo": float(inst.f_lo),
        "f_hi": float(inst.f_hi),
        "k_tun": float(inst.k_tun),
        "ku_lo": [float(v) for v in inst.ku_lo],
        "ku_hi": [float(v) for v in inst.ku_hi],
        "alpha": float(inst.alpha),
        "beta1_nor": float(inst.beta1_nor),
        "beta2_nor": float(inst.beta2_nor),
    }


def instance_from_dict(d: dict) -> OrchardInstance:
    version = d.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ValueError(f"unsupported instance schema_version: {version!r}")
    return OrchardInstance(
        length_m=d["length_m"],
        width_m=d["width_m"],
        trees=np.asarray(d["trees"], dtype=float).reshape(-1, 2),
        candidate_sites=np.asarray(d["candidate_sites"], dtype=float).reshape(-1, 2),
        check_points=np.asarray(d["check_points"], dtype=float).reshape(-1, 2),
        k=d["k"],
        d_ht_m=d["d_ht_m"],
        f_lo=d["f_lo"],
        f_hi=d["f_hi"],
        k_tun=d["k_tun"],
        ku_lo=np.asarray(d["ku_lo"], dtype=float),
        ku_hi=np.asarray(d["ku_hi"], dtype=float),
        alpha=d["alpha"],
        beta1_nor=d["beta1_nor"],
        beta2_nor=d["beta2_nor"],
    )


def canonical_json(d: dict) -> str:
    return json.dumps(d, sort_keys=True, separators=(",", ":"))


def instance_digest(inst: OrchardInstance) -> str:
    """Content hash used to tie plan files to the instance they were built from."""
    payload = canonical_json(instance_to_dict(inst)).encode()
    return "sha256:" + hashlib.sha256(payload).hexdigest()


def save_instance(inst: OrchardInstance, path) -> None:
    Path(path).write_text(json.dumps(instance_to_dict(inst), indent=2) + "\n")


def load_instance(path) -> OrchardInstance:
    return instance_from_dict(json.loads(Path(path).read_text()))


# --- helpers --------------------------------------------------------------

def _as_points(arr, name: str) -> np.ndarray:
    pts = np.asarray(arr, dtype=float)
    if pts.size == 0:
        return pts.reshape(0, 2)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError(f"{name} must be an (n, 2) array of coordinates")
    if not np.all(np.isfinite(pts)):
        raise ValueError(f"{name} contains non-finite coordinates")
    return pts


def _pairwise_distances(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """(len(a), len(b)) matrix of Euclidean distances."""
    diff = a[:, None, :] - b[None, :, :]
    return np.sqrt((diff ** 2).sum(axis=2))


def _points_to_lists(pts: np.ndarray) -> list:
    return [[float(x), float(y)] for x, y in pts]
