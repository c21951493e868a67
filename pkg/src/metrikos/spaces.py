"""Concrete metric spaces and subset predicates.

Five space kinds are supported:

* ``euclidean`` -- R^n with the Euclidean metric;
* ``sup_plane`` -- R^2 with the supremum metric d(x,y) = max_i |x_i - y_i|;
* ``discrete`` -- a finite set {0, ..., m-1} with the 0/1 discrete metric;
* ``sphere`` -- the unit sphere in R^3 with geodesic (great-circle) distance;
* ``grid_l2`` -- functions sampled on a uniform grid with the trapezoid
  approximation of the L^2 norm.

A space descriptor also carries the subset X of the ambient space on which a
coordinate system lives.  Subset membership is an exact predicate: open and
closed boundaries are honored exactly as written in each definition.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import InvalidInputError, ShapeMismatchError

#: clamping tolerance for sphere dot products marginally outside [-1, 1]
SPHERE_CLAMP_TOL = 1e-12

#: unit-norm validation tolerance for sphere points
SPHERE_NORM_TOL = 1e-12


# ---------------------------------------------------------------------------
# subsets


@dataclass(frozen=True)
class Subset:
    """A named membership predicate for the subset X of the ambient space.

    kind is one of:

    * ``all``           -- the whole space;
    * ``half_space``    -- open half space, last coordinate > 0 (the 2-d case
                           is the open half plane; ``half_plane`` is accepted
                           as an alias at construction);
    * ``halfspace``     -- custom open half space  normal . x > offset;
    * ``open_strips``   -- R x ((0,1) u ([2n, 2n+1) u (-2n-2, -2n-1], n >= 1));
    * ``slit_plane``    -- {(x,y) : y > 1 and x != 0} u {(0,-1)};
    * ``sup_slit_boxes``-- {x : d_inf(x,u) < 1/4 or d_inf(x,v) < 1/4} minus
                           the line {s - t = 1}, with u = (1,1), v = (0,-1).
    """

    kind: str = "all"
    normal: tuple = ()
    offset: float = 0.0

    def __post_init__(self):
        kind = self.kind
        if kind == "half_plane":
            object.__setattr__(self, "kind", "half_space")
            kind = "half_space"
        if kind not in ("all", "half_space", "halfspace", "open_strips",
                        "slit_plane", "sup_slit_boxes"):
            raise InvalidInputError(f"unknown subset kind: {self.kind!r}")
        if kind == "halfspace" and len(self.normal) == 0:
            raise InvalidInputError("custom halfspace subset needs a normal")


ALL = Subset("all")


def _strips_member(y: float) -> bool:
    # y-coverage: (0,1), then [2n, 2n+1) above and (-2n-2, -2n-1] below, n >= 1
    if 0.0 < y < 1.0:
        return True
    if y >= 2.0:
        return math.floor(y) % 2 == 0
    if y <= -3.0:
        return math.floor(-y) % 2 == 1
    return False


def _subset_member(subset: Subset, data: np.ndarray) -> bool:
    if subset.kind == "all":
        return True
    if subset.kind == "half_space":
        return float(data[-1]) > 0.0
    if subset.kind == "halfspace":
        n = np.asarray(subset.normal, dtype=float)
        return float(n @ data) > subset.offset
    if subset.kind == "open_strips":
        return _strips_member(float(data[1]))
    if subset.kind == "slit_plane":
        x, y = float(data[0]), float(data[1])
        return (y > 1.0 and x != 0.0) or (x == 0.0 and y == -1.0)
    if subset.kind == "sup_slit_boxes":
        x, y = float(data[0]), float(data[1])
        if x - y == 1.0:
            return False
        near_u = max(abs(x - 1.0), abs(y - 1.0)) < 0.25
        near_v = max(abs(x - 0.0), abs(y + 1.0)) < 0.25
        return near_u or near_v
    raise InvalidInputError(f"unknown subset kind: {subset.kind!r}")


# ---------------------------------------------------------------------------
# space descriptors and points


@dataclass(frozen=True)
class SpaceDescriptor:
    """Descriptor of a concrete metric space plus its subset X.

    Use the module-level constructors (euclidean, sup_metric_plane,
    discrete_space, sphere_geodesic, grid_function_space) instead of
    instantiating directly.
    """

    kind: str
    dim: int
    subset: Subset = ALL
    grid: np.ndarray = None
    weights: np.ndarray = None

    @property
    def tag(self) -> str:
        return f"{self.kind}:{self.dim}"

    @property
    def is_continuous(self) -> bool:
        return self.kind != "discrete"


@dataclass(frozen=True)
class SpacePoint:
    """A tagged point of a concrete space.

    data is a float vector (ambient coordinates or grid samples) or an int
    index for the discrete space.
    """

    space_tag: str
    data: Union[np.ndarray, int]

    def __repr__(self):
        return f"SpacePoint({self.space_tag}, {self.data!r})"


def euclidean(n: int, subset: Subset = ALL) -> SpaceDescriptor:
    """R^n with the Euclidean metric; n >= 1."""
    if n < 1:
        raise InvalidInputError(f"euclidean dimension must be >= 1, got {n}")
    return SpaceDescriptor(kind="euclidean", dim=int(n), subset=subset)


def sup_metric_plane(subset: Subset = ALL) -> SpaceDescriptor:
    """R^2 with the supremum metric max(|dx|, |dy|)."""
    return SpaceDescriptor(kind="sup_plane", dim=2, subset=subset)


def discrete_space(point_count: int) -> SpaceDescriptor:
    """{0, ..., point_count-1} with the discrete metric (1 if x != y)."""
    if point_count < 1:
        raise InvalidInputError("discrete space needs at least one point")
    return SpaceDescriptor(kind="discrete", dim=int(point_count))


def sphere_geodesic(subset: Subset = ALL) -> SpaceDescriptor:
    """Unit sphere S^2 in R^3 with great-circle distance arccos(x . y)."""
    return SpaceDescriptor(kind="sphere", dim=3, subset=subset)


def grid_function_space(lo: float, hi: float, cells: int) -> SpaceDescriptor:
    """Functions sampled on a uniform grid over [lo, hi] with ``cells`` cells.

    The metric is the trapezoid-rule approximation of the L^2 norm of the
    difference; grid nodes are the cells+1 equally spaced points and the
    quadrature weights are h * (1/2, 1, ..., 1, 1/2).
    """
    if not hi > lo:
        raise InvalidInputError("grid interval must have hi > lo")
    if cells < 1:
        raise InvalidInputError("grid needs at least one cell")
    grid = np.linspace(lo, hi, cells + 1)
    h = (hi - lo) / cells
    weights = np.full(cells + 1, h)
    weights[0] = weights[-1] = h / 2.0
    grid.flags.writeable = False
    weights.flags.writeable = False
    return SpaceDescriptor(kind="grid_l2", dim=cells + 1, grid=grid,
                           weights=weights)


def point(space: SpaceDescriptor, data) -> SpacePoint:
    """Build a shape-validated SpacePoint of the given space."""
    if space.kind == "discrete":
        idx = int(data)
        if not 0 <= idx < space.dim:
            raise ShapeMismatchError(
                f"discrete index {idx} outside 0..{space.dim - 1}")
        return SpacePoint(space.tag, idx)
    arr = np.array(data, dtype=float)
    if arr.shape != (space.dim,):
        raise ShapeMismatchError(
            f"{space.tag} expects shape ({space.dim},), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError("point data must be finite")
    if space.kind == "sphere":
        norm = float(np.linalg.norm(arr))
        if abs(norm - 1.0) > SPHERE_NORM_TOL:
            raise InvalidInputError(
                f"sphere point must have unit norm within {SPHERE_NORM_TOL}, "
                f"got |x| = {norm!r}")
    arr.flags.writeable = False
    return SpacePoint(space.tag, arr)


def as_data(space: SpaceDescriptor, x: SpacePoint):
    """Return validated raw data of x, checking the space tag."""
    if x.space_tag != space.tag:
        raise ShapeMismatchError(
            f"point tagged {x.space_tag} used in space {space.tag}")
    return x.data


# ---------------------------------------------------------------------------
# metric and membership


def distance(space: SpaceDescriptor, x: SpacePoint, y: SpacePoint) -> float:
    """Distance between two points of the space.

    Symmetric, nonnegative, zero iff equal (within roundoff for the
    continuous spaces).  Sphere distance is arccos of the clamped dot
    product and lies in [0, pi].
    """
    xd = as_data(space, x)
    yd = as_data(space, y)
    if space.kind == "euclidean":
        return float(np.linalg.norm(xd - yd))
    if space.kind == "sup_plane":
        return float(np.max(np.abs(xd - yd)))
    if space.kind == "discrete":
        return 0.0 if xd == yd else 1.0
    if space.kind == "sphere":
        dot = float(np.dot(xd, yd))
        if dot > 1.0 + SPHERE_CLAMP_TOL or dot < -1.0 - SPHERE_CLAMP_TOL:
            raise InvalidInputError(f"sphere dot product {dot} far outside [-1, 1]")
        return float(np.arccos(min(1.0, max(-1.0, dot))))
    if space.kind == "grid_l2":
        diff = xd - yd
        return float(np.sqrt(np.sum(space.weights * diff * diff)))
    raise InvalidInputError(f"unknown space kind {space.kind!r}")


def distances_to_many(space: SpaceDescriptor, stacked, x: SpacePoint) -> np.ndarray:
    """Distances from x to each row of a pre-stacked point collection.

    ``stacked`` is the output of stack_points; used by the core module to
    vectorize coordinate extraction over the coordinatizing set.
    """
    xd = as_data(space, x)
    if space.kind == "euclidean":
        return np.linalg.norm(stacked - xd, axis=1)
    if space.kind == "sup_plane":
        return np.max(np.abs(stacked - xd), axis=1)
    if space.kind == "discrete":
        return (stacked != xd).astype(float)
    if space.kind == "sphere":
        dots = np.clip(stacked @ xd, -1.0, 1.0)
        return np.arccos(dots)
    if space.kind == "grid_l2":
        diff = stacked - xd
        return np.sqrt((diff * diff) @ space.weights)
    raise InvalidInputError(f"unknown space kind {space.kind!r}")


def stack_points(space: SpaceDescriptor, points) -> np.ndarray:
    """Stack a list of SpacePoints into an array for distances_to_many."""
    if space.kind == "discrete":
        return np.array([as_data(space, p) for p in points])
    return np.array([as_data(space, p) for p in points], dtype=float)


def member(space: SpaceDescriptor, x: SpacePoint) -> bool:
    """Exact membership of x in the subset X of the space."""
    xd = as_data(space, x)
    if space.kind == "discrete":
        return True
    return _subset_member(space.subset, xd)


# ---------------------------------------------------------------------------
# grid-function helpers


def grid_indicator(space: SpaceDescriptor, t: float) -> SpacePoint:
    """The indicator of [t, t+1] as a grid function, by exact cell coverage.

    Node i carries the fraction of the cell [x_i - h/2, x_i + h/2] covered by
    [t, t+1], so the function of t is piecewise linear in every node value
    and the quadrature distance to a fixed function varies smoothly between
    cell-boundary crossings.
    """
    if space.kind != "grid_l2":
        raise InvalidInputError("grid_indicator needs a grid_l2 space")
    grid = space.grid
    h = grid[1] - grid[0]
    left = np.maximum(t, grid - h / 2.0)
    right = np.minimum(t + 1.0, grid + h / 2.0)
    values = np.clip(right - left, 0.0, None) / h
    return point(space, values)


def grid_hat(space: SpaceDescriptor, center: float, halfwidth: float) -> SpacePoint:
    """Continuous hat function: 1 at center, 0 outside [center +- halfwidth]."""
    if space.kind != "grid_l2":
        raise InvalidInputError("grid_hat needs a grid_l2 space")
    values = np.clip(1.0 - np.abs(space.grid - center) / halfwidth, 0.0, None)
    return point(space, values)


def grid_eval(space: SpaceDescriptor, f: SpacePoint, t: float) -> float:
    """Evaluate a grid function at t by linear interpolation between nodes."""
    if space.kind != "grid_l2":
        raise InvalidInputError("grid_eval needs a grid_l2 space")
    return float(np.interp(t, space.grid, as_data(space, f)))
