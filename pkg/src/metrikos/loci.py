"""Geometric loci written directly in metric coordinates.

Each locus is a residual equation in one or two coordinates: sphere
x_a = r, ellipsoid x_a + x_b = r, hyperboloid |x_a - x_b| = r, an infinite
cylinder through Heron's area formula, an infinite (half) cone through the
law of cosines, and the plane / segment / ray / line loci the same pair of
points induces.  The ray and line equations carry a sign ambiguity; the
residual takes the branch with the smallest magnitude and membership can
report which branch matched.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import core, spaces
from .core import CoordinateSystem, MetricCoords
from .errors import (EmptyLocusError, InfeasibleCoordsError,
                     InvalidInputError)
from .spaces import SpacePoint

KINDS = ("sphere", "ellipsoid", "hyperboloid", "cylinder", "cone", "plane",
         "segment", "ray", "line")

#: residual target for sampled locus points
SAMPLE_RESIDUAL_TOL = 1e-8

#: Heron radicand below this is an infeasible coordinate triple, not roundoff
HERON_RADICAND_TOL = -1e-12


@dataclass(frozen=True)
class Locus:
    """A locus specification: kind, indices into C, and a parameter.

    r is the radius (sphere), distance sum (ellipsoid), distance difference
    (hyperboloid), or Heron area value (cylinder: the axis-distance radius is
    2 r / d(a,b)).  theta is the cone half-angle at the vertex C[i], in
    radians.  plane/segment/ray/line take no parameter.
    """

    kind: str
    i: int
    j: Optional[int] = None
    r: Optional[float] = None
    theta: Optional[float] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidInputError(f"unknown locus kind {self.kind!r}")
        needs_j = self.kind != "sphere"
        if needs_j and self.j is None:
            raise InvalidInputError(f"{self.kind} locus needs two indices")
        if self.kind in ("sphere", "ellipsoid", "hyperboloid", "cylinder") \
                and self.r is None:
            raise InvalidInputError(f"{self.kind} locus needs parameter r")
        if self.kind == "cone" and self.theta is None:
            raise InvalidInputError("cone locus needs parameter theta")


def validate_locus(locus: Locus, system: CoordinateSystem) -> None:
    """Check index ranges and the parameter range invariants against C.

    Out-of-range parameters (empty or degenerate loci) raise EmptyLocusError
    before any computation.
    """
    n = len(system)
    idx = (locus.i,) if locus.kind == "sphere" else (locus.i, locus.j)
    for k in idx:
        if not 0 <= k < n:
            raise InvalidInputError(f"locus index {k} outside 0..{n - 1}")
    if locus.kind != "sphere" and locus.i == locus.j:
        raise InvalidInputError("locus needs two distinct points of C")
    if locus.kind == "sphere" and locus.r < 0.0:
        raise EmptyLocusError(f"sphere radius must be >= 0, got {locus.r}")
    if locus.kind in ("ellipsoid", "hyperboloid", "cylinder"):
        d = float(system.pair_dist[locus.i, locus.j])
        if locus.kind == "ellipsoid" and locus.r < d:
            raise EmptyLocusError(
                f"ellipsoid needs r >= d(a,b) = {d}, got {locus.r}")
        if locus.kind == "hyperboloid" and not 0.0 < locus.r < d:
            raise EmptyLocusError(
                f"hyperboloid needs 0 < r < d(a,b) = {d}, got {locus.r}")
        if locus.kind == "cylinder" and locus.r < 0.0:
            raise EmptyLocusError(
                f"cylinder area parameter must be >= 0, got {locus.r}")
    if locus.kind == "cone" and not 0.0 < locus.theta < math.pi:
        raise EmptyLocusError(
            f"cone needs 0 < theta < pi, got {locus.theta}")


def _heron(xa: float, xb: float, d: float) -> float:
    s = (xa + xb + d) / 2.0
    radicand = s * (s - xa) * (s - xb) * (s - d)
    if radicand < HERON_RADICAND_TOL:
        raise InfeasibleCoordsError(
            f"Heron radicand {radicand} is negative: the coordinate pair "
            "violates the triangle inequalities")
    return math.sqrt(max(radicand, 0.0))


def _residual_and_grad(locus: Locus, v: np.ndarray,
                       system: CoordinateSystem):
    """Residual value, matched branch name, and gradient w.r.t. coords.

    The gradient is a full-length vector with nonzero entries only at the
    locus indices; used by the Newton projection in sample_locus.
    """
    grad = np.zeros(len(v))
    i = locus.i
    if locus.kind == "sphere":
        grad[i] = 1.0
        return v[i] - locus.r, None, grad
    j = locus.j
    d = float(system.pair_dist[i, j])
    xa, xb = float(v[i]), float(v[j])
    if locus.kind == "ellipsoid":
        grad[i] = grad[j] = 1.0
        return xa + xb - locus.r, None, grad
    if locus.kind == "hyperboloid":
        sign = 1.0 if xa >= xb else -1.0
        grad[i], grad[j] = sign, -sign
        return abs(xa - xb) - locus.r, None, grad
    if locus.kind == "cylinder":
        h = _heron(xa, xb, d)
        s = (xa + xb + d) / 2.0
        u, w, z = s - xa, s - xb, s - d
        dp_da = 0.5 * (u * w * z - s * w * z + s * u * z + s * u * w)
        dp_db = 0.5 * (u * w * z + s * w * z - s * u * z + s * u * w)
        if h > 0.0:
            grad[i] = dp_da / (2.0 * h)
            grad[j] = dp_db / (2.0 * h)
        return h - locus.r, None, grad
    if locus.kind == "cone":
        grad[i] = -2.0 * xa + 2.0 * d * math.cos(locus.theta)
        grad[j] = 2.0 * xb
        return xb * xb - d * d - xa * xa + 2.0 * xa * d * math.cos(locus.theta), None, grad
    if locus.kind == "plane":
        grad[i], grad[j] = 1.0, -1.0
        return xa - xb, None, grad
    if locus.kind == "segment":
        grad[i], grad[j] = 1.0, 1.0
        return xa + xb - d, None, grad
    if locus.kind == "ray":
        # the ray from C[i] through C[j]: the segment branch x_a + x_b = d
        # plus the beyond-C[j] branch x_a - x_b = d
        r_sum = xa + xb - d
        r_diff = xa - xb - d
        if abs(r_sum) <= abs(r_diff):
            grad[i], grad[j] = 1.0, 1.0
            return r_sum, "sum", grad
        grad[i], grad[j] = 1.0, -1.0
        return r_diff, "diff", grad
    if locus.kind == "line":
        r_sum = xa + xb - d
        r_diff = abs(xa - xb) - d
        if abs(r_sum) <= abs(r_diff):
            grad[i], grad[j] = 1.0, 1.0
            return r_sum, "sum", grad
        sign = 1.0 if xa >= xb else -1.0
        grad[i], grad[j] = sign, -sign
        return r_diff, "diff", grad
    raise InvalidInputError(f"unknown locus kind {locus.kind!r}")


def locus_residual(locus: Locus, coords: MetricCoords,
                   system: CoordinateSystem) -> float:
    """Signed residual of the locus equation at the given coordinates."""
    validate_locus(locus, system)
    value, _, _ = _residual_and_grad(locus, np.asarray(coords.values), system)
    return float(value)


def locus_membership(locus: Locus, coords: MetricCoords,
                     system: CoordinateSystem, tol: float) -> bool:
    """|residual| <= tol."""
    return abs(locus_residual(locus, coords, system)) <= tol


def matched_branch(locus: Locus, coords: MetricCoords,
                   system: CoordinateSystem) -> Optional[str]:
    """For ray and line loci: which sign branch the residual used.

    "sum" is the x_a + x_b branch (segment part), "diff" the x_a - x_b
    branch.  None for single-equation loci.
    """
    validate_locus(locus, system)
    _, branch, _ = _residual_and_grad(locus, np.asarray(coords.values), system)
    return branch


def residual_gradient(locus: Locus, coords: MetricCoords,
                      system: CoordinateSystem) -> np.ndarray:
    """Gradient of the residual with respect to the coordinate vector."""
    validate_locus(locus, system)
    _, _, grad = _residual_and_grad(locus, np.asarray(coords.values), system)
    return grad


def default_sampling_box(system: CoordinateSystem):
    """Bounding box of C inflated by 3x its diameter on every side."""
    stacked = np.asarray(system._stacked, dtype=float)
    cmin = stacked.min(axis=0)
    cmax = stacked.max(axis=0)
    diam = float(np.max(cmax - cmin))
    if diam == 0.0:
        diam = 1.0
    return cmin - 3.0 * diam, cmax + 3.0 * diam


def sample_locus(locus: Locus, system: CoordinateSystem, count: int,
                 seed: int, box=None) -> list:
    """Random members of X on the locus, |residual| <= 1e-8 each.

    Random seeds in the sampling box are projected onto the locus by Newton
    steps along the ambient residual gradient; projections landing outside
    X are discarded.  Supported on euclidean and sphere spaces.  Raises
    EmptyLocusError when the budget runs out without finding a single point.
    """
    validate_locus(locus, system)
    kind = system.space.kind
    if kind not in ("euclidean", "sphere"):
        raise InvalidInputError(
            f"locus sampling supports euclidean and sphere spaces, not {kind}")
    if count < 1:
        raise InvalidInputError("count must be >= 1")
    rng = np.random.default_rng(seed)
    if box is None:
        lo, hi = default_sampling_box(system)
    else:
        lo, hi = (np.asarray(b, dtype=float) for b in box)
    stacked = system._stacked
    out = []
    attempts = 200 * count
    while len(out) < count and attempts > 0:
        attempts -= 1
        if kind == "sphere":
            x = rng.normal(size=3)
            x = x / np.linalg.norm(x)
        else:
            x = rng.uniform(lo, hi)
        ok = False
        for _ in range(80):
            dists = _dists(system, x)
            value, _, gc = _residual_and_grad(locus, dists, system)
            if abs(value) <= SAMPLE_RESIDUAL_TOL:
                ok = True
                break
            g = _ambient_gradient(system, x, dists, gc)
            gg = float(g @ g)
            if gg < 1e-18:
                break
            x = x - (value / gg) * g
            if kind == "sphere":
                norm = np.linalg.norm(x)
                if norm == 0.0:
                    break
                x = x / norm
        if ok:
            p = spaces.point(system.space, x)
            if system.member(p):
                out.append(p)
    if not out:
        raise EmptyLocusError(
            f"found no point of the {locus.kind} locus within the budget")
    if len(out) < count:
        raise EmptyLocusError(
            f"found only {len(out)} of {count} requested locus points")
    return out


def _dists(system: CoordinateSystem, x: np.ndarray) -> np.ndarray:
    if system.space.kind == "euclidean":
        return np.linalg.norm(system._stacked - x, axis=1)
    return np.arccos(np.clip(system._stacked @ x, -1.0, 1.0))


def _ambient_gradient(system: CoordinateSystem, x: np.ndarray,
                      dists: np.ndarray, coord_grad: np.ndarray) -> np.ndarray:
    """Chain rule: gradient of the residual with respect to ambient x."""
    g = np.zeros_like(x)
    for k in np.nonzero(coord_grad)[0]:
        if system.space.kind == "euclidean":
            if dists[k] == 0.0:
                continue
            g += coord_grad[k] * (x - system._stacked[k]) / dists[k]
        else:
            dot = float(np.clip(system._stacked[k] @ x, -1.0, 1.0))
            sin = math.sqrt(max(1.0 - dot * dot, 0.0))
            if sin < 1e-12:
                continue
            row = -system._stacked[k] / sin
            g += coord_grad[k] * (row - (row @ x) * x)
    return g
