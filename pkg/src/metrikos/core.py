"""Core coordinate-system types and operations.

A coordinate system is the tuple (M, d, X, C): a concrete space M with metric
d, a subset X given by a membership predicate, and a finite ordered list C of
coordinatizing points.  The metric coordinates of a point x are the distances
x_c = d(x, c), one per c in C.

This module provides coordinate extraction, the pseudo-metric
d_C(x, y) = sup_c |x_c - y_c|, the shifted embedding
i(x)_c = x_c - d(c, w) into bounded C-tuples with the sup norm, feasibility
checking against the triangle inequalities, and sampled diagnostics for
whether C actually separates points.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import spaces
from .errors import InvalidInputError
from .spaces import SpaceDescriptor, SpacePoint

#: default tolerance for "C distinguishes these two points"
DISTINGUISH_TOL = 1e-9

#: slack below which a feasibility inequality counts as violated
FEASIBILITY_TOL = 1e-9


@dataclass
class CoordinateSystem:
    """The tuple (M, d, X, C) plus a base point w for the embedding shift.

    coords is the ordered, duplicate-free list C; labels (optional) name the
    coordinates for display and for the scenario expression language.
    membership defaults to the space's subset predicate.
    """

    space: SpaceDescriptor
    coords: tuple
    base_point: SpacePoint
    labels: tuple = ()
    membership: Optional[Callable[[SpacePoint], bool]] = None

    def __post_init__(self):
        self.coords = tuple(self.coords)
        if not self.coords:
            raise InvalidInputError("coordinatizing set C must be nonempty")
        for c in self.coords:
            spaces.as_data(self.space, c)
        if self.labels:
            self.labels = tuple(self.labels)
            if len(self.labels) != len(self.coords):
                raise InvalidInputError("labels must match C in length")
        else:
            self.labels = tuple(f"c{i}" for i in range(len(self.coords)))
        self._stacked = spaces.stack_points(self.space, self.coords)
        n = len(self.coords)
        pair = np.zeros((n, n))
        for i in range(n):
            di = spaces.distances_to_many(self.space, self._stacked,
                                          self.coords[i])
            pair[i, :] = di
        self.pair_dist = pair
        for i in range(n):
            for j in range(i + 1, n):
                if pair[i, j] == 0.0:
                    raise InvalidInputError(
                        f"C contains duplicate points at indices {i}, {j}")
        if not self.member(self.base_point):
            raise InvalidInputError("base_point must satisfy the membership predicate")

    def member(self, x: SpacePoint) -> bool:
        if self.membership is not None:
            return self.membership(x)
        return spaces.member(self.space, x)

    def __len__(self):
        return len(self.coords)


@dataclass(frozen=True)
class MetricCoords:
    """Distance tuple (d(x, c))_{c in C}, indexed parallel to system.coords."""

    values: np.ndarray

    def __post_init__(self):
        arr = np.array(self.values, dtype=float)
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)

    def __len__(self):
        return len(self.values)

    def __getitem__(self, k):
        return float(self.values[k])


@dataclass(frozen=True)
class EmbeddedPoint:
    """Shifted coordinate tuple i(x)_c = x_c - d(c, w), sup-norm bounded."""

    values: np.ndarray

    def __post_init__(self):
        arr = np.array(self.values, dtype=float)
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)

    def __len__(self):
        return len(self.values)


@dataclass(frozen=True)
class Violation:
    """One violated feasibility inequality.

    inequality is one of "nonneg" (x_c >= 0), "diff_upper"
    (|x_a - x_b| <= d(a,b)) or "sum_lower" (x_a + x_b >= d(a,b)); indices
    holds the one or two coordinate indices involved; slack is the amount by
    which the inequality holds (negative = violated).
    """

    indices: tuple
    inequality: str
    slack: float


@dataclass(frozen=True)
class FeasibilityReport:
    feasible: bool
    violations: tuple

    def __bool__(self):
        return self.feasible


def coords_of(system: CoordinateSystem, x: SpacePoint,
              warn_nonmember: bool = True) -> MetricCoords:
    """Metric coordinates of x: values[k] = d(x, C[k]).

    Points outside X are coordinatized anyway (several constructions
    deliberately evaluate distances of ambient points); a warning is emitted
    unless warn_nonmember is False.
    """
    if warn_nonmember and not system.member(x):
        warnings.warn("coordinatizing a point outside X", stacklevel=2)
    values = spaces.distances_to_many(system.space, system._stacked, x)
    return MetricCoords(values)


def d_C(system: CoordinateSystem, x: SpacePoint, y: SpacePoint) -> float:
    """Pseudo-metric d_C(x, y) = max_k |x_k - y_k|; always <= d(x, y)."""
    cx = spaces.distances_to_many(system.space, system._stacked, x)
    cy = spaces.distances_to_many(system.space, system._stacked, y)
    return float(np.max(np.abs(cx - cy)))


def coord_gap(u: MetricCoords, v: MetricCoords) -> float:
    """Sup gap between two coordinate tuples (d_C evaluated on tuples)."""
    if len(u) != len(v):
        raise InvalidInputError("coordinate tuples of different length")
    return float(np.max(np.abs(u.values - v.values)))


def base_offsets(system: CoordinateSystem) -> np.ndarray:
    """The shift vector (d(c, w))_{c in C} used by the embedding."""
    return spaces.distances_to_many(system.space, system._stacked,
                                    system.base_point)


def embed(system: CoordinateSystem, x: SpacePoint) -> EmbeddedPoint:
    """Embedding i(x)_c = x_c - d(c, w); an isometry from (X, d_C).

    Entries are bounded in magnitude by d(x, w), and for any pair
    ||i(x) - i(y)||_inf = d_C(x, y) exactly (up to roundoff).
    """
    values = spaces.distances_to_many(system.space, system._stacked, x)
    return EmbeddedPoint(values - base_offsets(system))


def embed_coords(system: CoordinateSystem, coords: MetricCoords) -> EmbeddedPoint:
    """Embed an already-extracted coordinate tuple."""
    return EmbeddedPoint(coords.values - base_offsets(system))


def unembed(system: CoordinateSystem, w: EmbeddedPoint) -> MetricCoords:
    """Invert embed_coords: coordinate tuple equal to w + (d(c, base))_c."""
    return MetricCoords(np.asarray(w.values) + base_offsets(system))


def check_feasible(system: CoordinateSystem, coords: MetricCoords,
                   tol: float = FEASIBILITY_TOL) -> FeasibilityReport:
    """Check the triangle-inequality conditions a genuine point must satisfy.

    For every coordinate and every pair (a, b) of coordinatizing points:

        x_c >= 0                      ("nonneg")
        |x_a - x_b| <= d(a, b)        ("diff_upper")
        x_a + x_b >= d(a, b)          ("sum_lower")

    A violation is recorded when the slack falls below -tol.  The report
    lists every violated instance with its slack.
    """
    v = np.asarray(coords.values, dtype=float)
    n = len(system)
    if len(v) != n:
        raise InvalidInputError(
            f"coords length {len(v)} does not match |C| = {n}")
    violations = []
    for k in range(n):
        slack = v[k]
        if slack < -tol:
            violations.append(Violation((k,), "nonneg", float(slack)))
    for i in range(n):
        for j in range(i + 1, n):
            dij = system.pair_dist[i, j]
            slack = dij - abs(v[i] - v[j])
            if slack < -tol:
                violations.append(Violation((i, j), "diff_upper", float(slack)))
            slack = v[i] + v[j] - dij
            if slack < -tol:
                violations.append(Violation((i, j), "sum_lower", float(slack)))
    return FeasibilityReport(feasible=not violations,
                             violations=tuple(violations))


@dataclass(frozen=True)
class Witness:
    """A sampled pair that d separates but d_C does not."""

    i: int
    j: int
    d: float
    d_C: float


@dataclass(frozen=True)
class CoordinatizationReport:
    """Outcome of the sampled coordinatization check.

    witnesses lists sample index pairs (x, y) with d(x, y) > tol but
    d_C(x, y) <= tol.  An empty list means "no counterexample found among
    the samples", never a proof that C coordinatizes X.
    """

    witnesses: tuple
    sample_count: int
    tol: float

    def __bool__(self):
        return not self.witnesses


def verify_coordinatizing(system: CoordinateSystem, samples,
                          tol: float = DISTINGUISH_TOL) -> CoordinatizationReport:
    """Search sample pairs for coordinatization failures.

    Returns all pairs that are far apart in d but indistinguishable through
    the coordinates of C (both compared against tol).
    """
    samples = list(samples)
    if len(samples) < 2:
        raise InvalidInputError("need at least 2 samples")
    coord_rows = np.array([
        spaces.distances_to_many(system.space, system._stacked, s)
        for s in samples])
    witnesses = []
    for i in range(len(samples)):
        for j in range(i + 1, len(samples)):
            gap_c = float(np.max(np.abs(coord_rows[i] - coord_rows[j])))
            if gap_c > tol:
                continue
            dij = spaces.distance(system.space, samples[i], samples[j])
            if dij > tol:
                witnesses.append(Witness(i, j, dij, gap_c))
    return CoordinatizationReport(witnesses=tuple(witnesses),
                                  sample_count=len(samples), tol=tol)


def redundant_point_check(system: CoordinateSystem, drop_index: int,
                          samples, tol: float = DISTINGUISH_TOL) -> CoordinatizationReport:
    """verify_coordinatizing with C[drop_index] removed."""
    n = len(system)
    if not 0 <= drop_index < n:
        raise InvalidInputError(f"drop_index {drop_index} out of range 0..{n - 1}")
    if n < 2:
        raise InvalidInputError("C must have at least 2 points to drop one")
    reduced = CoordinateSystem(
        space=system.space,
        coords=tuple(c for k, c in enumerate(system.coords) if k != drop_index),
        base_point=system.base_point,
        labels=tuple(l for k, l in enumerate(system.labels) if k != drop_index),
        membership=system.membership)
    return verify_coordinatizing(reduced, samples, tol)


@dataclass(frozen=True)
class ConvergenceReport:
    """Gap sequences of a candidate limit under both metics.

    dC_gaps[k] = d_C(sequence[k], candidate); d_gaps[k] = d(sequence[k],
    candidate).  The caller asserts co-convergence or divergence; this
    report only measures.
    """

    dC_gaps: np.ndarray
    d_gaps: np.ndarray


def compare_convergence(system: CoordinateSystem, sequence,
                        candidate_limit: SpacePoint) -> ConvergenceReport:
    """Measure both gap sequences of a sequence against a candidate limit."""
    sequence = list(sequence)
    if not sequence:
        raise InvalidInputError("sequence must be nonempty")
    dC_gaps = np.array([d_C(system, s, candidate_limit) for s in sequence])
    d_gaps = np.array([
        spaces.distance(system.space, s, candidate_limit) for s in sequence])
    return ConvergenceReport(dC_gaps=dC_gaps, d_gaps=d_gaps)


def as_vector(w) -> np.ndarray:
    """Raw float vector of an EmbeddedPoint, MetricCoords, or array-like."""
    if isinstance(w, (EmbeddedPoint, MetricCoords)):
        return np.asarray(w.values, dtype=float)
    return np.asarray(w, dtype=float)


# ---------------------------------------------------------------------------
# sampling helpers


def sample_box_points(system: CoordinateSystem, count: int, seed: int,
                      lo, hi, require_member: bool = True):
    """Draw points uniformly from a box, rejecting non-members of X.

    lo and hi are per-dimension bounds.  Raises if rejection sampling cannot
    find enough members within a generous budget.
    """
    if system.space.kind == "discrete":
        raise InvalidInputError("box sampling needs a continuous space")
    rng = np.random.default_rng(seed)
    lo = np.broadcast_to(np.asarray(lo, dtype=float), (system.space.dim,))
    hi = np.broadcast_to(np.asarray(hi, dtype=float), (system.space.dim,))
    out = []
    budget = 1000 * count
    while len(out) < count and budget > 0:
        budget -= 1
        data = rng.uniform(lo, hi)
        if system.space.kind == "sphere":
            norm = np.linalg.norm(data)
            if norm == 0.0:
                continue
            data = data / norm
        p = spaces.point(system.space, data)
        if require_member and not system.member(p):
            continue
        out.append(p)
    if len(out) < count:
        raise InvalidInputError("sampling budget exhausted inside the box")
    return out


def sample_feasible_coords(system: CoordinateSystem, count: int, seed: int,
                           lo=None, hi=None):
    """Coordinate tuples of random genuine points (hence always feasible).

    The default box is the bounding box of C inflated by one diameter on
    each side (clipped to the subset via rejection).
    """
    if lo is None or hi is None:
        stacked = np.asarray(system._stacked, dtype=float)
        cmin = stacked.min(axis=0)
        cmax = stacked.max(axis=0)
        diam = float(np.max(cmax - cmin))
        if diam == 0.0:
            diam = 1.0
        lo = cmin - diam if lo is None else lo
        hi = cmax + diam if hi is None else hi
    pts = sample_box_points(system, count, seed, lo, hi)
    return [coords_of(system, p) for p in pts]
