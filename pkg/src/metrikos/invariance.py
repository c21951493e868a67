"""Tangency residuals and positive-invariance testing for sets in R^C.

Sets live in the coordinate-tuple space with the sup norm.  Because the
embedding shift is a sup-norm isometry, callers may work either with raw
coordinate tuples or with embedded (base-shifted) tuples, as long as set
and query points use the same representation.

Two set representations are supported: a finite sampled cloud (distance is
exact over the cloud, resolution is the sampling gap and dominates the
error), and an implicit residual function (distance is calibrated from the
residual, by default |residual| / sup-norm of its gradient).

The tangency residual of a field V at w is
(d(w + h V(w), S) - d(w, S)) / h; its limsup as h -> 0 being bounded by
K d(w, S) at every point forces solutions starting in S to stay in S.
"""

from __future__ import annotations

from dataclasses import dataclass, field as _field
from typing import Callable, Optional

import numpy as np
from scipy.spatial import cKDTree

from . import core
from .errors import InvalidInputError
from .fields import Trajectory

#: default step ladder for residual extrapolation
NAGUMO_H_SEQ = (1e-2, 5e-3, 2e-3, 1e-3, 5e-4, 2e-4, 1e-4)

#: default slack for the tangency bound test
NAGUMO_TOL = 0.05

#: finite-difference step for numerical residual gradients
GRAD_STEP = 1e-6


@dataclass
class CoordSet:
    """A closed subset of R^C, sampled or implicit.

    * sampled: ``cloud`` is an (m, n) array of member points; set_distance
      is the exact sup-norm distance to the cloud and ``resolution`` should
      state the sampling gap (it is reported with every check).
    * implicit: ``residual_fn`` maps a vector to a residual vanishing
      exactly on the set.  Distance is |residual| * calibration when a
      calibration factor is given, else |residual| / sup-norm of the
      gradient (grad_fn if supplied, else central differences).  An
      attached cloud, if any, caps the estimate from above.
    """

    kind: str
    cloud: Optional[np.ndarray] = None
    residual_fn: Optional[Callable] = None
    grad_fn: Optional[Callable] = None
    calibration: Optional[float] = None
    resolution: float = 0.0
    _tree: object = _field(default=None, repr=False)

    def __post_init__(self):
        if self.kind not in ("sampled", "implicit"):
            raise InvalidInputError(f"unknown set kind {self.kind!r}")
        if self.cloud is not None:
            arr = np.asarray(self.cloud, dtype=float)
            if arr.ndim != 2 or len(arr) == 0:
                raise InvalidInputError("cloud must be a nonempty (m, n) array")
            self.cloud = arr
            self._tree = cKDTree(arr)
        if self.kind == "sampled" and self.cloud is None:
            raise InvalidInputError("sampled set needs a cloud")
        if self.kind == "implicit" and self.residual_fn is None:
            raise InvalidInputError("implicit set needs a residual function")


def sampled_set(cloud, resolution: float = 0.0) -> CoordSet:
    return CoordSet(kind="sampled", cloud=np.asarray(cloud, dtype=float),
                    resolution=resolution)


def implicit_set(residual_fn: Callable, grad_fn: Callable = None,
                 calibration: float = None, cloud=None,
                 resolution: float = 0.0) -> CoordSet:
    return CoordSet(kind="implicit", residual_fn=residual_fn, grad_fn=grad_fn,
                    calibration=calibration,
                    cloud=None if cloud is None else np.asarray(cloud, float),
                    resolution=resolution)


def _numeric_grad(fn: Callable, w: np.ndarray) -> np.ndarray:
    g = np.empty(len(w))
    for k in range(len(w)):
        e = np.zeros(len(w))
        e[k] = GRAD_STEP
        g[k] = (fn(w + e) - fn(w - e)) / (2.0 * GRAD_STEP)
    return g


def set_distance(S: CoordSet, w) -> float:
    """Sup-norm distance from w to S (estimated for implicit sets)."""
    wv = core.as_vector(w)
    cloud_dist = None
    if S._tree is not None:
        cloud_dist, _ = S._tree.query(wv, p=np.inf)
        cloud_dist = float(cloud_dist)
    if S.kind == "sampled":
        return cloud_dist
    res = float(S.residual_fn(wv))
    if S.calibration is not None:
        est = abs(res) * S.calibration
    elif res == 0.0:
        est = 0.0
    else:
        g = S.grad_fn(wv) if S.grad_fn is not None else _numeric_grad(
            S.residual_fn, wv)
        denom = float(np.max(np.abs(g)))
        if denom < 1e-12:
            # flat spot: fall back on the raw residual magnitude
            est = abs(res)
        else:
            est = abs(res) / denom
    if cloud_dist is not None:
        est = min(est, cloud_dist)
    return est


def nagumo_residual(field_on_vectors: Callable, S: CoordSet, w,
                    h: float) -> float:
    """(d(w + h V(w), S) - d(w, S)) / h."""
    if h <= 0.0:
        raise InvalidInputError(f"h must be positive, got {h}")
    wv = core.as_vector(w)
    v = np.asarray(field_on_vectors(wv), dtype=float)
    return (set_distance(S, wv + h * v) - set_distance(S, wv)) / h


@dataclass(frozen=True)
class NagumoViolation:
    sample_index: int
    limsup: float
    bound: float

    @property
    def margin(self) -> float:
        return self.limsup - self.bound


@dataclass(frozen=True)
class NagumoReport:
    """Outcome of the tangency-bound test over a sample of points.

    limsups[i] estimates the limiting residual at sample i (max over the
    tail half of the step ladder); resolution echoes the set's sampling
    resolution, the dominant error when S is a cloud.
    """

    violations: tuple
    limsups: np.ndarray
    distances: np.ndarray
    resolution: float

    @property
    def ok(self) -> bool:
        return not self.violations


def nagumo_check(field_on_vectors: Callable, S: CoordSet, sample_points,
                 h_seq=NAGUMO_H_SEQ, K: float = 0.0,
                 tol: float = NAGUMO_TOL) -> NagumoReport:
    """Test limsup of the residual against K * d(w, S) + tol per sample."""
    h = np.asarray(tuple(h_seq), dtype=float)
    if len(h) < 2 or not np.all(h > 0.0) or not np.all(np.diff(h) < 0.0):
        raise InvalidInputError("h_seq must be decreasing and positive")
    samples = list(sample_points)
    if not samples:
        raise InvalidInputError("need at least one sample point")
    tail = len(h) // 2
    limsups = np.empty(len(samples))
    distances = np.empty(len(samples))
    violations = []
    for i, w in enumerate(samples):
        residuals = np.array([nagumo_residual(field_on_vectors, S, w, hk)
                              for hk in h])
        limsups[i] = float(np.max(residuals[tail:]))
        distances[i] = set_distance(S, w)
        bound = K * distances[i] + tol
        if limsups[i] > bound:
            violations.append(NagumoViolation(i, limsups[i], bound))
    return NagumoReport(violations=tuple(violations), limsups=limsups,
                        distances=distances, resolution=S.resolution)


@dataclass(frozen=True)
class InvarianceResult:
    invariant: bool
    first_exit: Optional[int]
    max_distance: float

    def __bool__(self):
        return self.invariant


def invariance_test(trajectory: Trajectory, S: CoordSet,
                    tol: float) -> InvarianceResult:
    """Whether every trajectory state stays within tol of S.

    Returns the first index whose distance exceeds tol, if any, plus the
    maximum distance seen along the whole trajectory.
    """
    if len(trajectory) == 0:
        raise InvalidInputError("trajectory is empty")
    max_d = 0.0
    first_exit = None
    for k, c in enumerate(trajectory.coords):
        d = set_distance(S, c.values)
        if d > max_d:
            max_d = d
        if first_exit is None and d > tol:
            first_exit = k
    return InvarianceResult(invariant=first_exit is None,
                            first_exit=first_exit, max_distance=max_d)


def law_level_set(law, at_coords, n: int) -> CoordSet:
    """Level set of a conservation law through the given coordinates.

    The residual is linear with +-1 coefficients; its sup-norm gradient is
    1, so the default calibration gives |residual|, an upper bound on the
    true sup-norm distance (which is |residual| / number of active
    coordinates).
    """
    g = law.gradient(n)
    c0 = float(g @ core.as_vector(at_coords))

    def residual(w):
        return float(g @ w - c0)

    return implicit_set(residual, grad_fn=lambda w: g)
