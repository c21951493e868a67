"""Conversions between orthonormal coordinates and metric coordinates.

For the coordinatizing set C = {e_1, ..., e_n, 0} of R^n (standard basis plus
the origin) the conversion both ways is closed-form:

    w_c  = (|w|^2 - 2 w~_c + 1)^(1/2)   for basis points c, and  w_0 = |w|
    w~_c = (w_0^2 - w_c^2 + 1) / 2

where w~_c is the Cartesian coordinate along c.  For arbitrary C there is no
closed form; multilaterate recovers a point from its distance tuple by damped
Gauss-Newton on the residuals d(x, C[k]) - target[k].
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import core, spaces
from .core import CoordinateSystem, MetricCoords
from .errors import (DegenerateConfigurationError, InfeasibleCoordsError,
                     InvalidInputError, MetrikosError, NoConvergenceError)
from .spaces import SpacePoint

#: radicand guard: analytically |w - c|^2 >= 0, so anything below this is a bug
RADICAND_TOL = 1e-12


@dataclass(frozen=True)
class MultilaterateOptions:
    max_iter: int = 100
    tol: float = 1e-10


@lru_cache(maxsize=32)
def hilbert_system(n: int) -> CoordinateSystem:
    """The system on R^n with C = (e_1, ..., e_n, 0) and base point 0."""
    if n < 1:
        raise InvalidInputError(f"dimension must be >= 1, got {n}")
    sp = spaces.euclidean(n)
    basis = [spaces.point(sp, np.eye(n)[k]) for k in range(n)]
    origin = spaces.point(sp, np.zeros(n))
    labels = tuple(f"e{k + 1}" for k in range(n)) + ("o",)
    return CoordinateSystem(space=sp, coords=tuple(basis) + (origin,),
                            base_point=origin, labels=labels)


def hilbert_to_metric(w) -> MetricCoords:
    """Distance tuple of w to (e_1, ..., e_n, 0); length n+1, last = |w|.

    Computed through the closed form rather than n+1 norm evaluations, then
    trusted because the radicand is |w - c|^2 analytically.
    """
    w = np.asarray(w, dtype=float)
    if w.ndim != 1 or w.size < 1:
        raise InvalidInputError("w must be a vector of length >= 1")
    sq = float(w @ w)
    radicand = sq - 2.0 * w + 1.0
    if np.min(radicand) < -RADICAND_TOL:
        raise MetrikosError(
            f"negative radicand {np.min(radicand)} in conversion; "
            "non-finite input?")
    values = np.empty(w.size + 1)
    values[:-1] = np.sqrt(np.clip(radicand, 0.0, None))
    values[-1] = np.sqrt(sq)
    return MetricCoords(values)


def metric_to_hilbert(coords: MetricCoords) -> np.ndarray:
    """Invert hilbert_to_metric: Cartesian vector from the distance tuple.

    The tuple must be feasible for the basis-plus-origin system; infeasible
    input is rejected with the feasibility report attached.
    """
    v = np.asarray(coords.values, dtype=float)
    if v.ndim != 1 or v.size < 2:
        raise InvalidInputError("need at least 2 coordinates (one basis point"
                                " and the origin)")
    n = v.size - 1
    report = core.check_feasible(hilbert_system(n), coords)
    if not report.feasible:
        raise InfeasibleCoordsError(
            f"coords violate {len(report.violations)} feasibility "
            "inequalities", report=report)
    w0_sq = v[-1] * v[-1]
    return (w0_sq - v[:-1] * v[:-1] + 1.0) / 2.0


# ---------------------------------------------------------------------------
# multilateration


def _residuals(system: CoordinateSystem, data: np.ndarray,
               target: np.ndarray) -> np.ndarray:
    if system.space.kind == "euclidean":
        dists = np.linalg.norm(system._stacked - data, axis=1)
    else:
        dists = np.arccos(np.clip(system._stacked @ data, -1.0, 1.0))
    return dists - target


def _jacobian(system: CoordinateSystem, data: np.ndarray) -> np.ndarray:
    """Rows: gradient of d(x, C[k]) with respect to ambient x.

    Euclidean: (x - c)/|x - c| (zero row when x = c, where the residual is
    stationary anyway).  Sphere: -c/sqrt(1 - (x.c)^2) projected onto the
    tangent plane at x, so Gauss-Newton steps stay tangent.
    """
    stacked = system._stacked
    if system.space.kind == "euclidean":
        diff = data - stacked
        norms = np.linalg.norm(diff, axis=1)
        safe = np.where(norms > 0.0, norms, 1.0)
        rows = diff / safe[:, None]
        rows[norms == 0.0] = 0.0
        return rows
    dots = np.clip(stacked @ data, -1.0, 1.0)
    sin = np.sqrt(np.clip(1.0 - dots * dots, 0.0, None))
    safe = np.where(sin > 1e-12, sin, 1.0)
    rows = -stacked / safe[:, None]
    rows[sin <= 1e-12] = 0.0
    # project onto the tangent plane at x
    rows = rows - np.outer(rows @ data, data)
    return rows


def multilaterate(system: CoordinateSystem, target: MetricCoords,
                  initial_guess: SpacePoint,
                  opts: MultilaterateOptions = None) -> SpacePoint:
    """Recover a point realizing the given distance tuple.

    Damped Gauss-Newton with a halving line search on the sum of squared
    residuals.  The returned point satisfies
    max_k |d(x, C[k]) - target[k]| <= opts.tol.  When two points realize the
    same tuple the initial guess selects the basin; no detection is attempted.
    """
    if opts is None:
        opts = MultilaterateOptions()
    kind = system.space.kind
    if kind not in ("euclidean", "sphere"):
        raise InvalidInputError(
            f"multilateration supports euclidean and sphere spaces, not {kind}")
    target_v = np.asarray(target.values, dtype=float)
    if len(target_v) != len(system):
        raise InvalidInputError("target length does not match |C|")
    report = core.check_feasible(system, target, tol=1e-6)
    if not report.feasible:
        raise InfeasibleCoordsError("target coords are infeasible",
                                    report=report)
    x = np.array(spaces.as_data(system.space, initial_guess), dtype=float)
    if kind == "sphere":
        x = x / np.linalg.norm(x)

    def cost(data):
        r = _residuals(system, data, target_v)
        return float(r @ r)

    r = _residuals(system, x, target_v)
    for _ in range(opts.max_iter):
        if np.max(np.abs(r)) <= opts.tol:
            break
        J = _jacobian(system, x)
        delta, *_ = np.linalg.lstsq(J, -r, rcond=None)
        base_cost = float(r @ r)
        step = 1.0
        moved = False
        while step > 2.0 ** -40:
            cand = x + step * delta
            if kind == "sphere":
                norm = np.linalg.norm(cand)
                if norm == 0.0:
                    step /= 2.0
                    continue
                cand = cand / norm
            if cost(cand) < base_cost:
                x = cand
                moved = True
                break
            step /= 2.0
        r = _residuals(system, x, target_v)
        if not moved:
            break  # stalled: no descent direction left
    if np.max(np.abs(r)) <= opts.tol:
        if kind == "sphere":
            x = x / np.linalg.norm(x)
        return spaces.point(system.space, x)
    J = _jacobian(system, x)
    needed = system.space.dim if kind == "euclidean" else 2
    if np.linalg.matrix_rank(J, tol=1e-10) < needed:
        raise DegenerateConfigurationError(
            "Jacobian is rank-deficient at the final iterate; C is "
            "degenerate relative to this point")
    raise NoConvergenceError(
        f"no convergence after {opts.max_iter} iterations "
        f"(residual {np.max(np.abs(r)):.3e})",
        best=spaces.point(system.space, x / np.linalg.norm(x))
        if kind == "sphere" else spaces.point(system.space, x),
        residual=float(np.max(np.abs(r))))
