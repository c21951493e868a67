"""Metric-coordinate vector fields and their numerical integration.

A field assigns a velocity to each coordinate tuple, one scalar component
per coordinatizing point.  Integration happens in coordinate space R^C
(integrate_coords); integrate_points additionally recovers ambient points by
multilateration, warm-started step to step so the d_C-continuous branch is
followed.  realize_on_sphere turns a two-component prescription on the unit
sphere into an honest ambient tangent vector.

The extension machinery (mcshane_extend, cutoff) operates on scalar or
vector functions over R^C with the sup norm; together they confine a
Lipschitz field to a ball without breaking Lipschitz continuity.
"""

from __future__ import annotations

from dataclasses import dataclass, field as _field
from typing import Callable, Optional

import numpy as np

from . import core, spaces
from .calculus import TangentRep, make_tangent, tangent_metric
from .conversion import MultilaterateOptions, multilaterate
from .core import CoordinateSystem, EmbeddedPoint, MetricCoords
from .errors import (DegenerateConfigurationError, InfeasibleCoordsError,
                     IntegrationError, InvalidFieldError, InvalidInputError,
                     NoConvergenceError)
from .spaces import SpacePoint

#: post-step feasibility guard tolerance
FEASIBILITY_GUARD_TOL = 1e-6

#: probe tolerance for conserved-quantity detection
CONSERVATION_TOL = 1e-10

#: near-pole guard for geodesic-distance gradients on the sphere
SPHERE_POLE_TOL = 1e-12


@dataclass(frozen=True)
class CoordField:
    """A vector field in metric coordinates.

    components[k] maps a MetricCoords to the velocity of the k-th
    coordinate.  Components must be pure functions; they are called from
    integrator stages in no guaranteed order.
    """

    components: tuple
    label: str = "field"

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))
        if not self.components:
            raise InvalidInputError("field needs at least one component")

    def __len__(self):
        return len(self.components)


def constant_field(values, label: str = "constant") -> CoordField:
    """Field with fixed component values."""
    vals = tuple(float(v) for v in values)
    return CoordField(
        components=tuple((lambda c, v=v: v) for v in vals), label=label)


def eval_field(field: CoordField, coords: MetricCoords) -> TangentRep:
    """Velocity of the field at the given coordinates, as a tangent class."""
    if len(field) != len(coords):
        raise InvalidInputError(
            f"field has {len(field)} components but coords {len(coords)}")
    out = np.empty(len(field))
    for k, component in enumerate(field.components):
        try:
            out[k] = float(component(coords))
        except Exception as exc:
            raise InvalidFieldError(
                f"component {k} of field {field.label!r} failed: {exc}") from exc
    if not np.all(np.isfinite(out)):
        raise InvalidFieldError(
            f"field {field.label!r} produced non-finite velocity {out}")
    return make_tangent(coords, out)


@dataclass
class Trajectory:
    """Time-stamped coordinate (and optionally point) sequence.

    status is "completed", "stopped_infeasible" (a step left the feasibility
    region; the offending state is in meta, not in coords), or
    "stopped_domain" (a recovered point left X).  All stored coords pass the
    feasibility check at FEASIBILITY_GUARD_TOL.
    """

    times: np.ndarray
    coords: list
    points: Optional[list]
    step: float
    method: str
    status: str
    meta: dict = _field(default_factory=dict)

    def __len__(self):
        return len(self.times)

    def coord_array(self) -> np.ndarray:
        return np.array([c.values for c in self.coords])

    def final_coords(self) -> MetricCoords:
        return self.coords[-1]


def _rhs(field: CoordField, values: np.ndarray) -> np.ndarray:
    return eval_field(field, MetricCoords(values)).velocity


def _advance(field: CoordField, values: np.ndarray, h: float,
             method: str) -> np.ndarray:
    if method == "euler":
        return values + h * _rhs(field, values)
    k1 = _rhs(field, values)
    k2 = _rhs(field, values + 0.5 * h * k1)
    k3 = _rhs(field, values + 0.5 * h * k2)
    k4 = _rhs(field, values + h * k3)
    return values + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _time_steps(t_end: float, step: float):
    """Uniform steps of the given size, plus one final partial step."""
    t = 0.0
    while t < t_end - 1e-15:
        h = min(step, t_end - t)
        yield t, h
        t += h


def _validate_run(field: CoordField, system: CoordinateSystem, t_end: float,
                  step: float, method: str):
    if len(field) != len(system):
        raise InvalidInputError("field and system have different |C|")
    if step <= 0.0:
        raise InvalidInputError(f"step must be positive, got {step}")
    if t_end < 0.0:
        raise InvalidInputError(f"t_end must be >= 0, got {t_end}")
    if method not in ("euler", "rk4"):
        raise InvalidInputError(f"method must be euler or rk4, got {method!r}")


def integrate_coords(field: CoordField, system: CoordinateSystem,
                     x0: SpacePoint, t_end: float, step: float,
                     method: str = "rk4") -> Trajectory:
    """Integrate the field in coordinate space from the coords of x0.

    Stops with status "stopped_infeasible" when an accepted step leaves the
    feasibility region (guard tolerance FEASIBILITY_GUARD_TOL); sub-stages
    are not guarded.
    """
    _validate_run(field, system, t_end, step, method)
    v = core.coords_of(system, x0).values.copy()
    report = core.check_feasible(system, MetricCoords(v))
    if not report.feasible:
        raise InfeasibleCoordsError("start coords are infeasible",
                                    report=report)
    times = [0.0]
    coords = [MetricCoords(v)]
    status = "completed"
    meta = {}
    for t, h in _time_steps(t_end, step):
        try:
            v_new = _advance(field, v, h, method)
        except Exception as exc:
            partial = Trajectory(times=np.array(times), coords=coords,
                                 points=None, step=step, method=method,
                                 status="stopped_infeasible", meta=meta)
            raise IntegrationError(f"field evaluation failed at t = {t}: {exc}",
                                   trajectory=partial) from exc
        guard = core.check_feasible(system, MetricCoords(v_new),
                                    tol=FEASIBILITY_GUARD_TOL)
        if not guard.feasible:
            status = "stopped_infeasible"
            meta["infeasible_state"] = v_new
            meta["violations"] = guard.violations
            break
        v = v_new
        times.append(t + h)
        coords.append(MetricCoords(v))
    return Trajectory(times=np.array(times), coords=coords, points=None,
                      step=step, method=method, status=status, meta=meta)


def hull_reflector(system: CoordinateSystem):
    """Reflection across the affine hull of C, or None if it fills the space.

    Distances to C are invariant under this reflection, so it swaps the
    mirror-image solutions of a multilateration problem.  Euclidean spaces
    only.
    """
    if system.space.kind != "euclidean":
        return None
    stacked = np.asarray(system._stacked, dtype=float)
    mean = stacked.mean(axis=0)
    centered = stacked - mean
    _, svals, vt = np.linalg.svd(centered, full_matrices=False)
    cutoff_val = 1e-10 * max(float(svals.max(initial=0.0)), 1.0)
    basis = vt[svals > cutoff_val]
    if len(basis) >= system.space.dim:
        return None

    def reflect(p: SpacePoint) -> SpacePoint:
        x = spaces.as_data(system.space, p)
        y = x - mean
        proj = basis.T @ (basis @ y) if len(basis) else np.zeros_like(y)
        return spaces.point(system.space, mean + 2.0 * proj - y)

    return reflect


def integrate_points(field: CoordField, system: CoordinateSystem,
                     x0: SpacePoint, t_end: float, step: float,
                     method: str = "rk4",
                     recover: MultilaterateOptions = None) -> Trajectory:
    """integrate_coords plus ambient point recovery at every step.

    Each point is multilaterated warm-started from the previous one, which
    follows the d_C-continuous branch.  When the recovered point leaves X
    but its mirror image across the affine hull of C (which realizes the
    same coordinates) is inside, the trajectory continues from the mirror:
    coordinates stay continuous while the points jump.  If neither branch is
    in X the trajectory stops with status "stopped_domain".
    """
    _validate_run(field, system, t_end, step, method)
    if system.space.kind not in ("euclidean", "sphere"):
        raise InvalidInputError("point recovery needs euclidean or sphere")
    if recover is None:
        recover = MultilaterateOptions()
    reflect = hull_reflector(system)
    v = core.coords_of(system, x0).values.copy()
    p = x0
    times = [0.0]
    coords = [MetricCoords(v)]
    points = [p]
    status = "completed"
    meta = {"jumps": []}
    for t, h in _time_steps(t_end, step):
        try:
            v_new = _advance(field, v, h, method)
        except Exception as exc:
            partial = Trajectory(times=np.array(times), coords=coords,
                                 points=points, step=step, method=method,
                                 status="stopped_infeasible", meta=meta)
            raise IntegrationError(f"field evaluation failed at t = {t}: {exc}",
                                   trajectory=partial) from exc
        guard = core.check_feasible(system, MetricCoords(v_new),
                                    tol=FEASIBILITY_GUARD_TOL)
        if not guard.feasible:
            status = "stopped_infeasible"
            meta["infeasible_state"] = v_new
            meta["violations"] = guard.violations
            break
        target = MetricCoords(v_new)
        try:
            p_new = multilaterate(system, target, p, recover)
        except (NoConvergenceError, DegenerateConfigurationError) as exc:
            p_new = None
            if reflect is not None:
                try:
                    p_new = multilaterate(system, target, reflect(p), recover)
                except (NoConvergenceError, DegenerateConfigurationError):
                    p_new = None
            if p_new is None:
                partial = Trajectory(times=np.array(times), coords=coords,
                                     points=points, step=step, method=method,
                                     status="stopped_domain", meta=meta)
                raise IntegrationError(
                    f"point recovery failed at t = {t + h}: {exc}",
                    trajectory=partial) from exc
        if not system.member(p_new):
            mirrored = reflect(p_new) if reflect is not None else None
            if mirrored is not None and system.member(mirrored):
                meta["jumps"].append(len(times))
                p_new = mirrored
            else:
                status = "stopped_domain"
                meta["exit_point"] = p_new
                break
        v = v_new
        p = p_new
        times.append(t + h)
        coords.append(MetricCoords(v))
        points.append(p)
    return Trajectory(times=np.array(times), coords=coords, points=points,
                      step=step, method=method, status=status, meta=meta)


# ---------------------------------------------------------------------------
# sphere realization


@dataclass(frozen=True)
class RealizedVelocity:
    """Ambient tangent vector realizing a two-component prescription.

    u is the velocity at x (u . x = 0); induced[k] is the coordinate
    velocity -(u . C[k]) / sin x_k it generates, NaN where x is at a pole
    of C[k] and the coordinate derivative is undefined.
    """

    u: np.ndarray
    induced: np.ndarray

    def __post_init__(self):
        for name in ("u", "induced"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)


def realize_on_sphere(field: CoordField, system: CoordinateSystem,
                      x: SpacePoint, tol: float = 1e-9) -> RealizedVelocity:
    """Tangent vector at x whose first two coordinate velocities are as
    prescribed.

    The first two components of the field prescribe d/dt of x_a and x_b;
    the third coordinate's velocity follows by continuity and is reported,
    never prescribed.  Unrealizable prescriptions (x on the great circle
    through a and b with a nonzero prescription) raise a degenerate-
    configuration error; a zero prescription there realizes as u = 0.
    """
    if system.space.kind != "sphere":
        raise InvalidInputError("realize_on_sphere needs the sphere space")
    if len(system) != 3:
        raise InvalidInputError("needs exactly three coordinatizing points")
    xd = spaces.as_data(system.space, x)
    stacked = system._stacked
    dots = stacked @ xd
    if abs(dots[0]) > 1.0 - SPHERE_POLE_TOL or abs(dots[1]) > 1.0 - SPHERE_POLE_TOL:
        raise DegenerateConfigurationError(
            "x coincides with +-a or +-b; the distance gradient is undefined")
    coords = core.coords_of(system, x)
    f = float(field.components[0](coords))
    g = float(field.components[1](coords))
    sin_a = np.sqrt(1.0 - dots[0] * dots[0])
    sin_b = np.sqrt(1.0 - dots[1] * dots[1])
    mat = np.vstack([stacked[0], stacked[1], xd])
    rhs = np.array([-f * sin_a, -g * sin_b, 0.0])
    det = float(np.linalg.det(mat))
    if abs(det) < 1e-10:
        if abs(f) <= tol and abs(g) <= tol:
            u = np.zeros(3)
        else:
            raise DegenerateConfigurationError(
                "x lies on the great circle through a and b; only a zero "
                "prescription is realizable there")
    else:
        u = np.linalg.solve(mat, rhs)
    sines = np.sqrt(np.clip(1.0 - dots * dots, 0.0, None))
    induced = np.full(len(system), np.nan)
    ok = sines > SPHERE_POLE_TOL
    induced[ok] = -(stacked[ok] @ u) / sines[ok]
    return RealizedVelocity(u=u, induced=induced)


def integrate_on_sphere(field: CoordField, system: CoordinateSystem,
                        x0: SpacePoint, t_end: float, step: float,
                        method: str = "rk4") -> Trajectory:
    """Ambient integration of the realized field, renormalizing each step.

    Integrator stages normalize their evaluation point back to the sphere,
    and the accepted state is renormalized (retraction), so the trajectory
    stays on the sphere to machine precision.
    """
    if method not in ("euler", "rk4"):
        raise InvalidInputError(f"method must be euler or rk4, got {method!r}")
    if step <= 0.0 or t_end < 0.0:
        raise InvalidInputError("need step > 0 and t_end >= 0")

    def rhs(raw: np.ndarray) -> np.ndarray:
        xn = raw / np.linalg.norm(raw)
        return realize_on_sphere(field, system,
                                 spaces.point(system.space, xn)).u

    x = np.array(spaces.as_data(system.space, x0), dtype=float)
    times = [0.0]
    points = [x0]
    coords = [core.coords_of(system, x0)]
    meta = {"max_prenorm_drift": 0.0}
    for t, h in _time_steps(t_end, step):
        try:
            if method == "euler":
                x_new = x + h * rhs(x)
            else:
                k1 = rhs(x)
                k2 = rhs(x + 0.5 * h * k1)
                k3 = rhs(x + 0.5 * h * k2)
                k4 = rhs(x + h * k3)
                x_new = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        except DegenerateConfigurationError as exc:
            partial = Trajectory(times=np.array(times), coords=coords,
                                 points=points, step=step, method=method,
                                 status="stopped_domain", meta=meta)
            raise IntegrationError(f"sphere flow degenerate at t = {t}: {exc}",
                                   trajectory=partial) from exc
        norm = float(np.linalg.norm(x_new))
        meta["max_prenorm_drift"] = max(meta["max_prenorm_drift"],
                                        abs(norm - 1.0))
        x = x_new / norm
        pt = spaces.point(system.space, x)
        times.append(t + h)
        points.append(pt)
        coords.append(core.coords_of(system, pt))
    return Trajectory(times=np.array(times), coords=coords, points=points,
                      step=step, method=method, status="completed", meta=meta)


# ---------------------------------------------------------------------------
# Lipschitz machinery


@dataclass(frozen=True)
class LipschitzReport:
    """Sampled lower bound on the Lipschitz constant of a field."""

    estimate: float
    pair: tuple


def lipschitz_estimate(field: CoordField, system: CoordinateSystem,
                       samples) -> LipschitzReport:
    """max over sample pairs of d_C^T(V(x), V(y)) / d_C(x, y).

    A lower bound on the true constant; pairs closer than 1e-9 in d_C are
    skipped.  The attaining pair of sample indices is reported.
    """
    samples = list(samples)
    if len(samples) < 2:
        raise InvalidInputError("need at least 2 samples")
    tangents = []
    for s in samples:
        tangents.append(eval_field(field, core.coords_of(system, s,
                                                         warn_nonmember=False)))
    best = -np.inf
    best_pair = None
    for i in range(len(samples)):
        for j in range(i + 1, len(samples)):
            dc = core.coord_gap(tangents[i].base, tangents[j].base)
            if dc <= 1e-9:
                continue
            ratio = tangent_metric(tangents[i], tangents[j]) / dc
            if ratio > best:
                best = ratio
                best_pair = (i, j)
    if best_pair is None:
        raise InvalidInputError("all sample pairs are d_C-coincident")
    return LipschitzReport(estimate=float(best), pair=best_pair)


def mcshane_extend(values, K: float) -> Callable:
    """K-Lipschitz extension of scattered scalar data under the sup norm.

    values is a list of (EmbeddedPoint-or-vector, real).  The returned
    function is max_i (f_i - K * |x - p_i|_inf): it equals the data on the
    data points and is K-Lipschitz everywhere.  Data that is not itself
    K-Lipschitz is rejected with a witness pair.
    """
    if K < 0.0:
        raise InvalidInputError(f"K must be >= 0, got {K}")
    pts = np.array([core.as_vector(p) for p, _ in values], dtype=float)
    vals = np.array([float(v) for _, v in values])
    if pts.ndim != 2 or len(pts) == 0:
        raise InvalidInputError("need at least one data point")
    slack = 1e-12 * max(1.0, K)
    for i in range(len(pts)):
        gaps = np.max(np.abs(pts - pts[i]), axis=1)
        bad = np.abs(vals - vals[i]) > K * gaps + slack
        if np.any(bad):
            j = int(np.nonzero(bad)[0][0])
            raise InvalidInputError(
                f"data is not {K}-Lipschitz: |f[{i}] - f[{j}]| = "
                f"{abs(vals[i] - vals[j])} over gap {gaps[j]}")

    def extension(x) -> float:
        xv = core.as_vector(x)
        return float(np.max(vals - K * np.max(np.abs(pts - xv), axis=1)))

    return extension


def mcshane_extend_vector(values, K: float) -> Callable:
    """Componentwise McShane extension of vector data at the same constant."""
    pts = [p for p, _ in values]
    vecs = np.array([np.asarray(v, dtype=float) for _, v in values])
    if vecs.ndim != 2:
        raise InvalidInputError("vector data must share one length")
    parts = [mcshane_extend(list(zip(pts, vecs[:, k])), K)
             for k in range(vecs.shape[1])]

    def extension(x) -> np.ndarray:
        return np.array([part(x) for part in parts])

    return extension


def cutoff(field_on_embedded: Callable, center, r: float) -> Callable:
    """Taper a field to zero outside the sup-norm ball of radius r.

    Inside radius r/2 the field is untouched; outside radius r the result
    is zero (without evaluating the wrapped field); in between it is scaled
    by 2 - (2/r)|x - center|_inf.
    """
    if r <= 0.0:
        raise InvalidInputError(f"r must be positive, got {r}")
    cv = core.as_vector(center)

    def tapered(x) -> np.ndarray:
        xv = core.as_vector(x)
        s = float(np.max(np.abs(xv - cv)))
        if s >= r:
            return np.zeros(len(cv))
        out = np.asarray(field_on_embedded(x), dtype=float)
        if s < r / 2.0:
            return out
        return (2.0 - (2.0 / r) * s) * out

    return tapered


# ---------------------------------------------------------------------------
# conserved quantities


@dataclass(frozen=True)
class ConservationLaw:
    """A detected linear conservation law of a field.

    kind "ellipsoid": x_i + x_j conserved (V_i + V_j = 0 on probes);
    kind "hyperboloid": x_i - x_j conserved (V_i = V_j);
    kind "sphere": x_i conserved (V_i = 0).
    """

    kind: str
    indices: tuple

    def quantity(self, labels) -> str:
        if self.kind == "ellipsoid":
            i, j = self.indices
            return f"x_{labels[i]} + x_{labels[j]}"
        if self.kind == "hyperboloid":
            i, j = self.indices
            return f"x_{labels[i]} - x_{labels[j]}"
        return f"x_{labels[self.indices[0]]}"

    def gradient(self, n: int) -> np.ndarray:
        g = np.zeros(n)
        if self.kind == "ellipsoid":
            g[self.indices[0]] = 1.0
            g[self.indices[1]] = 1.0
        elif self.kind == "hyperboloid":
            g[self.indices[0]] = 1.0
            g[self.indices[1]] = -1.0
        else:
            g[self.indices[0]] = 1.0
        return g

    def level_value(self, coords) -> float:
        v = core.as_vector(coords)
        return float(self.gradient(len(v)) @ v)


def conserved_quantities(field: CoordField, probe_coords,
                         tol: float = CONSERVATION_TOL) -> tuple:
    """Detect linear conservation laws by evaluating the field on probes.

    Purely numerical evidence on the supplied probe tuples, not a proof;
    pass probes that cover the region of interest.
    """
    probes = list(probe_coords)
    if not probes:
        raise InvalidInputError("need at least one probe")
    n = len(field)
    if n < 2:
        raise InvalidInputError("need |C| >= 2")
    vels = np.array([eval_field(field, p).velocity for p in probes])
    laws = []
    for i in range(n):
        for j in range(i + 1, n):
            if np.max(np.abs(vels[:, i] + vels[:, j])) <= tol:
                laws.append(ConservationLaw("ellipsoid", (i, j)))
            if np.max(np.abs(vels[:, i] - vels[:, j])) <= tol:
                laws.append(ConservationLaw("hyperboloid", (i, j)))
    for i in range(n):
        if np.max(np.abs(vels[:, i])) <= tol:
            laws.append(ConservationLaw("sphere", (i,)))
    return tuple(laws)


def default_probes(system: CoordinateSystem, count: int = 64,
                   seed: int = 0) -> list:
    """Feasible coordinate probes drawn from genuine random points."""
    return core.sample_feasible_coords(system, count, seed)


def field_on_vectors(field: CoordField) -> Callable:
    """Adapt a CoordField to a plain vector-to-vector function on R^C."""

    def fn(w) -> np.ndarray:
        return eval_field(field, MetricCoords(core.as_vector(w))).velocity

    return fn
