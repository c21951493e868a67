"""Coordinate-wise differentiation of curves in a coordinate system.

The derivative of a curve phi at t with respect to C is the vector of
per-coordinate derivatives of t -> d(phi(t), c).  Forward derivatives use
one-sided quotients; the two-sided variant computes left and right quotients
separately and compares them, because coordinate functions are typically
only piecewise smooth (distance to c is not differentiable where the curve
passes through c, and corners of the curve show up in every coordinate).

Quotients are evaluated over a decreasing step sequence and accelerated with
one step of Richardson extrapolation; a coordinate counts as converged when
the last two accelerated iterates agree within DERIV_TOL.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import core, spaces
from .core import CoordinateSystem, MetricCoords
from .errors import InvalidInputError
from .spaces import SpaceDescriptor, SpacePoint

#: default step sequence for difference quotients
H_SEQ = tuple(1e-2 * 2.0 ** -k for k in range(13))

#: agreement tolerance for "the quotients converged" / "the sides agree"
DERIV_TOL = 1e-6

#: sides are declared genuinely different only beyond this factor of DERIV_TOL
NONDIFF_FACTOR = 100.0


@dataclass(frozen=True)
class Curve:
    """A map t -> SpacePoint on a stated open or half-open interval.

    Continuity and smoothness are the caller's responsibility; the
    differentiation routines only require evaluability.
    """

    map: Callable[[float], SpacePoint]
    domain: tuple

    def __post_init__(self):
        lo, hi = self.domain
        if not lo < hi:
            raise InvalidInputError("curve domain must be a proper interval")

    def contains(self, t: float) -> bool:
        return self.domain[0] <= t <= self.domain[1]


@dataclass(frozen=True)
class TangentRep:
    """A tangency class, represented by base coordinates plus velocity.

    velocity[k] is the forward derivative of the k-th coordinate function;
    speed_bound is its sup norm.
    """

    base: MetricCoords
    velocity: np.ndarray
    speed_bound: float

    def __post_init__(self):
        arr = np.array(self.velocity, dtype=float)
        arr.flags.writeable = False
        object.__setattr__(self, "velocity", arr)
        if len(arr) != len(self.base):
            raise InvalidInputError("velocity length must match base coords")


def make_tangent(base: MetricCoords, velocity) -> TangentRep:
    velocity = np.asarray(velocity, dtype=float)
    if not np.all(np.isfinite(velocity)):
        raise InvalidInputError("tangent velocity must be finite")
    return TangentRep(base=base, velocity=velocity,
                      speed_bound=float(np.max(np.abs(velocity))))


@dataclass(frozen=True)
class ForwardReport:
    """Forward derivative plus per-coordinate convergence flags.

    velocity entries of non-converged coordinates hold the last accelerated
    iterate and should not be trusted; gaps holds the final iterate-to-iterate
    change per coordinate.
    """

    tangent: TangentRep
    converged: np.ndarray
    gaps: np.ndarray

    @property
    def all_converged(self) -> bool:
        return bool(np.all(self.converged))


@dataclass(frozen=True)
class CentralReport:
    """Two-sided derivative report.

    flags[k] is "differentiable" (sides converged and agree within tol),
    "non_differentiable" (sides converged and differ beyond 100x tol), or
    "indeterminate" (a side failed to converge, or the disagreement falls in
    the gray zone where finite differencing cannot certify either way).
    The tangent velocity averages the two sides and is meaningful only for
    differentiable coordinates.
    """

    tangent: TangentRep
    left: np.ndarray
    right: np.ndarray
    flags: tuple

    @property
    def all_differentiable(self) -> bool:
        return all(f == "differentiable" for f in self.flags)


def _validate_h_seq(h_seq):
    h = np.asarray(tuple(h_seq), dtype=float)
    if len(h) < 3:
        raise InvalidInputError("h_seq needs at least 3 steps")
    if not np.all(h > 0.0) or not np.all(np.diff(h) < 0.0):
        raise InvalidInputError("h_seq must be decreasing and positive")
    return h


def _curve_coords(curve: Curve, system: CoordinateSystem, t: float) -> np.ndarray:
    return core.coords_of(system, curve.map(t), warn_nonmember=False).values


def _extrapolate(quotients: np.ndarray, tol: float):
    """One Richardson step along axis 0 (steps halve between rows).

    Returns (values, converged, gaps) per column.
    """
    iterates = 2.0 * quotients[1:] - quotients[:-1]
    gaps = np.abs(iterates[-1] - iterates[-2])
    converged = (gaps < tol) & np.isfinite(iterates[-1])
    return iterates[-1], converged, gaps


def forward_derivative(curve: Curve, system: CoordinateSystem, t: float,
                       h_seq=H_SEQ, tol: float = DERIV_TOL) -> ForwardReport:
    """Forward coordinate derivative of the curve at t.

    Quotients (phi_c(t + h) - phi_c(t)) / h over h_seq, one Richardson step,
    convergence judged on the last two iterates per coordinate.
    """
    h = _validate_h_seq(h_seq)
    if not (curve.contains(t) and curve.contains(t + h[0])):
        raise InvalidInputError(
            f"[{t}, {t + h[0]}] must lie inside the curve domain")
    base = _curve_coords(curve, system, t)
    quotients = np.array([
        (_curve_coords(curve, system, t + hk) - base) / hk for hk in h])
    velocity, converged, gaps = _extrapolate(quotients, tol)
    tangent = TangentRep(base=MetricCoords(base), velocity=velocity,
                         speed_bound=float(np.max(np.abs(velocity))))
    return ForwardReport(tangent=tangent, converged=converged, gaps=gaps)


def central_derivative(curve: Curve, system: CoordinateSystem, t: float,
                       h_seq=H_SEQ, tol: float = DERIV_TOL) -> CentralReport:
    """Two-sided coordinate derivative with per-coordinate existence flags."""
    h = _validate_h_seq(h_seq)
    if not (curve.contains(t - h[0]) and curve.contains(t + h[0])):
        raise InvalidInputError(
            f"[{t - h[0]}, {t + h[0]}] must lie inside the curve domain")
    base = _curve_coords(curve, system, t)
    right_q = np.array([
        (_curve_coords(curve, system, t + hk) - base) / hk for hk in h])
    left_q = np.array([
        (base - _curve_coords(curve, system, t - hk)) / hk for hk in h])
    right, r_conv, _ = _extrapolate(right_q, tol)
    left, l_conv, _ = _extrapolate(left_q, tol)
    flags = []
    for k in range(len(base)):
        if not (r_conv[k] and l_conv[k]):
            flags.append("indeterminate")
        elif abs(left[k] - right[k]) <= tol:
            flags.append("differentiable")
        elif abs(left[k] - right[k]) > NONDIFF_FACTOR * tol:
            flags.append("non_differentiable")
        else:
            flags.append("indeterminate")
    velocity = 0.5 * (left + right)
    tangent = TangentRep(base=MetricCoords(base), velocity=velocity,
                         speed_bound=float(np.max(np.abs(velocity))))
    return CentralReport(tangent=tangent, left=left, right=right,
                         flags=tuple(flags))


def tangency_test(curve1: Curve, curve2: Curve, system: CoordinateSystem,
                  t0: float, tol: float):
    """Same point and same forward derivative, both within tol.

    Returns True or False, or the string "indeterminate" when either forward
    derivative has a non-converged coordinate (the test cannot decide).
    """
    rep1 = forward_derivative(curve1, system, t0)
    rep2 = forward_derivative(curve2, system, t0)
    if not (rep1.all_converged and rep2.all_converged):
        return "indeterminate"
    base_gap = core.coord_gap(rep1.tangent.base, rep2.tangent.base)
    vel_gap = float(np.max(np.abs(rep1.tangent.velocity -
                                  rep2.tangent.velocity)))
    return bool(base_gap <= tol and vel_gap <= tol)


def tangent_metric(u: TangentRep, v: TangentRep) -> float:
    """max(sup base-coordinate gap, sup velocity gap)."""
    if len(u.velocity) != len(v.velocity) or len(u.base) != len(v.base):
        raise InvalidInputError("tangent representatives index different C")
    base_gap = core.coord_gap(u.base, v.base)
    vel_gap = float(np.max(np.abs(u.velocity - v.velocity)))
    return max(base_gap, vel_gap)


def char_shift_derivative(c: SpacePoint, t: float,
                          grid_space: SpaceDescriptor) -> float:
    """Closed form for the derivative of t -> || chi_[t,t+1] - c ||.

    For continuous c the quadrature distance phi_c(t) from the shifted unit
    indicator to c has derivative (c(t) - c(t+1)) / phi_c(t).  Fails with a
    division by zero when the shifted indicator coincides with c, where no
    coordinate derivative exists.
    """
    if grid_space.kind != "grid_l2":
        raise InvalidInputError("char_shift_derivative needs a grid_l2 space")
    indicator = spaces.grid_indicator(grid_space, t)
    phi = spaces.distance(grid_space, indicator, c)
    if phi == 0.0:
        raise ZeroDivisionError(
            "curve passes through the coordinate point: phi_c(t) = 0")
    num = spaces.grid_eval(grid_space, c, t) - spaces.grid_eval(grid_space, c,
                                                                t + 1.0)
    return num / phi


def shifted_indicator_curve(grid_space: SpaceDescriptor) -> Curve:
    """The curve t -> chi_[t,t+1] on the grid, defined where it fits."""
    if grid_space.kind != "grid_l2":
        raise InvalidInputError("needs a grid_l2 space")
    lo = float(grid_space.grid[0])
    hi = float(grid_space.grid[-1])
    return Curve(map=lambda t: spaces.grid_indicator(grid_space, t),
                 domain=(lo, hi - 1.0))
