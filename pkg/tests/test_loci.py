"""Loci in metric coordinates: residuals, validation and sampling.

The ambient oracles use a flat two-observer 3-space system: a at the origin
and b at (2, 0, 0), so the implicit surfaces have textbook Cartesian
counterparts to check sampled points against.
"""

import math

import numpy as np
import pytest

from metrikos import core, loci, spaces
from metrikos.core import CoordinateSystem, MetricCoords
from metrikos.errors import (EmptyLocusError, InfeasibleCoordsError,
                             InvalidInputError)
from metrikos.loci import (Locus, locus_membership, locus_residual,
                           matched_branch, residual_gradient, sample_locus)


@pytest.fixture(scope="module")
def ab3():
    sp = spaces.euclidean(3)
    return CoordinateSystem(
        space=sp,
        coords=(spaces.point(sp, (0.0, 0.0, 0.0)),
                spaces.point(sp, (2.0, 0.0, 0.0))),
        base_point=spaces.point(sp, (1.0, 1.0, 0.0)),
        labels=("a", "b"))


# ---------------------------------------------------------------------------
# construction and validation


def test_locus_kind_checked():
    with pytest.raises(InvalidInputError):
        Locus("blob", 0)


def test_locus_parameter_presence():
    with pytest.raises(InvalidInputError):
        Locus("sphere", 0)                   # needs r
    with pytest.raises(InvalidInputError):
        Locus("ellipsoid", 0, r=3.0)         # needs j
    with pytest.raises(InvalidInputError):
        Locus("cone", 0, 1)                  # needs theta
    Locus("plane", 0, 1)                     # no parameter required


def test_validate_parameter_ranges(ab3):
    with pytest.raises(EmptyLocusError):
        loci.validate_locus(Locus("sphere", 0, r=-1.0), ab3)
    with pytest.raises(EmptyLocusError):
        loci.validate_locus(Locus("ellipsoid", 0, 1, r=1.5), ab3)
    with pytest.raises(EmptyLocusError):
        loci.validate_locus(Locus("hyperboloid", 0, 1, r=2.5), ab3)
    with pytest.raises(EmptyLocusError):
        loci.validate_locus(Locus("cone", 0, 1, theta=4.0), ab3)
    loci.validate_locus(Locus("ellipsoid", 0, 1, r=3.0), ab3)


def test_validate_index_ranges(ab3):
    with pytest.raises(InvalidInputError):
        loci.validate_locus(Locus("sphere", 5, r=1.0), ab3)
    with pytest.raises(InvalidInputError):
        loci.validate_locus(Locus("plane", 1, 1), ab3)


# ---------------------------------------------------------------------------
# residual oracles


def test_sphere_residual(ab3):
    c = MetricCoords((1.0, 2.2))
    assert locus_residual(Locus("sphere", 0, r=1.0), c, ab3) == 0.0
    assert locus_residual(Locus("sphere", 0, r=0.5), c, ab3) == pytest.approx(0.5)


def test_ellipsoid_and_hyperboloid_residuals(ab3):
    c = MetricCoords((1.2, 1.8))
    assert locus_residual(Locus("ellipsoid", 0, 1, r=3.0), c, ab3) == \
        pytest.approx(0.0)
    assert locus_residual(Locus("hyperboloid", 0, 1, r=0.6), c, ab3) == \
        pytest.approx(0.0)
    flipped = MetricCoords((1.8, 1.2))
    assert locus_residual(Locus("hyperboloid", 0, 1, r=0.6), flipped, ab3) == \
        pytest.approx(0.0)


def test_plane_segment_residuals(ab3):
    mid = core.coords_of(ab3, spaces.point(ab3.space, (1.0, 0.7, 0.0)),
                         warn_nonmember=False)
    assert locus_residual(Locus("plane", 0, 1), mid, ab3) == pytest.approx(0.0)
    on_seg = MetricCoords((0.5, 1.5))
    assert locus_residual(Locus("segment", 0, 1), on_seg, ab3) == \
        pytest.approx(0.0)


def test_ray_and_line_branches(ab3):
    beyond = MetricCoords((3.0, 1.0))        # past b on the axis
    between = MetricCoords((0.5, 1.5))
    behind = MetricCoords((1.0, 3.0))        # behind a, on the line only
    ray = Locus("ray", 0, 1)
    line = Locus("line", 0, 1)
    assert locus_residual(ray, beyond, ab3) == pytest.approx(0.0)
    assert matched_branch(ray, beyond, ab3) == "diff"
    assert locus_residual(ray, between, ab3) == pytest.approx(0.0)
    assert matched_branch(ray, between, ab3) == "sum"
    assert abs(locus_residual(ray, behind, ab3)) > 0.5
    assert locus_residual(line, behind, ab3) == pytest.approx(0.0)
    assert matched_branch(line, behind, ab3) == "diff"


def test_cylinder_heron_residual(ab3):
    # point (1, 1, 0): distance 1 from the axis; triangle area = 1
    c = core.coords_of(ab3, spaces.point(ab3.space, (1.0, 1.0, 0.0)),
                       warn_nonmember=False)
    assert locus_residual(Locus("cylinder", 0, 1, r=1.0), c, ab3) == \
        pytest.approx(0.0, abs=1e-12)
    # axis distance = 2 r / d(a,b)
    assert 2.0 * 1.0 / 2.0 == 1.0


def test_cylinder_infeasible_coords_raise(ab3):
    bad = MetricCoords((0.1, 0.1))
    with pytest.raises(InfeasibleCoordsError):
        locus_residual(Locus("cylinder", 0, 1, r=1.0), bad, ab3)


def test_cone_residual(ab3):
    # half angle 45 degrees at a, axis towards b: (1, 1, 0) lies on it
    c = core.coords_of(ab3, spaces.point(ab3.space, (1.0, 1.0, 0.0)),
                       warn_nonmember=False)
    assert locus_residual(Locus("cone", 0, 1, theta=math.pi / 4.0), c, ab3) \
        == pytest.approx(0.0, abs=1e-12)


def test_membership_and_gradient(ab3):
    ell = Locus("ellipsoid", 0, 1, r=3.0)
    c = MetricCoords((1.2, 1.8))
    assert locus_membership(ell, c, ab3, tol=1e-9)
    assert not locus_membership(ell, MetricCoords((2.0, 2.0)), ab3, tol=1e-9)
    grad = residual_gradient(ell, c, ab3)
    assert np.allclose(grad, (1.0, 1.0))
    hyp = Locus("hyperboloid", 0, 1, r=0.6)
    assert np.allclose(residual_gradient(hyp, MetricCoords((1.8, 1.2)), ab3),
                       (1.0, -1.0))
    assert np.allclose(residual_gradient(hyp, MetricCoords((1.2, 1.8)), ab3),
                       (-1.0, 1.0))


# ---------------------------------------------------------------------------
# sampling


def test_sample_ellipsoid_ambient_equation(ab3):
    pts = sample_locus(Locus("ellipsoid", 0, 1, r=3.0), ab3, 40, seed=1)
    assert len(pts) == 40
    for p in pts:
        da = np.linalg.norm(p.data)
        db = np.linalg.norm(p.data - np.array([2.0, 0.0, 0.0]))
        assert da + db == pytest.approx(3.0, abs=1e-7)


def test_sample_sphere_locus_determinism(ab3):
    a = sample_locus(Locus("sphere", 0, r=1.5), ab3, 10, seed=7)
    b = sample_locus(Locus("sphere", 0, r=1.5), ab3, 10, seed=7)
    for p, q in zip(a, b):
        assert np.array_equal(p.data, q.data)
    for p in a:
        assert np.linalg.norm(p.data) == pytest.approx(1.5, abs=1e-7)


def test_sample_cylinder_axis_distance(ab3):
    pts = sample_locus(Locus("cylinder", 0, 1, r=1.0), ab3, 20, seed=3)
    for p in pts:
        axis_dist = math.hypot(p.data[1], p.data[2])
        assert axis_dist == pytest.approx(1.0, abs=1e-6)


def test_sample_on_geodesic_sphere(sphere3):
    pts = sample_locus(Locus("sphere", 0, r=1.0), sphere3, 15, seed=5)
    for p in pts:
        assert np.linalg.norm(p.data) == pytest.approx(1.0, abs=1e-12)
        angle = math.acos(float(np.clip(p.data[0], -1.0, 1.0)))
        assert angle == pytest.approx(1.0, abs=1e-7)


def test_sample_locus_respects_membership():
    # sphere around the ground observer dips below the half space: every
    # projected point that survives must still be a member
    sp = spaces.euclidean(3, spaces.Subset("half_space"))
    system = CoordinateSystem(
        space=sp,
        coords=(spaces.point(sp, (1.0, 0.0, 0.0)),
                spaces.point(sp, (0.0, 0.0, 0.0))),
        base_point=spaces.point(sp, (0.0, 0.0, 1.0)))
    pts = sample_locus(Locus("sphere", 1, r=1.5), system, 30, seed=3)
    assert len(pts) == 30
    for p in pts:
        assert system.member(p)
        assert p.data[2] > 0.0
        assert np.linalg.norm(p.data) == pytest.approx(1.5, abs=1e-7)


def test_sample_locus_empty_budget(ab3):
    # box collapsed onto the sphere center: the radial gradient vanishes
    # there and the projection can never leave, so the budget runs out
    degenerate = ((0.0, 0.0, 0.0), (0.0, 0.0, 0.0))
    with pytest.raises(EmptyLocusError):
        sample_locus(Locus("sphere", 0, r=1.0), ab3, 5, seed=0,
                     box=degenerate)


def test_sample_locus_count_validation(ab3):
    with pytest.raises(InvalidInputError):
        sample_locus(Locus("sphere", 0, r=1.0), ab3, 0, seed=0)
