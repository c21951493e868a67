import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from metrikos import spaces
from metrikos.errors import InvalidInputError, ShapeMismatchError
from metrikos.spaces import Subset


# ---------------------------------------------------------------------------
# metrics


def test_euclidean_distance_matches_norm():
    sp = spaces.euclidean(3)
    x = spaces.point(sp, (1.0, 2.0, 3.0))
    y = spaces.point(sp, (4.0, 6.0, 3.0))
    assert spaces.distance(sp, x, y) == pytest.approx(5.0, abs=1e-15)


@given(st.lists(st.floats(-100, 100), min_size=2, max_size=2),
       st.lists(st.floats(-100, 100), min_size=2, max_size=2))
def test_sup_plane_distance(xa, ya):
    sp = spaces.sup_metric_plane()
    x = spaces.point(sp, xa)
    y = spaces.point(sp, ya)
    expect = max(abs(xa[0] - ya[0]), abs(xa[1] - ya[1]))
    assert spaces.distance(sp, x, y) == pytest.approx(expect, abs=1e-12)


def test_discrete_distance_zero_one():
    sp = spaces.discrete_space(4)
    a = spaces.point(sp, 0)
    b = spaces.point(sp, 3)
    assert spaces.distance(sp, a, a) == 0.0
    assert spaces.distance(sp, a, b) == 1.0


def test_sphere_geodesic_known_angles():
    sp = spaces.sphere_geodesic()
    e1 = spaces.point(sp, (1.0, 0.0, 0.0))
    e2 = spaces.point(sp, (0.0, 1.0, 0.0))
    anti = spaces.point(sp, (-1.0, 0.0, 0.0))
    assert spaces.distance(sp, e1, e2) == pytest.approx(math.pi / 2, abs=1e-12)
    assert spaces.distance(sp, e1, anti) == pytest.approx(math.pi, abs=1e-12)
    assert spaces.distance(sp, e1, e1) == 0.0


def test_sphere_point_needs_unit_norm():
    sp = spaces.sphere_geodesic()
    with pytest.raises(InvalidInputError):
        spaces.point(sp, (1.0, 1.0, 0.0))


def test_point_shape_and_finiteness_checks():
    sp = spaces.euclidean(2)
    with pytest.raises(ShapeMismatchError):
        spaces.point(sp, (1.0, 2.0, 3.0))
    with pytest.raises(InvalidInputError):
        spaces.point(sp, (np.nan, 0.0))


def test_distances_to_many_matches_pairwise():
    sp = spaces.euclidean(3)
    rng = np.random.default_rng(0)
    pts = [spaces.point(sp, rng.normal(size=3)) for _ in range(5)]
    x = spaces.point(sp, rng.normal(size=3))
    stacked = spaces.stack_points(sp, pts)
    many = spaces.distances_to_many(sp, stacked, x)
    single = [spaces.distance(sp, p, x) for p in pts]
    assert np.allclose(many, single, atol=1e-14)


# ---------------------------------------------------------------------------
# subsets


def test_half_space_membership_and_alias():
    sp = spaces.euclidean(3, Subset("half_space"))
    assert spaces.member(sp, spaces.point(sp, (0, 0, 0.1)))
    assert not spaces.member(sp, spaces.point(sp, (0, 0, 0.0)))
    alias = Subset("half_plane")
    assert alias.kind == "half_space"


def test_custom_halfspace():
    sub = Subset("halfspace", normal=(1.0, -1.0), offset=0.5)
    sp = spaces.euclidean(2, sub)
    assert spaces.member(sp, spaces.point(sp, (2.0, 0.0)))
    assert not spaces.member(sp, spaces.point(sp, (0.0, 0.0)))
    with pytest.raises(InvalidInputError):
        Subset("halfspace")


@pytest.mark.parametrize("y,inside", [
    (0.5, True), (0.0, False), (1.0, False), (1.5, False),
    (2.0, True), (2.5, True), (3.0, False), (4.7, True), (5.0, False),
    (-1.0, False), (-3.0, True), (-3.5, True), (-4.0, False), (-5.2, True),
])
def test_open_strips_truth_table(y, inside):
    sp = spaces.euclidean(2, Subset("open_strips"))
    assert spaces.member(sp, spaces.point(sp, (0.3, y))) is inside


@pytest.mark.parametrize("p,inside", [
    ((1.0, 2.0), True), ((0.0, 2.0), False), ((0.0, -1.0), True),
    ((1.0, 0.0), False), ((-2.0, 1.5), True), ((3.0, 1.0), False),
])
def test_slit_plane_truth_table(p, inside):
    sp = spaces.euclidean(2, Subset("slit_plane"))
    assert spaces.member(sp, spaces.point(sp, p)) is inside


@pytest.mark.parametrize("p,inside", [
    ((1.0, 1.0), True),
    ((0.0, -1.0), False),          # box center v sits on the slit x - y = 1
    ((1.1, 0.1), False),           # slit line again
    ((1.2, 1.2), True), ((1.3, 0.9), False), ((0.2, -0.9), True),
    ((0.5, 0.5), False),
])
def test_sup_slit_boxes_truth_table(p, inside):
    sp = spaces.sup_metric_plane(Subset("sup_slit_boxes"))
    assert spaces.member(sp, spaces.point(sp, p)) is inside


def test_unknown_subset_kind_rejected():
    with pytest.raises(InvalidInputError):
        Subset("doughnut")


# ---------------------------------------------------------------------------
# grid function space


def test_grid_indicator_overlap_distance():
    # || chi_[0,1] - chi_[t,t+1] ||_2 = sqrt(2 t) for t in [0, 1]
    sp = spaces.grid_function_space(-2.0, 4.0, 600)
    for t in (0.0, 0.1, 0.25, 0.5, 1.0):
        f = spaces.grid_indicator(sp, 0.0)
        g = spaces.grid_indicator(sp, t)
        assert spaces.distance(sp, f, g) == pytest.approx(
            math.sqrt(2.0 * t), abs=2e-2)


def test_grid_indicator_node_aligned_correction():
    # coverage averaging halves the four jump nodes, so the squared
    # quadrature distance at a node-aligned half shift is exactly 1 - h
    for cells in (600, 6000):
        sp = spaces.grid_function_space(-2.0, 4.0, cells)
        f = spaces.grid_indicator(sp, 0.0)
        g = spaces.grid_indicator(sp, 0.5)
        h = 6.0 / cells
        assert spaces.distance(sp, f, g) ** 2 == pytest.approx(
            1.0 - h, abs=1e-12)


def test_grid_hat_and_eval():
    sp = spaces.grid_function_space(-1.0, 1.0, 200)
    hat = spaces.grid_hat(sp, 0.0, 0.5)
    assert spaces.grid_eval(sp, hat, 0.0) == pytest.approx(1.0)
    assert spaces.grid_eval(sp, hat, 0.25) == pytest.approx(0.5)
    assert spaces.grid_eval(sp, hat, 0.6) == 0.0


def test_grid_space_validation():
    with pytest.raises(InvalidInputError):
        spaces.grid_function_space(1.0, 0.0, 10)
    with pytest.raises(InvalidInputError):
        spaces.grid_function_space(0.0, 1.0, 0)
