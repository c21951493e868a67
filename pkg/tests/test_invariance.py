import numpy as np
import pytest

from metrikos import core, spaces
from metrikos.errors import InvalidInputError
from metrikos.fields import (ConservationLaw, constant_field, eval_field,
                             field_on_vectors, integrate_coords)
from metrikos.invariance import (CoordSet, implicit_set, invariance_test,
                                 law_level_set, nagumo_check,
                                 nagumo_residual, sampled_set, set_distance)


# ---------------------------------------------------------------------------
# coordinate sets and distances


def test_sampled_set_distance_is_sup_norm():
    cloud = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 2.0]])
    S = sampled_set(cloud, resolution=0.5)
    assert set_distance(S, (0.2, 0.1)) == pytest.approx(0.2)
    assert set_distance(S, (1.0, 0.0)) == 0.0
    assert set_distance(S, (0.0, 3.0)) == pytest.approx(1.0)
    assert S.resolution == 0.5


def test_implicit_set_distance_gradient_scaling():
    # residual 3 x_0: |residual| / |grad|_inf recovers the true distance
    S = implicit_set(lambda w: 3.0 * w[0])
    assert set_distance(S, (2.0, 7.0)) == pytest.approx(2.0, abs=1e-6)
    with_grad = implicit_set(lambda w: 3.0 * w[0],
                             grad_fn=lambda w: np.array([3.0, 0.0]))
    assert set_distance(with_grad, (2.0, 7.0)) == pytest.approx(2.0)


def test_implicit_set_calibration_and_cloud_cap():
    S = implicit_set(lambda w: w[0], calibration=10.0,
                     cloud=np.array([[0.0, 0.0]]))
    # calibrated estimate 5.0 capped by the cloud distance 0.5
    assert set_distance(S, (0.5, 0.0)) == pytest.approx(0.5)


def test_coord_set_validation():
    with pytest.raises(InvalidInputError):
        CoordSet(kind="fuzzy")
    with pytest.raises(InvalidInputError):
        CoordSet(kind="sampled")
    with pytest.raises(InvalidInputError):
        CoordSet(kind="implicit")
    with pytest.raises(InvalidInputError):
        sampled_set(np.zeros((0, 2)))


# ---------------------------------------------------------------------------
# tangency residuals


def test_nagumo_residual_outward_unit_speed():
    # distance to the hyperplane x_0 = 0 grows at exactly the field speed
    S = implicit_set(lambda w: w[0], grad_fn=lambda w: np.array([1.0, 0.0]))
    outward = lambda w: np.array([1.0, 0.0])
    r = nagumo_residual(outward, S, np.array([0.0, 0.3]), h=1e-3)
    assert r == pytest.approx(1.0, abs=1e-9)
    with pytest.raises(InvalidInputError):
        nagumo_residual(outward, S, np.array([0.0, 0.3]), h=0.0)


def test_nagumo_check_tangent_field():
    # rotation field is tangent to every circle around the origin
    def residual(w):
        return float(w[0] * w[0] + w[1] * w[1] - 1.0)

    S = implicit_set(residual)
    spin = lambda w: np.array([-w[1], w[0]])
    angles = np.linspace(0.0, 2.0 * np.pi, 12, endpoint=False)
    on_circle = [np.array([np.cos(a), np.sin(a)]) for a in angles]
    report = nagumo_check(spin, S, on_circle, K=0.0)
    assert report.ok
    assert np.max(report.limsups) <= 0.02
    assert np.max(report.distances) < 1e-9


def test_nagumo_check_flags_outward_field():
    S = implicit_set(lambda w: w[0], grad_fn=lambda w: np.array([1.0, 0.0]))
    outward = lambda w: np.array([1.0, 0.0])
    report = nagumo_check(outward, S, [np.array([0.0, 0.0])], K=0.0)
    assert not report.ok
    v = report.violations[0]
    assert v.sample_index == 0
    assert v.limsup == pytest.approx(1.0, abs=0.02)
    assert v.margin > 0.9


def test_nagumo_check_respects_K_slack():
    # field speed equals the distance from S: K = 1 covers it, K = 0 not
    S = implicit_set(lambda w: w[0], grad_fn=lambda w: np.array([1.0, 0.0]))
    growing = lambda w: np.array([max(w[0], 0.0), 0.0])
    off = [np.array([0.5, 0.0])]
    assert nagumo_check(growing, S, off, K=1.1).ok
    assert not nagumo_check(growing, S, off, K=0.0).ok


def test_nagumo_check_validation():
    S = implicit_set(lambda w: w[0])
    fn = lambda w: np.zeros(2)
    with pytest.raises(InvalidInputError):
        nagumo_check(fn, S, [])
    with pytest.raises(InvalidInputError):
        nagumo_check(fn, S, [np.zeros(2)], h_seq=(1e-3,))
    with pytest.raises(InvalidInputError):
        nagumo_check(fn, S, [np.zeros(2)], h_seq=(1e-3, 1e-2, 1e-1))


# ---------------------------------------------------------------------------
# invariance along trajectories


def test_invariance_of_conserved_level_set(h3):
    drift = constant_field((1.0, -1.0, 0.0))
    x0 = spaces.point(h3.space, (0.5, 0.5, 1.0))
    traj = integrate_coords(drift, h3, x0, t_end=0.5, step=1e-3)
    law = ConservationLaw("ellipsoid", (0, 1))
    S = law_level_set(law, traj.coords[0], n=3)
    result = invariance_test(traj, S, tol=1e-6)
    assert result
    assert result.first_exit is None
    assert result.max_distance < 1e-9


def test_invariance_detects_exit(h3):
    drift = constant_field((1.0, -1.0, 0.0))
    x0 = spaces.point(h3.space, (0.5, 0.5, 1.0))
    traj = integrate_coords(drift, h3, x0, t_end=0.5, step=1e-3)
    # x_a is not conserved by this flow, so its level set is left at once
    wrong = ConservationLaw("sphere", (0,))
    S = law_level_set(wrong, traj.coords[0], n=3)
    result = invariance_test(traj, S, tol=1e-6)
    assert not result
    assert result.first_exit == 1
    assert result.max_distance == pytest.approx(0.5, abs=1e-9)


def test_invariance_empty_trajectory_rejected(h3):
    drift = constant_field((1.0, -1.0, 0.0))
    x0 = spaces.point(h3.space, (0.5, 0.5, 1.0))
    traj = integrate_coords(drift, h3, x0, t_end=0.01, step=1e-3)
    traj.coords = []
    traj.times = np.array([])
    with pytest.raises(InvalidInputError):
        invariance_test(traj, implicit_set(lambda w: w[0]), tol=1e-6)


def test_law_level_set_geometry():
    law = ConservationLaw("hyperboloid", (0, 1))
    S = law_level_set(law, (2.0, 0.5, 1.0), n=3)
    # residual: (x_0 - x_1) - 1.5
    assert set_distance(S, (2.0, 0.5, 9.0)) == 0.0
    assert set_distance(S, (2.5, 0.5, 1.0)) == pytest.approx(0.5)
    assert S.grad_fn(np.zeros(3)) @ np.array([1.0, 1.0, 0.0]) == 0.0


def test_nagumo_on_detected_law_with_coord_field(h3):
    # adapter + level set of the conserved sum: residuals vanish
    drift = constant_field((1.0, -1.0, 0.0))
    law = ConservationLaw("ellipsoid", (0, 1))
    probes = core.sample_feasible_coords(h3, 12, seed=6)
    S = law_level_set(law, probes[0], n=3)
    on_set = [p.values for p in probes
              if abs(law.level_value(p) - law.level_value(probes[0])) < 2.0]
    # project the probes onto the level set along the gradient direction
    g = law.gradient(3) / 2.0
    shifted = [w - (law.level_value(w) - law.level_value(probes[0])) * g
               for w in on_set]
    report = nagumo_check(field_on_vectors(drift), S, shifted, K=0.0)
    assert report.ok
    assert np.max(np.abs(report.limsups)) <= 0.02
