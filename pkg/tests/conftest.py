"""Shared fixtures: the half-space observation system and friends."""

import numpy as np
import pytest

from metrikos import spaces
from metrikos.core import CoordinateSystem
from metrikos.spaces import Subset


@pytest.fixture(scope="session")
def h3():
    # three ground observers a, b, c; X is the open upper half space
    sp = spaces.euclidean(3, Subset("half_space"))
    pts = tuple(spaces.point(sp, p)
                for p in ((1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, 0.0, 0.0)))
    base = spaces.point(sp, (0.0, 0.0, 1.0))
    return CoordinateSystem(space=sp, coords=pts, base_point=base,
                            labels=("a", "b", "c"))


@pytest.fixture(scope="session")
def plane2():
    # two-observer plane system; not coordinatizing (mirror symmetry)
    sp = spaces.euclidean(2)
    pts = (spaces.point(sp, (0.0, 0.0)), spaces.point(sp, (1.0, 0.0)))
    base = spaces.point(sp, (0.5, 0.5))
    return CoordinateSystem(space=sp, coords=pts, base_point=base,
                            labels=("a", "b"))


@pytest.fixture(scope="session")
def sphere3():
    sp = spaces.sphere_geodesic()
    pts = tuple(spaces.point(sp, np.eye(3)[k]) for k in range(3))
    base = spaces.point(sp, np.ones(3) / np.sqrt(3.0))
    return CoordinateSystem(space=sp, coords=pts, base_point=base,
                            labels=("a", "b", "c"))


def h3_random_starts(h3, count, seed):
    # feasible starts clear of the ground plane, z in [0.9, 1.3]
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        xy = rng.uniform(0.4, 0.6, size=2)
        z = rng.uniform(0.9, 1.3)
        out.append(spaces.point(h3.space, (xy[0], xy[1], z)))
    return out
