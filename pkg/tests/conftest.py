import numpy as np
import pytest

from dikin_oco import Barrier, Domain, interval


def hexagon():
    angles = np.linspace(0, 2 * np.pi, 6, endpoint=False) + np.array([0.0, 0.1, -0.05, 0.2, 0.0, -0.15])
    A = np.column_stack([np.cos(angles), np.sin(angles)])
    return Domain.polytope(A, -np.array([1.0, 0.8, 1.2, 0.9, 1.1, 1.0]))


DOMAINS = {
    "box1d": lambda: interval(),
    "box2d": lambda: Domain.box([-1.0, -1.0], [1.0, 1.0]),
    "box3d_skewed": lambda: Domain.box([-1.0, 0.0, 2.0], [0.5, 3.0, 2.5]),
    "ball2d": lambda: Domain.ball([0.0, 0.0], 1.0),
    "ball3d_offset": lambda: Domain.ball([1.0, -2.0, 0.5], 2.5),
    "polytope2d": hexagon,
}


@pytest.fixture(params=sorted(DOMAINS))
def any_domain(request):
    return DOMAINS[request.param]()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def box1d():
    return interval()


@pytest.fixture
def box1d_barrier(box1d):
    return Barrier(box1d)


@pytest.fixture
def ball2d():
    return Domain.ball([0.0, 0.0], 1.0)


def unit_vectors(rng, count, n):
    d = rng.standard_normal((count, n))
    return d / np.linalg.norm(d, axis=1, keepdims=True)
