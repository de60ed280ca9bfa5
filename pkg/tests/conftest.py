import math

import pytest
from hypothesis import settings

from convex_billiards.geometry import Ellipse, FourierRadial, circle

settings.register_profile("default", max_examples=25, deadline=None, derandomize=True)
settings.load_profile("default")


@pytest.fixture(scope="session")
def unit_circle():
    return circle(1.0)


@pytest.fixture(scope="session")
def ellipse21():
    return Ellipse(2.0, 1.0)


@pytest.fixture(scope="session")
def ellipse12():
    return Ellipse(1.2, 1.0)


@pytest.fixture(scope="session")
def ellipse15():
    return Ellipse(1.5, 1.0)


@pytest.fixture(scope="session")
def trefoil():
    """``r = 1 + 0.01 cos 3t``, the standard simple-nondegenerate table."""
    return FourierRadial(1.0, (0.0, 0.0, 0.01))


@pytest.fixture(scope="session")
def generic():
    """A perturbation without rotational symmetry."""
    return FourierRadial(1.0, (0.0, 0.02, 0.01), (0.0, 0.01))


@pytest.fixture(scope="session")
def tables(unit_circle, ellipse12, generic):
    return {"circle": unit_circle, "ellipse": ellipse12, "fourier": generic}


def ellipse_curvature(a, b, phi):
    return a * b / (a * a * math.sin(phi) ** 2 + b * b * math.cos(phi) ** 2) ** 1.5
