import numpy as np
import pytest

from torsionlab import builtin_chart


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


# sampling boxes keeping random points clear of guards and coordinate singularities
SAMPLE_BOXES = {
    "cartesian": ((-2.0, 2.0), (-2.0, 2.0)),
    "polar": ((0.4, 3.0), (-2.5, 2.5)),
    "sphere": ((0.35, np.pi - 0.35), (-np.pi, np.pi)),
    "dislocation": ((0.4, 2.5), (0.4, 2.5)),
    "disclination": ((0.4, 2.5), (0.4, 2.5)),
    "synthetic_torsion": ((-0.8, 2.0), (-2.0, 2.0)),
}


def sample_points(name, n, rng):
    box = SAMPLE_BOXES[name]
    lo = np.array([b[0] for b in box])
    hi = np.array([b[1] for b in box])
    return lo + (hi - lo) * rng.random((n, len(box)))


@pytest.fixture
def charts():
    return {
        "cartesian": builtin_chart("cartesian"),
        "polar": builtin_chart("polar"),
        "sphere": builtin_chart("sphere", r=1.0),
        "dislocation": builtin_chart("dislocation", eps=0.1),
        "disclination": builtin_chart("disclination", om=0.01),
        "synthetic_torsion": builtin_chart("synthetic_torsion", alpha=0.3),
    }
