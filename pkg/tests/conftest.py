from fractions import Fraction

import pytest
from hypothesis import HealthCheck, settings
from pyolcpm import GraphicMatroid, OlcpmInstance, UniformMatroid, UpmInstance

# generated examples depend on the test alone, so every run draws the same ones
settings.register_profile(
    "pyolcpm",
    derandomize=True,
    database=None,
    deadline=None,
    suppress_health_check=[
        HealthCheck.too_slow,
        HealthCheck.data_too_large,
        HealthCheck.large_base_example,
    ],
)
settings.load_profile("pyolcpm")


@pytest.fixture
def instance_w() -> OlcpmInstance:
    """Two elements on a rank-1 uniform matroid, the optimum is 4 at alpha 1/3."""
    return OlcpmInstance(
        UniformMatroid(2, 1),
        [
            (1, [(10, "1/2"), (0, "1/2")]),
            (0, [(4, "1/2"), (0, "1/2")]),
        ],
    )


@pytest.fixture
def single_element() -> OlcpmInstance:
    return OlcpmInstance(UniformMatroid(1, 1), [(1, [(10, "1/2"), (0, "1/2")])])


@pytest.fixture
def deterministic_element() -> OlcpmInstance:
    return OlcpmInstance(UniformMatroid(1, 1), [(1, [(10, 1)])])


@pytest.fixture
def zero_cost_pair() -> OlcpmInstance:
    """Two free elements worth 8 and 10 competing for a rank-1 matroid."""
    return OlcpmInstance(UniformMatroid(2, 1), [(0, [(8, 1)]), (0, [(10, 1)])])


@pytest.fixture
def series_upm() -> UpmInstance:
    """Path s-u-t plus the special edge (s, t); the answer is 3/4."""
    return UpmInstance(
        GraphicMatroid(3, [(0, 1), (1, 2), (0, 2)]), 2, {0: "1/2", 1: "1/2"}
    )


@pytest.fixture
def rank_one_upm():
    """Build a special element parallel to one element of the given probability."""

    def build(p: str) -> UpmInstance:
        return UpmInstance(UniformMatroid(2, 1), 1, {0: Fraction(p)})

    return build
