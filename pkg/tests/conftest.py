import math
import sys
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

from otelbaev.coefficient import catalog_example1, catalog_example2, constant, square

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile("default", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def const1():
    return constant(1.0)


@pytest.fixture(scope="session")
def sq():
    return square()


@pytest.fixture(scope="session")
def ex2():
    return catalog_example2()


@pytest.fixture(scope="session")
def ex1():
    return catalog_example1(0.3, 0.4)


E = math.e
