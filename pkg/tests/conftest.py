import random

import pytest

from builders import make_snapshot  # noqa: F401
from cascadescan.semantics import load_cheatsheet


@pytest.fixture(scope="session")
def cheatsheet():
    return load_cheatsheet()


@pytest.fixture(scope="session")
def snapshot():
    return make_snapshot()


@pytest.fixture()
def rng():
    return random.Random(1234)
