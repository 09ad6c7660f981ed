from __future__ import annotations

import pytest

from errandlab.config import default_config
from errandlab.simulate import default_profile, null_profile, perfect_profile


@pytest.fixture(scope="session")
def config():
    return default_config()


@pytest.fixture(scope="session")
def perfect():
    return perfect_profile()


@pytest.fixture(scope="session")
def null():
    return null_profile()


@pytest.fixture(scope="session")
def typical():
    return default_profile()
