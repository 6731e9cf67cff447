import pytest

from derivkit.theories import build_pool


@pytest.fixture(scope="session")
def pool_and_results():
    return build_pool(0)


@pytest.fixture(scope="session")
def pool(pool_and_results):
    return pool_and_results[0]


@pytest.fixture(scope="session")
def results(pool_and_results):
    return pool_and_results[1]
