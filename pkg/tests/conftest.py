import pytest

from bellpoly import reproduce


@pytest.fixture(scope="session")
def path_scenario():
    return reproduce.load_scenario("path")


@pytest.fixture(scope="session")
def cycle3_scenario():
    return reproduce.load_scenario("cycle3")


@pytest.fixture(scope="session")
def cycle4_scenario():
    return reproduce.load_scenario("cycle4")


@pytest.fixture(scope="session")
def chsh_scenario():
    return reproduce.load_scenario("chsh")


@pytest.fixture(scope="session")
def path_gap(path_scenario):
    return reproduce.load_behaviour("path_gap", path_scenario)


@pytest.fixture(scope="session")
def cycle3_lndnc(cycle3_scenario):
    return reproduce.load_behaviour("cycle3_lndnc", cycle3_scenario)


@pytest.fixture(scope="session")
def cycle3_lgnc(cycle3_scenario):
    return reproduce.load_behaviour("cycle3_lgnc", cycle3_scenario)
