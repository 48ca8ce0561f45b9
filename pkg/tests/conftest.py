import pytest

from resdrift.integrable import build_integrable
from resdrift.path import FrequencyPath
from resdrift.scenario import load_scenario

#: criterion number -> (passed, message); filled by the acceptance tests
ACCEPTANCE = {}


@pytest.fixture(scope="session")
def torus_path():
    return FrequencyPath((0.0, -1.0), (1.0,), (-1.0, 1.0))


@pytest.fixture(scope="session")
def elliptic_path():
    return FrequencyPath((-1.0,), (1.0, 1.0), (-0.5, 0.5))


@pytest.fixture(scope="session")
def torus_model(torus_path):
    return build_integrable(torus_path)


@pytest.fixture(scope="session")
def elliptic_model(elliptic_path):
    return build_integrable(elliptic_path)


@pytest.fixture(scope="session")
def torus_scenario():
    return load_scenario("torus_example")


@pytest.fixture(scope="session")
def elliptic_scenario():
    return load_scenario("elliptic_example")


@pytest.fixture(scope="session")
def torus_system(torus_scenario):
    return torus_scenario.system()


@pytest.fixture(scope="session")
def elliptic_system(elliptic_scenario):
    return elliptic_scenario.system()


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for cid in sorted(ACCEPTANCE):
        ok, msg = ACCEPTANCE[cid]
        terminalreporter.write_line(f"criterion {cid}: {'PASS' if ok else 'FAIL'}  {msg}")
