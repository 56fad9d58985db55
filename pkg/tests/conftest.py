import numpy as np
import pytest

from envsampling.envmap import ConstantSky, SunSky
from envsampling.importance import build_table
from envsampling.projection import LatLon, latlon_to_direction

SUN_AXIS = latlon_to_direction(LatLon(np.radians(35.0), np.radians(120.0)))
SUN_RADIUS = np.radians(2.0)


def sun_sky(sky=1.0, sun=1000.0, radius=SUN_RADIUS, axis=SUN_AXIS):
    return SunSky(axis, radius, sun, sky)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def constant_sky():
    return ConstantSky(0.75)


@pytest.fixture(scope="session")
def sun():
    return sun_sky()


@pytest.fixture(scope="session")
def sun_table_64(sun):
    return build_table(sun, 64, supersample=4)


# criterion number -> (passed, detail), filled by the acceptance tests
ACCEPTANCE_RESULTS: dict[int, tuple[bool, str]] = {}


def record_criterion(number: int, passed: bool, detail: str) -> None:
    ACCEPTANCE_RESULTS[number] = (bool(passed), detail)
    print(f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_RESULTS):
        passed, detail = ACCEPTANCE_RESULTS[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}")
