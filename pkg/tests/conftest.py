from pathlib import Path

import pytest

from evasion_sim.perception import DetectionProfile

EDGES = (4, 5, 10, 15, 20, 25, 30, 35, 40, 45)


def flat_profile(rate: float, label: str = "flat") -> DetectionProfile:
    return DetectionProfile(label, tuple((lo, hi, rate) for lo, hi in zip(EDGES[:-1], EDGES[1:])))


@pytest.fixture
def perfect():
    return flat_profile(1.0, "perfect")


@pytest.fixture
def blind():
    return flat_profile(0.0, "blind")


@pytest.fixture
def scenario_dir() -> Path:
    return Path(__file__).resolve().parents[1] / "src" / "evasion_sim" / "data" / "scenarios"


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
