import sys
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile(
    "default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@pytest.fixture(scope="session")
def h2():
    from adaptvqe.chem import load_h2

    return load_h2()


@pytest.fixture(scope="session")
def fci(h2):
    from adaptvqe.simstate import exact_ground

    return exact_ground(h2.hamiltonian)[0]


# acceptance lines collected by tests/test_acceptance.py
ACCEPTANCE: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: (int(s.split()[1].rstrip(":").rstrip("abcdefgh")), s)):
            terminalreporter.write_line(line)
