import math
import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from superlase.model import TWO_PI, PhysicalParams  # noqa: E402
from superlase.steady import find_steady  # noqa: E402

SQRT10 = math.sqrt(10.0)


def pytest_configure(config):
    config.addinivalue_line("markers", "property: fast property suites gating the acceptance run")


@pytest.fixture(scope="session")
def baseline():
    """Raman strength 2pi x sqrt(10) MHz, ratio sqrt(10), pump 2pi x 3 kHz."""
    return PhysicalParams.raman(TWO_PI * SQRT10 * 1e6, SQRT10, eta=TWO_PI * 3e3)


@pytest.fixture(scope="session")
def baseline_steady(baseline):
    ss = find_steady(baseline)
    assert ss.converged
    return ss


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    RESULTS = getattr(mod, "RESULTS", None)
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(RESULTS, key=lambda k: int(k)):
        terminalreporter.write_line(RESULTS[key])
