import sys

import pytest

from mppcf import REFERENCE_PRESET


@pytest.fixture
def p():
    return REFERENCE_PRESET


def pytest_terminal_summary(terminalreporter):
    # repeat the acceptance lines so they show even with output capture on
    for name, mod in list(sys.modules.items()):
        if name.rsplit(".", 1)[-1] == "test_acceptance" and getattr(mod, "RESULTS", None):
            terminalreporter.section("acceptance criteria")
            for line in mod.RESULTS:
                terminalreporter.write_line(line)
