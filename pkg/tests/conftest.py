import pytest
from hypothesis import HealthCheck, settings

from gcpref.model import degree_table
from gcpref.workbench import open_dataset

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

_LINES = pytest.StashKey[dict]()


@pytest.fixture(scope="session")
def running():
    return open_dataset("running_example")


@pytest.fixture(scope="session")
def running_table(running):
    return degree_table(running)


@pytest.fixture
def verdict(request):
    """``verdict(n, ok, detail)`` records one acceptance line, shown in the summary."""
    lines = request.config.stash.setdefault(_LINES, {})

    def record(n, ok, detail):
        lines[n] = f"criterion {n}: {'PASS' if ok else 'FAIL'} {detail}"
        return ok

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_LINES, {})
    if lines:
        terminalreporter.section("acceptance")
        for n in sorted(lines):
            terminalreporter.write_line(lines[n])
