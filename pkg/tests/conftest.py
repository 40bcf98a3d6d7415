import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=25,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

# criterion number -> (title, outcome, detail lines)
_CRITERIA: dict = {}
_DETAILS: dict = {}
_SETUP: dict = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion n")


@pytest.fixture
def record(request):
    """Attach human-readable measurements to the running acceptance criterion."""
    marker = request.node.get_closest_marker("criterion")
    key = marker.args[0] if marker else request.node.name

    def add(line: str):
        _DETAILS.setdefault(key, []).append(line)
    return add


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    n, title = marker.args[0], marker.args[1]
    if rep.when == "setup":
        # shared fixtures run here; their time is charged to the first criterion using them
        _SETUP[n] = rep.duration
        if rep.outcome != "passed":
            _CRITERIA[n] = (title, rep.outcome, rep.duration)
    elif rep.when == "call":
        _CRITERIA[n] = (title, rep.outcome, rep.duration + _SETUP.get(n, 0.0))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        title, outcome, duration = _CRITERIA[n]
        status = "PASS" if outcome == "passed" else "FAIL"
        tr.write_line(f"criterion {n:2d} {status}  {title}  ({duration:.1f} s)")
        for line in _DETAILS.get(n, []):
            tr.write_line(f"      {line}")


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)
