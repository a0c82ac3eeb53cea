import sys
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large])
settings.register_profile("ci", deadline=None, max_examples=15,
                          suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large])
settings.load_profile("default")

CRITERIA = pytest.StashKey[dict]()


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion n")
    config.stash[CRITERIA] = {}


def pytest_runtest_makereport(item, call):
    m = item.get_closest_marker("criterion")
    if m is None or call.when != "call":
        return
    n, title = m.args
    detail = dict(item.user_properties).get("detail", "")
    ok = call.excinfo is None
    if not ok:
        detail = f"{call.excinfo.typename}: {str(call.excinfo.value).splitlines()[0] if str(call.excinfo.value) else ''}"
    item.config.stash[CRITERIA][n] = (ok, title, detail)


def pytest_terminal_summary(terminalreporter, config):
    res = config.stash[CRITERIA]
    if not res:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for n in sorted(res):
        ok, title, detail = res[n]
        terminalreporter.write_line(f"criterion {n} {'PASS' if ok else 'FAIL'}: {title} ({detail})")
