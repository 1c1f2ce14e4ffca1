import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    n, title = mark.args
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        detail = getattr(item, "criterion_detail", "")
        _CRITERIA.setdefault(n, []).append((title, rep.passed, detail))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        parts = _CRITERIA[n]
        ok = all(p for _, p, _ in parts)
        details = "; ".join(d for _, _, d in parts if d)
        tr.write_line(f"criterion {n:2d} {'PASS' if ok else 'FAIL'}  {parts[0][0]}"
                      + (f"  [{details}]" if details else ""))


@pytest.fixture
def record(request):
    """Attach a measured-value summary to the acceptance line of this test."""
    def _record(text):
        prev = getattr(request.node, "criterion_detail", "")
        request.node.criterion_detail = f"{prev}, {text}" if prev else text
    return _record
