"""Report one pass/fail line per acceptance criterion at the end of the run."""

import pytest

_OUTCOMES: dict = {}
_TITLES: dict = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion this test checks")


def pytest_collection_modifyitems(items):
    for item in items:
        mark = item.get_closest_marker("criterion")
        if mark is not None:
            num, title = mark.args
            _TITLES[num] = title
            _OUTCOMES.setdefault(num, [])
            item.user_properties.append(("criterion", num))


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _OUTCOMES[mark.args[0]].append((item.name, report.outcome))


def pytest_terminal_summary(terminalreporter):
    if not _OUTCOMES:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for num in sorted(_OUTCOMES):
        results = _OUTCOMES[num]
        if not results:
            status = "NOT RUN"
        elif all(o == "passed" for _, o in results):
            status = "PASS"
        elif any(o == "failed" for _, o in results):
            status = "FAIL"
        else:
            status = "SKIP"
        detail = ", ".join(f"{name}={o}" for name, o in results if o != "passed")
        tr.write_line(f"criterion {num:>2} {status:<7} {_TITLES[num]}" + (f"  [{detail}]" if detail else ""))
