import os

import pytest

_CRITERIA: dict[str, tuple[str, str]] = {}


def pytest_collection_modifyitems(config, items):
    if os.environ.get("SAXSCAN_FULLSCALE") == "1":
        return
    skip = pytest.mark.skip(reason="full-scale run; set SAXSCAN_FULLSCALE=1")
    for item in items:
        if "fullscale" in item.keywords:
            item.add_marker(skip)


def pytest_runtest_logreport(report):
    name = report.nodeid.split("::")[-1]
    if not name.startswith("test_criterion_"):
        return
    detail = dict(report.user_properties).get("detail", "")
    if report.when == "call":
        status = {"passed": "PASS", "failed": "FAIL", "skipped": "SKIP"}[report.outcome]
    elif report.when == "setup" and report.skipped:
        status = "SKIP"
        detail = report.longrepr[2] if isinstance(report.longrepr, tuple) else ""
    elif report.failed:
        status = "ERROR"
    else:
        return
    _CRITERIA[name] = (status, detail)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_CRITERIA, key=lambda n: int(n.split("_")[2])):
        status, detail = _CRITERIA[name]
        terminalreporter.write_line(f"{status:5s} {name}: {detail}")
