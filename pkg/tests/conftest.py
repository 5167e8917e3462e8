import re

_ACCEPTANCE: dict = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    m = re.search(r"::test_c(\d+)_(\w+)", report.nodeid)
    if not m:
        return
    key = (int(m.group(1)), m.group(2).replace("_", " "))
    failed = report.failed or (report.when == "call" and report.outcome != "passed")
    if report.when == "call" or failed:
        _ACCEPTANCE[key] = _ACCEPTANCE.get(key, True) and not failed


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for (n, title), ok in sorted(_ACCEPTANCE.items()):
        terminalreporter.write_line(f"C{n:<2} {'PASS' if ok else 'FAIL'}  {title}")
