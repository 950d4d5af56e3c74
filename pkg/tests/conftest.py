import re

_CRITERIA = {}


def pytest_runtest_logreport(report):
    match = re.search(r"test_acceptance\.py::test_criterion_(\d+)", report.nodeid)
    if not match:
        return
    if report.when == "call" or (report.when == "setup" and not report.passed):
        number = int(match.group(1))
        ok, details = _CRITERIA.get(number, (True, []))
        detail = dict(report.user_properties).get("detail", "")
        _CRITERIA[number] = (ok and report.passed, details + ([detail] if detail else []))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for number in sorted(_CRITERIA):
        ok, details = _CRITERIA[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {' | '.join(details)}")
