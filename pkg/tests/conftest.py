import re

_CRITERIA = {}


def pytest_runtest_logreport(report):
    m = re.search(r"test_acceptance\.py::test_criterion_(\d+)_(\w+)", report.nodeid)
    if not m:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        detail = dict(report.user_properties).get("detail", "")
        _CRITERIA[int(m.group(1))] = (m.group(2), report.outcome, report.duration, detail)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_CRITERIA):
        name, outcome, duration, detail = _CRITERIA[num]
        status = "PASS" if outcome == "passed" else "FAIL"
        line = f"criterion {num} {name}: {status} ({duration:.2f}s)"
        if detail:
            line += f" {detail}"
        terminalreporter.write_line(line)
