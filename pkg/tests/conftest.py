import re
from collections import defaultdict

_CRITERION = re.compile(r"test_acceptance\.py::test_criterion_(\d+)")
_results = defaultdict(list)


def pytest_runtest_logreport(report):
    m = _CRITERION.search(report.nodeid)
    if not m:
        return
    if report.when == "call" or (report.when == "setup" and not report.passed):
        details = [str(v) for k, v in report.user_properties if k == "detail"]
        _results[int(m.group(1))].append((report.nodeid.split("::")[-1], report.passed, details))


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_results):
        parts = _results[number]
        status = "PASS" if all(ok for _, ok, _ in parts) else "FAIL"
        terminalreporter.write_line(f"criterion {number}: {status}")
        for name, ok, details in parts:
            suffix = f" ({'; '.join(details)})" if details else ""
            terminalreporter.write_line(f"    {'pass' if ok else 'FAIL'} {name}{suffix}")
