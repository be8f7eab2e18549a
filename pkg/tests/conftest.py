import json
from pathlib import Path

import pytest

from wtransfer.kernels import BACKENDS

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(params=sorted(BACKENDS))
def backend(request):
    return request.param


@pytest.fixture(scope="session")
def oracle_records():
    data = json.loads((FIXTURES / "oracle_records.json").read_text())
    return {case["id"]: case for case in data["cases"]}


_VERDICTS: dict[int, str] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): one acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or report.when != "call" and not (report.when == "setup" and report.failed):
        return
    number, title = marker.args
    detail = "; ".join(str(v) for k, v in report.user_properties if k == "detail")
    verdict = "PASS" if report.passed else "FAIL"
    line = f"criterion {number:>2} {verdict}  {title}"
    _VERDICTS[number] = line + (f"  [{detail}]" if detail else "")


def pytest_terminal_summary(terminalreporter):
    if not _VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_VERDICTS):
        terminalreporter.write_line(_VERDICTS[number])
