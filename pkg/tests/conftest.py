import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

_criteria = {}


def pytest_runtest_logreport(report):
    if "criterion_id" not in dict(report.user_properties):
        return
    props = dict(report.user_properties)
    key = props["criterion_id"]
    if report.when == "call" or report.outcome == "failed":
        prev = _criteria.get(key, (props["criterion_text"], "PASS"))
        status = "FAIL" if report.outcome == "failed" or prev[1] == "FAIL" else "PASS"
        if report.outcome == "skipped":
            status = "SKIP"
        _criteria[key] = (props["criterion_text"], status)


@pytest.fixture(autouse=True)
def _criterion_props(request):
    marker = request.node.get_closest_marker("criterion")
    if marker is not None:
        cid, text = marker.args
        request.node.user_properties.append(("criterion_id", cid))
        request.node.user_properties.append(("criterion_text", text))


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for cid in sorted(_criteria, key=lambda c: int(c[2:])):
        text, status = _criteria[cid]
        terminalreporter.write_line(f"{cid:>5} {status}  {text}")
