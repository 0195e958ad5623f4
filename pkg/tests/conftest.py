import pytest

_CRITERIA: dict[int, dict] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    number, title = marker.args
    entry = _CRITERIA.setdefault(number, {"title": title, "ok": True, "ran": False, "why": []})
    if report.when == "call":
        entry["ran"] = True
    if report.failed:
        entry["ok"] = False
        entry["why"].append(f"{item.name} ({report.when})")
    elif report.skipped and report.when in ("setup", "call"):
        entry["why"].append(f"{item.name} skipped")


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        entry = _CRITERIA[number]
        if not entry["ran"]:
            status = "SKIP"
        else:
            status = "PASS" if entry["ok"] else "FAIL"
        line = f"criterion {number:2d} {status}: {entry['title']}"
        if status != "PASS" and entry["why"]:
            line += "  [" + "; ".join(entry["why"]) + "]"
        terminalreporter.write_line(line)
