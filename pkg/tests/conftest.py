import pytest


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")
    config._criteria = {}


def pytest_collection_modifyitems(config, items):
    for item in items:
        mark = item.get_closest_marker("criterion")
        if mark is not None:
            config._criteria[item.nodeid] = {"number": mark.args[0], "title": mark.args[1],
                                             "outcome": "not run", "detail": ""}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    entry = item.config._criteria.get(item.nodeid)
    if entry is None:
        return
    if rep.when == "call" or (rep.when == "setup" and rep.failed):
        entry["outcome"] = "PASS" if rep.passed else "FAIL"
        entry["detail"] = dict(item.user_properties).get("detail", "")


def pytest_terminal_summary(terminalreporter, config):
    entries = sorted(config._criteria.values(), key=lambda e: e["number"])
    if not entries:
        return
    terminalreporter.section("acceptance criteria")
    for e in entries:
        terminalreporter.write_line(
            f"criterion {e['number']:>2} {e['outcome']:<4} {e['title']}: {e['detail']}")
