_criteria: dict[str, str] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(label): acceptance criterion reported in the summary")


def pytest_runtest_logreport(report):
    label = report.user_properties and dict(report.user_properties).get("criterion")
    if not label:
        return
    if report.skipped:
        _criteria.setdefault(label, "SKIP")
    elif report.failed:
        _criteria[label] = "FAIL"
    elif report.when == "call":
        _criteria.setdefault(label, "PASS")


def pytest_collection_modifyitems(items):
    # tag at collection so skips raised by module fixtures are still attributed
    for item in items:
        marker = item.get_closest_marker("criterion")
        if marker:
            item.user_properties.append(("criterion", marker.args[0]))


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for label, status in _criteria.items():
        terminalreporter.write_line(f"{status}  {label}")
