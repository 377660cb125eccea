import pytest

from wshsa.model import Instance

_CRITERIA: dict[int, tuple[str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    number, title = marker.args
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        _CRITERIA[number] = ("PASS" if rep.passed else "FAIL", title)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        status, title = _CRITERIA[number]
        terminalreporter.write_line(f"criterion {number}: {status}  {title}")


@pytest.fixture
def ex1():
    return Instance.build(
        [2, 2, 2],
        [[(1, 1), (2, 1)], [(1, 2)], [(2, 2)]],
        [[(1, 2), (2, 2), (3, 1)]],
    )


@pytest.fixture
def ex2():
    return Instance.build([2, 3], [[(1, 1), (1, 2)]], [[(2, 1)], [(2, 2)], [(2, 3)]])


@pytest.fixture
def empty_inst():
    return Instance.build([1, 1], [[]], [[]])
