import pytest

from clusterwalk import LatticeConfig, Mode, Phase, Port, Statistics, from_single_modes

_results: list[tuple[int, str, str, float]] = []


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when != "call":
        return
    number, title = mark.args
    status = "PASS" if rep.passed else "FAIL"
    _results.append((number, title, status, rep.duration))


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, status, duration in sorted(_results):
        terminalreporter.write_line(f"criterion {number:2d} {status}  {title}  ({duration:.2f}s)")


def incoming(site, port, pol=None):
    return Mode(site, Port(port), Phase.INCOMING, pol)


@pytest.fixture
def psi0_factory():
    def make(lattice: LatticeConfig, statistics=Statistics.BOSON, site=0):
        return from_single_modes(incoming(site, 1), incoming(site, 2), statistics, lattice)

    return make
