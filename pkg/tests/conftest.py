import pytest

from tabledep import fixtures
from tabledep.deps import mine_corpus
from tabledep.expand import expand
from tabledep.model import DocumentRef
from tabledep.query import QueryEngine
from tabledep.store import build_store


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(number, title): exit criterion")


_acceptance = {}


def pytest_runtest_logreport(report):
    marker = getattr(report, "acceptance", None)
    if marker is None:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _acceptance[marker] = report.outcome


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    m = item.get_closest_marker("acceptance")
    if m is not None:
        report.acceptance = (m.args[0], m.args[1])


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for (number, title), outcome in sorted(_acceptance.items()):
        status = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"[{status}] {number:>2}. {title}")


@pytest.fixture(scope="session")
def torque_compact():
    return fixtures.torque_table()


@pytest.fixture(scope="session")
def torque_flat(torque_compact):
    return expand(torque_compact, fixtures.TORQUE_PARAMS)


@pytest.fixture(scope="session")
def combination_flat():
    return expand(fixtures.combination_table(), fixtures.COMBINATION_PARAMS)


def make_store(*flats):
    deps = mine_corpus(list(flats))
    return build_store(
        (DocumentRef(f.document_id), f, deps[f.table_id].all) for f in flats
    )


@pytest.fixture(scope="session")
def fastener_store(torque_flat, combination_flat):
    return make_store(torque_flat, combination_flat)


@pytest.fixture(scope="session")
def torque_store(torque_flat):
    return make_store(torque_flat)


@pytest.fixture(scope="session")
def engine(fastener_store):
    return QueryEngine(fastener_store)
