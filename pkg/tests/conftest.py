from pathlib import Path

import pytest

from plwhile import load

ROOT = Path(__file__).resolve().parent.parent
CORPUS = ROOT / "corpus"
GOLDEN = Path(__file__).resolve().parent / "golden"


def corpus(name: str) -> Path:
    return CORPUS / name


@pytest.fixture(scope="session")
def rom():
    return load(str(corpus("lazy_rom.plw")))


@pytest.fixture(scope="session")
def leaky():
    return load(str(corpus("leaky.plw")))


@pytest.fixture(scope="session")
def order():
    return load(str(corpus("sampling_order.plw")))


@pytest.fixture(scope="session")
def coin():
    return load(str(corpus("coin.plw")))


# -- acceptance reporting -----------------------------------------------------

_CRITERIA: dict = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, text): acceptance criterion checked by the test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        n, text = mark.args
        _CRITERIA[n] = (text, rep.passed)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        text, ok = _CRITERIA[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {text}")
