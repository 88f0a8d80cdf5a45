import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from obsblock.fixtures import load_fixture
from obsblock.netmodel import build_matrices

settings.register_profile(
    "obsblock", max_examples=40, deadline=None,
    suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("obsblock")


@pytest.fixture
def block_model():
    return load_fixture("example_block")


@pytest.fixture
def block_mats(block_model):
    return build_matrices(block_model)


@pytest.fixture
def conjugate_model():
    return load_fixture("example_conjugate")


@pytest.fixture
def regional_model():
    return load_fixture("example_regional")


@pytest.fixture
def rng():
    return np.random.default_rng(0)


# -- acceptance summary -------------------------------------------------------

_RESULTS = []


def pytest_configure(config):
    config.addinivalue_line(
        "markers", "acceptance(number, title): numbered acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("acceptance")
    if mark is None or (rep.when != "call" and rep.passed):
        return
    number, title = mark.args
    detail = dict(item.user_properties).get("detail", "")
    if rep.failed:
        msg = str(call.excinfo.value).splitlines() if call.excinfo else []
        detail = (msg[0] if msg else "error")[:160]
    _RESULTS.append((number, title, rep.passed, detail))


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, ok, detail in sorted(_RESULTS):
        status = "PASS" if ok else "FAIL"
        terminalreporter.write_line(f"[{status}] {number}. {title}: {detail}")
