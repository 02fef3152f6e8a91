import sys
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

TESTS = Path(__file__).resolve().parent
FIXTURES = TESTS / "fixtures"
sys.path.insert(0, str(TESTS))

settings.register_profile(
    "default", deadline=None, suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large]
)
settings.load_profile("default")

# test_acceptance records one line per criterion here; printed in the summary
ACCEPTANCE: dict[int, str] = {}
# (criterion, callable) pairs whose line is computed from TEST_OUTCOMES at the end
ACCEPTANCE_LATE: list = []
TEST_OUTCOMES: dict[str, bool] = {}


@pytest.hookimpl(wrapper=True)
def pytest_runtest_makereport(item, call):
    report = yield
    if report.when == "call" or (report.when == "setup" and not report.passed):
        TEST_OUTCOMES[item.name] = report.passed
    return report


def pytest_terminal_summary(terminalreporter):
    lines = dict(ACCEPTANCE)
    for n, make in ACCEPTANCE_LATE:
        line = make()
        if line:
            lines[n] = line
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(lines):
        terminalreporter.write_line(lines[n])


@pytest.fixture
def broker_text():
    return (FIXTURES / "broker.bnf").read_text()


@pytest.fixture
def broker_model(broker_text):
    from iopc import parse_bnf_text
    return parse_bnf_text(broker_text)


@pytest.fixture
def broker_spec(broker_model):
    from iopc import translate_collaboration
    return translate_collaboration(broker_model)
