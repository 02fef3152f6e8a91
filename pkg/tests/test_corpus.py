import shutil

import pytest

from iopc import check_soundness, print_csp
from iopc.corpus import CASES, UnknownCaseError, list_cases, load_case, parse_verdicts, regenerate


def test_every_case_loads():
    assert list_cases() == list(CASES)
    for name in CASES:
        case = load_case(name)
        assert case.bnf_text and case.expected_verdicts
        # crossed-receive deadlocks before any visible step
        assert bool(case.replay) == (name != "crossed-receive"), name
        assert (case.expected_solidity is not None) == case.expected_sound


def test_unknown_case():
    with pytest.raises(UnknownCaseError, match="unknown corpus case"):
        load_case("no-such-case")


@pytest.mark.parametrize("name", CASES)
def test_verdicts_reproduce(name):
    case = load_case(name)
    got = {v.property: v.status for v in check_soundness(case.spec())}
    assert got == case.expected_verdicts


@pytest.mark.parametrize("name", CASES)
def test_golden_csp(name):
    case = load_case(name)
    assert print_csp(case.spec()) == case.expected_csp


def test_application_cases_have_gateways():
    assert load_case("sc-round2").has_gateway
    assert not load_case("minimal-ping").has_gateway


def test_parse_verdicts_ignores_comments():
    assert parse_verdicts("# header\ndeadlock-freedom PASS  # ok\n\n") == {"deadlock-freedom": "PASS"}


def test_regenerate_is_idempotent(tmp_path, monkeypatch):
    src = load_case("minimal-ping").path.parent
    shutil.copytree(src, tmp_path / "corpus")
    monkeypatch.setenv("IOPC_CORPUS", str(tmp_path / "corpus"))
    before = {p.name: p.read_text() for p in (tmp_path / "corpus" / "sc-round1").iterdir()}
    written = regenerate("sc-round1")
    assert written and all(p.parent == tmp_path / "corpus" / "sc-round1" for p in written)
    after = {p.name: p.read_text() for p in (tmp_path / "corpus" / "sc-round1").iterdir()}
    assert after == before
