"""The seven acceptance criteria of the specification.

Each test records one ``criterion N: PASS|FAIL`` line, printed in the pytest
terminal summary (section "acceptance criteria").  Criterion 6 is split into
five hypothesis suites; its line reports how many of them passed.
"""

import time
from contextlib import contextmanager

import pytest
from conftest import ACCEPTANCE, ACCEPTANCE_LATE, FIXTURES, TEST_OUTCOMES
from hypothesis import given, settings
from hypothesis import strategies as st
from strategies import collaborations, csp_specs

from iopc import (
    build_unreduced_contract,
    check_soundness,
    extract_relations,
    parse_bnf_text,
    parse_csp,
    print_bnf,
    print_csp,
    reduce,
    translate_collaboration,
)
from iopc.cli import EXIT_OK, EXIT_VERIFY, PipelineConfig, cmd_emit
from iopc.conformance import conformance_check, contract_lts, spec_lts, trace_sets
from iopc.contract import TwinSimulator, contract_for_spec, enabled_requests
from iopc.corpus import CASES as CORPUS_CASES
from iopc.corpus import load_case
from iopc.csp import format_definition, tokenize
from iopc.verifier import FAIL, PASS, SOUNDNESS, enabled_transitions, replay

TITLES = {
    1: "Broker translation is token-exact against the reference definition (< 1 s)",
    2: "Broker relations Init/Next/End as stated; reduced set is leaf-only",
    3: "verdict matrix: round-1 variants FAIL with replayable counterexamples, others PASS",
    4: "twin trace set equals verifier trace set for every passing corpus model",
    5: "cmd_emit refuses unsound models unless --unsafe-skip-verify",
    6: "property suites (>= 1000 generated cases each)",
    7: "reduced contract has fewer state variables than the unreduced one",
}
PROPERTY_SUITES = 5

UNSOUND = ("sc-round1", "bt-round1")
SOUND = ("sc-round2", "bt-round2", "oe", "pr", "pc")


def _line(n, ok, note=""):
    text = f"criterion {n}: {'PASS' if ok else 'FAIL'} - {TITLES[n]}"
    return text + (f" [{note}]" if note else "")


_failed: set[int] = set()


@contextmanager
def criterion(n, note=""):
    """Record criterion ``n``; a failure in any of its tests is sticky."""
    ACCEPTANCE[n] = _line(n, False, note)
    try:
        yield
    except BaseException:
        _failed.add(n)
        raise
    ACCEPTANCE[n] = _line(n, n not in _failed, note)


def _criterion6_line():
    """Criterion 6 from the outcomes of the test_c6_* tests (see conftest)."""
    results = [ok for name, ok in TEST_OUTCOMES.items() if name.startswith("test_c6_")]
    if not results:
        return None
    passed = sum(results)
    return _line(6, passed == PROPERTY_SUITES, f"{passed}/{PROPERTY_SUITES} suites passed")


ACCEPTANCE_LATE.append((6, _criterion6_line))


# ------------------------------------------------------------- criterion 1


def _tokens(text):
    return [t for t, _, _ in tokenize(text)]


def test_c1_broker_translation_token_exact(broker_text):
    with criterion(1):
        reference = (FIXTURES / "broker_reference.csp").read_text()
        start = time.perf_counter()
        spec = translate_collaboration(parse_bnf_text(broker_text))
        ours = format_definition("Broker", spec.process("Broker"))
        elapsed = time.perf_counter() - start
        assert _tokens(ours) == _tokens(reference)
        assert elapsed < 1.0


# ------------------------------------------------------------- criterion 2


def test_c2_broker_relations(broker_spec):
    with criterion(2):
        rel = extract_relations(broker_spec)
        assert rel.named("init")["Broker"] == ["Broker.P1"]
        assert rel.named("next")["Broker.P1"] == ["Broker.P2"]
        assert rel.named("end")["Broker.P2"] == ["Broker"]
        red = reduce(rel, broker_spec)
        leaves = {n.id for n in rel.tree.leaves()}
        composites = {n.id for n in rel.tree.nodes() if not n.is_leaf}
        participants = set(rel.tree.participants)
        mentioned = red.ids() - participants
        assert mentioned <= leaves
        assert not (mentioned & composites)
        assert "Broker.P2" not in mentioned
        assert red.activate["Broker.P1"] == ["Broker.P3", "Broker.P4"]
        assert not red.inactivate


# ------------------------------------------------------------- criterion 3


def _check_counterexample(spec, verdict):
    state = replay(spec, verdict.counterexample)  # raises if a step is not enabled
    if verdict.property == "deadlock-freedom":
        assert not state.is_terminal and not enabled_transitions(state, spec)
    if verdict.property == "message-drainage":
        assert state.is_terminal and any(state.channels)


def test_c3_verdict_matrix():
    with criterion(3):
        for name in UNSOUND + SOUND:
            case = load_case(name)
            spec = case.spec()
            start = time.perf_counter()
            verdicts = check_soundness(spec)
            elapsed = time.perf_counter() - start
            assert elapsed <= 10.0, name
            assert verdicts[0].stats["states"] <= 1_000_000, name
            assert [v.property for v in verdicts] == list(SOUNDNESS)
            assert {v.property: v.status for v in verdicts} == case.expected_verdicts, name
            if name in SOUND:
                assert all(v.status == PASS for v in verdicts), name
                continue
            failing = [v for v in verdicts if v.status == FAIL]
            assert failing, name
            with_trace = [v for v in failing if v.counterexample]
            assert with_trace, name
            for v in with_trace:
                _check_counterexample(spec, v)


# ------------------------------------------------------------- criterion 4


def test_c4_conformance_trace_sets():
    with criterion(4):
        for name in SOUND:
            case = load_case(name)
            spec = case.spec()
            model = case.contract()
            # explicit enumeration of both sides, each <= 10^4 traces
            spec_complete, spec_prefixes = trace_sets(spec_lts(spec), limit=10_000)
            twin_complete, twin_prefixes = trace_sets(contract_lts(model), limit=10_000)
            assert spec_complete, name
            assert spec_complete == twin_complete, name
            assert spec_prefixes == twin_prefixes, name
            # and the lock-step checker agrees
            verdict = conformance_check(spec, model)
            assert verdict.status == PASS, (name, verdict.detail, verdict.witness)
            assert verdict.stats["traces"] == len(spec_complete)


# ------------------------------------------------------------- criterion 5


@pytest.mark.parametrize("name", UNSOUND)
def test_c5_emit_gate(tmp_path, name):
    with criterion(5):
        model_file = load_case(name).path / "model.bnf"
        refused, model = cmd_emit(PipelineConfig(model_file, out_dir=tmp_path / "safe"))
        assert refused.exit_code == EXIT_VERIFY and model is None
        assert "solidity" not in refused.artifacts
        assert not list((tmp_path / "safe").glob("*.sol"))

        forced, model = cmd_emit(PipelineConfig(model_file, out_dir=tmp_path / "unsafe",
                                                unsafe_skip_verify=True))
        assert forced.exit_code == EXIT_OK and model is not None
        assert list((tmp_path / "unsafe").glob("*.sol"))
        assert any("WARNING" in m for m in forced.messages)


# ------------------------------------------------------------- criterion 6

CASES = settings(max_examples=1000)


@CASES
@given(collaborations())
def test_c6_bnf_round_trip(model):
    text = print_bnf(model)
    again = parse_bnf_text(text)
    assert again == model
    assert print_bnf(again) == text


@CASES
@given(st.one_of(csp_specs(), collaborations().map(translate_collaboration)))
def test_c6_csp_parse_print_inverse(spec):
    text = print_csp(spec)
    assert parse_csp(text) == spec
    assert print_csp(parse_csp(text)) == text


def _drive(data, sim):
    """Random request sequence, biased towards requests the twin accepts."""
    model, rows = sim.model, sim.rows
    for _ in range(data.draw(st.integers(0, 25), label="length")):
        enabled = enabled_requests(model, sim.current, rows)
        if enabled and data.draw(st.booleans(), label="pick enabled"):
            atomic_id, phase, _ = data.draw(st.sampled_from(enabled), label="enabled")
            sender = None
        else:
            atomic_id = data.draw(st.sampled_from([a.id for a in model.atomics]), label="atomic")
            phase = data.draw(st.sampled_from(["start", "complete"]), label="phase") if model.two_call else None
            sender = data.draw(st.sampled_from([None, *model.participants]), label="sender")
        yield atomic_id, sender, phase


def _contract(model, two_call):
    return contract_for_spec(translate_collaboration(model), "Random", two_call)


@CASES
@given(collaborations(), st.booleans(), st.data())
def test_c6_rejected_requests_side_effect_free(model, two_call, data):
    sim = TwinSimulator(_contract(model, two_call))
    for atomic_id, sender, phase in _drive(data, sim):
        before = sim.current
        accepted_before = sum(e.accepted for e in sim.log)
        res = sim.request(atomic_id, sender, phase)
        if not res.accepted:
            assert res.reason
            assert res.state is None and res.changes == () and res.forwarded == ()
            assert sim.current is before
            assert sum(e.accepted for e in sim.log) == accepted_before
    # re-running only the accepted log entries reproduces the state
    assert sim.replay_log() == sim.current


@CASES
@given(collaborations(), st.booleans(), st.data())
def test_c6_message_counters_never_negative(model, two_call, data):
    contract = _contract(model, two_call)
    sim = TwinSimulator(contract)
    sent = [0] * len(contract.messages)
    received = [0] * len(contract.messages)
    for atomic_id, sender, phase in _drive(data, sim):
        res = sim.request(atomic_id, sender, phase)
        if res.accepted and phase != "complete":
            a = contract.atomic(atomic_id)
            if a.kind in ("send", "receive"):
                k = contract.messages.index((a.channel, a.message))
                (sent if a.kind == "send" else received)[k] += 1
        state = sim.current
        assert all(n >= 0 for n in state.pending)
        assert list(state.pending) == [s - r for s, r in zip(sent, received)]
        for (channel, capacity), queue in zip(contract.channels, state.queues):
            assert len(queue) <= capacity, channel


@CASES
@given(collaborations(max_tasks=1))
def test_c6_verdicts_independent_of_worklist_order(model):
    spec = translate_collaboration(model)
    bfs = check_soundness(spec, order="bfs")
    dfs = check_soundness(spec, order="dfs")
    assert [v.status for v in bfs] == [v.status for v in dfs]
    assert bfs[0].stats["states"] == dfs[0].stats["states"]
    for v in bfs + dfs:
        if v.counterexample:
            _check_counterexample(spec, v)


# ------------------------------------------------------------- criterion 7


def test_c7_reduction_shrinks_state():
    with criterion(7):
        checked = 0
        for name in CORPUS_CASES:
            case = load_case(name)
            if not case.has_gateway:
                continue
            spec = case.spec()
            reduced = case.contract()
            unreduced = build_unreduced_contract(spec)
            assert reduced.state_variables < unreduced.state_variables, name
            checked += 1
        assert checked >= 7
