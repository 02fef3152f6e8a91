import pytest

from iopc import Bounds, check_reachability, check_soundness, explore, parse_csp
from iopc.corpus import load_case
from iopc.csp import SKIP, Par, Recv, Send
from iopc.verifier import (
    FAIL,
    INCONCLUSIVE,
    PASS,
    SOUNDNESS,
    GlobalState,
    enabled_transitions,
    initial_state,
    read_trace,
    replay,
    replay_labels,
    replay_visible,
    write_trace,
)


def statuses(verdicts):
    return {v.property: v.status for v in verdicts}


def test_initial_state_sc():
    spec = load_case("sc-round2").spec()
    state = initial_state(spec)
    assert len(state.continuations) == 5
    assert len(state.channels) >= 9 and not any(state.channels)


def test_initial_state_skip():
    spec = parse_csp("P() = Skip;")
    assert initial_state(spec).continuations == (SKIP,)
    graph = explore(spec)
    assert len(graph) == 1 and graph.is_terminal(0)


def test_broker_receives_first(broker_spec):
    state = initial_state(broker_spec)
    broker = broker_spec.system.index("Broker")
    assert state.continuations[broker] == broker_spec.process("Broker")
    steps = enabled_transitions(state, broker_spec)
    assert [t.label for t in steps if t.participant == "Broker"] == ["event_e1"]
    # queue SupplierOrder and step past the start event: the receive is offered
    after = replay(broker_spec, [t for t in steps if t.participant == "Broker"])
    queued = GlobalState(after.participants, after.continuations, after.channel_names,
                         tuple(("SupplierOrder",) if c == "cMB" else q
                               for c, q in zip(after.channel_names, after.channels)))
    labels = [t.label for t in enabled_transitions(queued, broker_spec) if t.participant == "Broker"]
    assert labels == ["cMB?SupplierOrder"]


def test_crossed_receive_has_no_steps():
    spec = load_case("crossed-receive").spec()
    verdicts = check_soundness(spec)
    deadlock = verdicts[0]
    assert deadlock.status == FAIL and len(deadlock.counterexample) == 2
    stuck = replay(spec, deadlock.counterexample)
    assert enabled_transitions(stuck, spec) == [] and not stuck.is_terminal
    assert all(t.label.startswith("event_") for t in deadlock.counterexample)


def test_par_of_sends_interleaves():
    from iopc.csp import CspSpec
    spec = CspSpec((("a", 1), ("b", 1)), (("P", Par((Send("a", "M", SKIP), Send("b", "N", SKIP)))),), ("P",))
    labels = sorted(t.label for t in enabled_transitions(initial_state(spec), spec))
    assert labels == ["a!M", "b!N"]


def test_receive_needs_fifo_head():
    from iopc.csp import CspSpec
    spec = CspSpec((("c", 2),), (("P", Recv("c", "N", SKIP)),), ("P",))
    state = initial_state(spec)
    blocked = GlobalState(state.participants, state.continuations, state.channel_names, (("M", "N"),))
    assert enabled_transitions(blocked, spec) == []
    head = GlobalState(state.participants, state.continuations, state.channel_names, (("N", "M"),))
    assert [t.label for t in enabled_transitions(head, spec)] == ["c?N"]


def test_ping_graph_is_small():
    graph = explore(load_case("minimal-ping").spec())
    assert len(graph) < 32 and not graph.truncated


def test_undelivered_message_fails_drainage():
    spec = load_case("undelivered-message").spec()
    verdicts = statuses(check_soundness(spec))
    assert verdicts["message-drainage"] == FAIL
    drain = check_soundness(spec)[3]
    end = replay(spec, drain.counterexample)
    assert end.is_terminal and end.queue("cSR") == ("Notice",)
    assert "|cSR|=1" in drain.detail


def test_sc_round2_sound_and_round1_not():
    assert set(statuses(check_soundness(load_case("sc-round2").spec())).values()) == {PASS}
    assert statuses(check_soundness(load_case("sc-round1").spec()))["deadlock-freedom"] == FAIL


def test_counterexamples_replay_to_violation():
    for name in ("sc-round1", "bt-round1", "crossed-receive", "undelivered-message"):
        spec = load_case(name).spec()
        for v in check_soundness(spec):
            if v.status == FAIL and v.counterexample:
                state = replay(spec, v.counterexample)
                if v.property == "deadlock-freedom":
                    assert not enabled_transitions(state, spec)
                if v.property == "message-drainage":
                    assert state.is_terminal and any(state.channels)


def test_truncation_is_inconclusive():
    spec = load_case("pc").spec()
    verdicts = check_soundness(spec, Bounds(max_states=10))
    assert [v.status for v in verdicts] == [INCONCLUSIVE] * 4
    assert verdicts[0].stats["truncated"] is True


def test_bounds_are_monotone():
    spec = load_case("bt-round2").spec()
    small = check_soundness(spec, Bounds(queue_depth=1))
    large = check_soundness(spec, Bounds(queue_depth=3))
    assert [v.status for v in small] == [v.status for v in large] == [PASS] * 4


def test_bfs_dfs_agree_on_corpus():
    for name in ("sc-round1", "bt-round1", "pr", "undelivered-message"):
        spec = load_case(name).spec()
        bfs, dfs = check_soundness(spec, order="bfs"), check_soundness(spec, order="dfs")
        assert statuses(bfs) == statuses(dfs)
        assert bfs[0].stats["states"] == dfs[0].stats["states"]


def test_reachability(broker_spec):
    assert check_reachability(broker_spec, "cBS!TurnSupplierOrder").status == PASS
    assert check_reachability(broker_spec, "end").status == PASS
    with pytest.raises(ValueError):
        check_reachability(broker_spec, "cXX!Nothing")


def test_reachability_fails_for_shadowed_task():
    # the Ship branch waits for a Go message that no participant ever sends
    spec = parse_csp("channel cBA 1;\nA() = (cBA?Go -> Skip; work_Ship -> Skip) [] work_Other -> Skip;\n"
                     "B() = work_Idle -> Skip;\n")
    assert check_reachability(spec, "work_Ship").status == FAIL
    assert check_reachability(spec, "work_Other").status == PASS
    assert statuses(check_soundness(spec))["task-reachability"] == FAIL


def test_trace_files_round_trip(tmp_path):
    spec = load_case("sc-round1").spec()
    v = check_soundness(spec)[0]
    path = tmp_path / "cex.trace"
    write_trace(v.counterexample, path)
    steps = read_trace(path)
    assert steps == [(t.participant, t.label) for t in v.counterexample]
    assert replay_labels(spec, steps)


def test_replay_visible_reaches_terminal_for_sound_cases():
    for name in ("sc-round2", "bt-round2", "oe", "pr", "pc", "minimal-ping"):
        case = load_case(name)
        states = replay_visible(case.spec(), case.replay)
        assert any(s.is_terminal for s in states), name


def test_verdict_dict_shape():
    v = check_soundness(load_case("crossed-receive").spec())[0]
    d = v.as_dict()
    assert set(d) == {"property", "status", "detail", "counterexample", "witness", "stats"}
    assert d["counterexample"][0].keys() == {"participant", "kind", "label"}
    assert [x["property"] for x in map(lambda v: v.as_dict(), check_soundness(load_case("oe").spec()))] \
        == list(SOUNDNESS)
