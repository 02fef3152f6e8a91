import pytest

from iopc import dump_relations, extract_relations, parse_bnf_text, reduce, translate_collaboration
from iopc.corpus import CASES, load_case


def _spec(text):
    return translate_collaboration(parse_bnf_text(text + "\nmessages {\n}\n"))


def test_broker_full_relations(broker_spec):
    rel = extract_relations(broker_spec)
    assert rel.named("init")["Broker"] == ["Broker.P1"]
    assert rel.named("next")["Broker.P1"] == ["Broker.P2"]
    assert rel.named("end")["Broker.P2"] == ["Broker"]
    assert rel.named("and_rel")["Broker.P2"] == ["Broker.P3", "Broker.P4"]
    assert rel.named("init")["Broker.P2"] == ["Broker.P3", "Broker.P4"]


def test_broker_reduced(broker_spec):
    red = reduce(extract_relations(broker_spec), broker_spec)
    assert [a for a in red.atomics if red.owner[a] == "Broker"] == ["Broker.P1", "Broker.P3", "Broker.P4"]
    assert red.activate == {"Broker.P1": ["Broker.P3", "Broker.P4"]}
    assert red.inactivate == {}
    assert red.initials["Broker"] == ["Broker.P1"]
    group = red.groups[red.parallel["Broker.P3"]]
    assert red.parallel["Broker.P4"] == group.id
    assert group.members == {"Broker.P3", "Broker.P4"}
    # the join gates the participant's completion
    assert red.completion["Broker"] == (frozenset({"Broker.P3", "Broker.P4"}),)


def test_single_task_participant():
    spec = _spec("pool(A, task(e1,e2,Work))")
    rel = extract_relations(spec)
    assert rel.named("init")["A"] == ["A.P1"]
    assert rel.named("end")["A.P1"] == ["A"]
    red = reduce(rel, spec)
    assert red.initials["A"] == ["A.P1"] and red.activate == {}


def test_xor_relations_are_symmetric():
    spec = _spec("pool(A, xorGate(e1,((task(e2,e3,X)),(task(e4,e5,Y))),e6))")
    rel = extract_relations(spec)
    xor = rel.named("xor")
    (left, right) = sorted(xor)
    assert xor[left] == [right] and xor[right] == [left]
    red = reduce(rel, spec)
    (t1, t2) = red.atomics
    assert red.inactivate == {t1: [t2], t2: [t1]}
    assert sorted(red.initials["A"]) == [t1, t2]


def test_sequential_three_tasks():
    spec = _spec("pool(A, task(e1,e2,X); task(e2,e3,Y); task(e3,e4,Z))")
    red = reduce(extract_relations(spec), spec)
    a, b, c = red.atomics
    assert red.activate == {a: [b], b: [c]}
    assert not red.parallel and not red.inactivate
    assert red.completion["A"] == (frozenset({c}),)


def test_xor_inside_and_completion_is_and_of_or():
    spec = _spec("pool(A, andGate(e1,((xorGate(e2,((task(e3,e4,X)),(task(e5,e6,Y))),e7)),(task(e8,e9,Z))),e10);"
                 " task(e10,e11,After))")
    red = reduce(extract_relations(spec), spec)
    x, y, z, after = red.atomics
    gate_alts = {alt for gid in red.gates[z] for alt in red.groups[gid].alternatives}
    assert gate_alts == {frozenset({x, z}), frozenset({y, z})}
    assert red.activate[x] == red.activate[y] == red.activate[z] == [after]


@pytest.mark.parametrize("name", CASES)
def test_leaf_only_and_enable_count(name):
    case = load_case(name)
    spec = case.spec()
    rel = extract_relations(spec)
    red = reduce(rel, spec)
    composites = {n.id for n in rel.tree.nodes() if not n.is_leaf}
    participants = set(rel.tree.participants)
    assert not ((red.ids() - participants) & composites)
    assert sum(len(v) for v in red.enable.values()) == len(case.model().message_flows)
    # parallel groups are disjoint within a participant
    seen = set()
    for atomic, gid in red.parallel.items():
        assert atomic not in seen
        seen.add(atomic)


def test_dump_is_sorted_and_stable(broker_spec):
    red = reduce(extract_relations(broker_spec), broker_spec)
    first, second = dump_relations(red), dump_relations(red)
    assert first == second
    for section in first.split("# ")[1:]:
        lines = section.strip().splitlines()[1:]
        assert lines == sorted(lines)
    assert "P2" not in first
    assert "Activate(P1) = [P3, P4]" in first


def test_full_dump_has_participant_sections():
    spec = load_case("sc-round2").spec()
    text = dump_relations(extract_relations(spec))
    headers = [line[2:] for line in text.splitlines() if line.startswith("# ")]
    assert headers == list(spec.system) + ["Enable"]


@pytest.mark.parametrize("name", CASES)
def test_golden_relations(name):
    case = load_case(name)
    spec = case.spec()
    assert dump_relations(reduce(extract_relations(spec), spec)) == case.expected_relations
