"""BPMN collaboration models in structured form.

A collaboration is a set of pools, one participant process each, plus the
message list ``M`` of ``(ch(P1, P2), m)`` triples.  Gateways are block
structured: each one owns the element lists of its branches and has a single
incoming and a single outgoing sequence flow.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Iterator, Union


@dataclass(frozen=True)
class Task:
    e_in: str
    e_out: str
    name: str | None = None
    id: str = field(default="", compare=False)


@dataclass(frozen=True)
class SndTask:
    e_in: str
    channel: str
    message: str
    e_out: str
    id: str = field(default="", compare=False)


@dataclass(frozen=True)
class RcvTask:
    e_in: str
    channel: str
    message: str
    e_out: str
    id: str = field(default="", compare=False)


@dataclass(frozen=True)
class AndGate:
    e_in: str
    branches: tuple[tuple["Element", ...], ...]
    e_out: str
    id: str = field(default="", compare=False)


@dataclass(frozen=True)
class XorGate:
    e_in: str
    branches: tuple[tuple["Element", ...], ...]
    e_out: str
    id: str = field(default="", compare=False)


@dataclass(frozen=True)
class EventGate:
    e_in: str
    branches: tuple[tuple["Element", ...], ...]
    e_out: str
    id: str = field(default="", compare=False)


Element = Union[Task, SndTask, RcvTask, AndGate, XorGate, EventGate]
Gateway = (AndGate, XorGate, EventGate)
MessageTask = (SndTask, RcvTask)


@dataclass(frozen=True)
class Pool:
    name: str
    elements: tuple[Element, ...]


@dataclass(frozen=True)
class MessageFlow:
    channel: str
    sender: str
    receiver: str
    message: str


@dataclass(frozen=True)
class CollaborationModel:
    pools: tuple[Pool, ...] = ()
    message_flows: tuple[MessageFlow, ...] = ()

    def pool(self, name: str) -> Pool:
        for p in self.pools:
            if p.name == name:
                return p
        raise KeyError(name)

    def channels(self) -> list[str]:
        """Distinct channels in order of first declaration."""
        return list(dict.fromkeys(mf.channel for mf in self.message_flows))


@dataclass(frozen=True)
class StructuralIssue:
    kind: str
    subject: str
    detail: str = ""

    def __str__(self):
        text = f"{self.kind}: {self.subject}"
        return f"{text} ({self.detail})" if self.detail else text


def walk(elements) -> Iterator[Element]:
    """Pre-order iteration over an element list, descending into gateway branches."""
    for el in elements:
        yield el
        if isinstance(el, Gateway):
            for branch in el.branches:
                yield from walk(branch)


def assign_ids(model: CollaborationModel) -> CollaborationModel:
    """Fill in missing element ids with ``<pool>_<kind><n>`` names.

    Ids never take part in equality, so this does not change the model's value.
    Named tasks use their name as id.
    """
    kinds = {Task: "task", SndTask: "snd", RcvTask: "rcv", AndGate: "and", XorGate: "xor", EventGate: "evt"}
    pools = []
    for pool in model.pools:
        counter = Counter()

        def fix(elements):
            out = []
            for el in elements:
                kind = kinds[type(el)]
                counter[kind] += 1
                new_id = el.id
                if not new_id:
                    if isinstance(el, Task) and el.name:
                        new_id = el.name
                    else:
                        new_id = f"{pool.name}_{kind}{counter[kind]}"
                if isinstance(el, Gateway):
                    branches = tuple(fix(b) for b in el.branches)
                    el = type(el)(el.e_in, branches, el.e_out, id=new_id)
                else:
                    el = _replace_id(el, new_id)
                out.append(el)
            return tuple(out)

        pools.append(Pool(pool.name, fix(pool.elements)))
    return CollaborationModel(tuple(pools), model.message_flows)


def _replace_id(el, new_id):
    if isinstance(el, Task):
        return Task(el.e_in, el.e_out, el.name, id=new_id)
    return type(el)(el.e_in, el.channel, el.message, el.e_out, id=new_id)


def validate_model(model: CollaborationModel) -> list[StructuralIssue]:
    """Check the structural invariants; an empty list means the model is valid."""
    issues: list[StructuralIssue] = []
    names = Counter(p.name for p in model.pools)
    for name, n in names.items():
        if n > 1:
            issues.append(StructuralIssue("duplicate pool name", name))

    ids = Counter(el.id for p in model.pools for el in walk(p.elements) if el.id)
    for eid, n in ids.items():
        if n > 1:
            issues.append(StructuralIssue("duplicate element id", eid))

    # which pools send / receive each (ch, m)
    senders: dict[tuple[str, str], list[str]] = {}
    receivers: dict[tuple[str, str], list[str]] = {}
    for pool in model.pools:
        if not pool.elements:
            issues.append(StructuralIssue("empty pool", pool.name))
        for el in walk(pool.elements):
            if isinstance(el, SndTask):
                senders.setdefault((el.channel, el.message), []).append(pool.name)
            elif isinstance(el, RcvTask):
                receivers.setdefault((el.channel, el.message), []).append(pool.name)
            elif isinstance(el, Gateway):
                issues.extend(_gateway_issues(el))

    declared = Counter((mf.channel, mf.message) for mf in model.message_flows)
    for key, n in declared.items():
        if n > 1:
            issues.append(StructuralIssue("duplicate message", f"{key[0]}.{key[1]}"))

    endpoints: dict[str, tuple[str, str]] = {}
    for mf in model.message_flows:
        subject = f"{mf.channel}.{mf.message}"
        if mf.sender == mf.receiver:
            issues.append(StructuralIssue("message flow within one pool", subject, mf.sender))
        for role, pname in (("sender", mf.sender), ("receiver", mf.receiver)):
            if pname not in names:
                issues.append(StructuralIssue("unknown pool", subject, f"{role} {pname}"))
        prev = endpoints.setdefault(mf.channel, (mf.sender, mf.receiver))
        if prev != (mf.sender, mf.receiver):
            issues.append(StructuralIssue("channel endpoint mismatch", mf.channel, f"{prev} vs {(mf.sender, mf.receiver)}"))
        key = (mf.channel, mf.message)
        for role, table, pname in (("send", senders, mf.sender), ("receive", receivers, mf.receiver)):
            users = table.get(key, [])
            if users.count(pname) == 0:
                issues.append(StructuralIssue("dangling message endpoint", subject, f"no {role} task in {pname}"))
            elif len(users) > 1:
                issues.append(StructuralIssue("ambiguous message endpoint", subject, f"{len(users)} {role} tasks"))
            elif users[0] != pname:
                issues.append(StructuralIssue("dangling message endpoint", subject, f"{role} task in {users[0]}, not {pname}"))

    for table in (senders, receivers):
        for key in table:
            if key not in declared:
                issues.append(StructuralIssue("undeclared message", f"{key[0]}.{key[1]}"))
    return issues


def _gateway_issues(gate) -> list[StructuralIssue]:
    issues = []
    subject = gate.id or gate.e_in
    if len(gate.branches) < 2:
        issues.append(StructuralIssue("gateway with fewer than two branches", subject))
    for branch in gate.branches:
        if not branch:
            issues.append(StructuralIssue("empty gateway branch", subject))
        elif isinstance(gate, EventGate) and not isinstance(branch[0], RcvTask):
            issues.append(StructuralIssue("event gateway branch does not start with a receive task", subject))
    return issues
