"""BPMN 2.0 XML ingestion for the supported collaboration subset.

Supported: participants with their processes, none-typed start/end events,
tasks (plain and the user/service/manual/script/business-rule variants),
send/receive tasks, message throw/catch intermediate events, parallel,
exclusive and event-based gateways, sequence flows and message flows.
Everything else is rejected with the element's id and tag.

Start and end events do not interact with other participants and are dropped;
their sequence flows become the first element's ``e_in`` / last element's
``e_out``.  Gateways must form matching split/join blocks.

Channel names come from the message flow's ``name`` attribute when it is an
identifier, otherwise ``c<S><R>`` from the pool initials.  Message names come
from the referenced ``<message name=...>``.
"""

from __future__ import annotations

import re
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field

from .errors import ParseError, UnstructuredModelError, UnsupportedElementError
from .model import (
    AndGate,
    CollaborationModel,
    EventGate,
    MessageFlow,
    Pool,
    RcvTask,
    SndTask,
    Task,
    XorGate,
)

BPMN_NS = "http://www.omg.org/spec/BPMN/20100524/MODEL"
_Q = "{" + BPMN_NS + "}"

TASK_TAGS = {"task", "userTask", "serviceTask", "manualTask", "scriptTask", "businessRuleTask"}
GATEWAY_TAGS = {"parallelGateway", "exclusiveGateway", "eventBasedGateway"}
# carry no behaviour; skipped wherever they appear
IGNORED_TAGS = {"documentation", "extensionElements", "incoming", "outgoing", "laneSet", "textAnnotation", "association"}
_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")


def _local(tag: str) -> str | None:
    if tag.startswith(_Q):
        return tag[len(_Q):]
    return None


def _ident(raw: str) -> str:
    text = re.sub(r"\W", "_", raw)
    return text if _IDENT.fullmatch(text) else f"_{text}"


@dataclass
class _Node:
    id: str
    kind: str  # start, end, task, send, receive, gateway
    tag: str
    message_ref: str | None = None
    name: str | None = None
    incoming: list[str] = field(default_factory=list)
    outgoing: list[str] = field(default_factory=list)


def parse_bpmn_xml(text) -> CollaborationModel:
    """Build a CollaborationModel from a BPMN 2.0 XML document (str or bytes)."""
    try:
        root = ET.fromstring(text)
    except ET.ParseError as exc:
        line, col = exc.position
        raise ParseError(f"XML syntax error: {exc}", line, col) from None
    if _local(root.tag) != "definitions":
        raise ParseError(f"root element is {root.tag!r}, expected BPMN <definitions>")

    messages = {}
    processes = {}
    collaboration = None
    for child in root:
        tag = _local(child.tag)
        if tag == "message":
            messages[child.get("id")] = child.get("name") or child.get("id")
        elif tag == "process":
            processes[child.get("id")] = child
        elif tag == "collaboration":
            if collaboration is not None:
                raise UnsupportedElementError(child.get("id"), "collaboration (second)")
            collaboration = child
        elif tag in IGNORED_TAGS or tag is None:
            continue  # diagram interchange lives in another namespace
        else:
            raise UnsupportedElementError(child.get("id"), tag)

    participants = []
    raw_flows = []
    if collaboration is not None:
        for child in collaboration:
            tag = _local(child.tag)
            if tag == "participant":
                participants.append(child)
            elif tag == "messageFlow":
                raw_flows.append(child)
            elif tag in IGNORED_TAGS or tag is None:
                continue
            else:
                raise UnsupportedElementError(child.get("id"), tag)
    elif len(processes) == 1:
        (pid, proc), = processes.items()
        participants.append(ET.Element(_Q + "participant", id=pid, name=proc.get("name") or pid, processRef=pid))
    else:
        raise ParseError("document has no <collaboration> and is not a single process")

    pools = []
    owner = {}  # node id -> (pool name, node)
    for part in participants:
        pname = _ident(part.get("name") or part.get("id"))
        ref = part.get("processRef")
        if ref is None or ref not in processes:
            raise ParseError(f"participant {part.get('id')!r} has no process (black-box pools are not supported)")
        nodes, flows = _read_process(processes[ref])
        for nid, node in nodes.items():
            owner[nid] = (pname, node)
        pools.append(Pool(pname, _structure(ref, nodes, flows)))

    message_flows = []
    used_channels = {}
    for mf in raw_flows:
        src, dst = mf.get("sourceRef"), mf.get("targetRef")
        if src not in owner or dst not in owner:
            raise ParseError(f"message flow {mf.get('id')!r} must connect two task/event nodes")
        (sender, snode), (receiver, rnode) = owner[src], owner[dst]
        if snode.kind != "send" or rnode.kind != "receive":
            raise ParseError(f"message flow {mf.get('id')!r} must go from a send node to a receive node")
        msg_ref = mf.get("messageRef") or snode.message_ref or rnode.message_ref
        if msg_ref is None:
            raise ParseError(f"message flow {mf.get('id')!r} has no messageRef")
        message = _ident(messages.get(msg_ref, msg_ref))
        name = mf.get("name")
        if name and _IDENT.fullmatch(name):
            channel = name
        else:
            channel = _derived_channel(sender, receiver, used_channels)
        used_channels.setdefault((sender, receiver), channel)
        message_flows.append(MessageFlow(channel, sender, receiver, message))

    model = CollaborationModel(tuple(pools), tuple(message_flows))
    return _bind_messages(model, raw_flows, owner, message_flows)


def _derived_channel(sender, receiver, used):
    if (sender, receiver) in used:
        return used[(sender, receiver)]
    base = f"c{sender[0].upper()}{receiver[0].upper()}"
    taken = set(used.values())
    name, n = base, 2
    while name in taken:
        name, n = f"{base}{n}", n + 1
    return name


def _read_process(proc):
    nodes: dict[str, _Node] = {}
    flows: dict[str, tuple[str, str]] = {}
    for el in proc:
        tag = _local(el.tag)
        eid = el.get("id")
        if tag in IGNORED_TAGS or tag is None:
            continue
        if tag == "sequenceFlow":
            # condition expressions are ignored: XOR is a nondeterministic choice
            flows[eid] = (el.get("sourceRef"), el.get("targetRef"))
            continue
        defs = [_local(c.tag) for c in el if _local(c.tag) and _local(c.tag).endswith("EventDefinition")]
        if tag in ("startEvent", "endEvent"):
            if defs:
                raise UnsupportedElementError(eid, f"{tag} with {defs[0]}")
            nodes[eid] = _Node(eid, "start" if tag == "startEvent" else "end", tag)
        elif tag in TASK_TAGS:
            nodes[eid] = _Node(eid, "task", tag, name=el.get("name"))
        elif tag in ("sendTask", "receiveTask"):
            nodes[eid] = _Node(eid, "send" if tag == "sendTask" else "receive", tag, el.get("messageRef"))
        elif tag in ("intermediateThrowEvent", "intermediateCatchEvent"):
            if defs != ["messageEventDefinition"]:
                raise UnsupportedElementError(eid, f"{tag} with {defs or 'no event definition'}")
            ref = el.find(_Q + "messageEventDefinition").get("messageRef")
            nodes[eid] = _Node(eid, "send" if tag == "intermediateThrowEvent" else "receive", tag, ref)
        elif tag in GATEWAY_TAGS:
            nodes[eid] = _Node(eid, "gateway", tag)
        else:
            raise UnsupportedElementError(eid, tag)
    for fid, (src, dst) in flows.items():
        if src not in nodes or dst not in nodes:
            raise ParseError(f"sequence flow {fid!r} references an unknown node")
        nodes[src].outgoing.append(fid)
        nodes[dst].incoming.append(fid)
    return nodes, flows


def _structure(pid, nodes, flows):
    """Turn a process graph into a block-structured element list."""
    starts = [n for n in nodes.values() if n.kind == "start"]
    if len(starts) > 1:
        raise UnstructuredModelError(f"process {pid!r} has {len(starts)} start events")
    if starts:
        start = starts[0]
        if len(start.outgoing) != 1:
            raise UnstructuredModelError(f"start event {start.id!r} must have exactly one outgoing flow")
        first_flow = start.outgoing[0]
    else:
        entry = [n for n in nodes.values() if not n.incoming]
        if len(entry) != 1:
            raise UnstructuredModelError(f"process {pid!r} has no unique entry node")
        first_flow = None
        node = entry[0]
    visited = set()

    def follow(flow):
        return nodes[flows[flow][1]]

    def chain(flow, node=None):
        """Parse elements from ``flow`` until an end event or a join gateway."""
        elements = []
        node = node or follow(flow)
        while True:
            if node.kind == "end":
                return elements, None, flow
            if node.kind == "gateway" and len(node.incoming) > 1:
                if len(node.outgoing) != 1:
                    raise UnstructuredModelError(f"gateway {node.id!r} both joins and splits")
                return elements, node, flow
            if node.id in visited:
                raise UnstructuredModelError(f"cycle through {node.id!r}: loops are not supported")
            visited.add(node.id)
            if len(node.outgoing) != 1 and node.kind != "gateway":
                raise UnstructuredModelError(f"node {node.id!r} must have exactly one outgoing flow")
            if node.kind != "gateway" and len(node.incoming) > 1:
                raise UnstructuredModelError(f"node {node.id!r} has several incoming flows without a join gateway")
            e_in = flow if flow is not None else (node.incoming[0] if node.incoming else f"{node.id}_in")
            if node.kind == "gateway":
                el, out_flow = split(node, e_in)
            else:
                out_flow = node.outgoing[0]
                el = _task_element(node, e_in, out_flow)
            elements.append(el)
            flow = out_flow
            node = follow(flow)

    def split(gate, e_in):
        if len(gate.outgoing) < 2:
            raise UnstructuredModelError(f"gateway {gate.id!r} has a single outgoing flow")
        branches, joins = [], set()
        for out in gate.outgoing:
            elements, join, _ = chain(out)
            if join is None:
                raise UnstructuredModelError(f"split {gate.id!r} without matching join")
            if not elements:
                raise UnstructuredModelError(f"split {gate.id!r} has an empty branch")
            joins.add(join.id)
            branches.append(tuple(elements))
        if len(joins) != 1:
            raise UnstructuredModelError(f"split {gate.id!r} branches reach different joins {sorted(joins)}")
        join = nodes[joins.pop()]
        if len(join.incoming) != len(gate.outgoing):
            raise UnstructuredModelError(f"join {join.id!r} does not match split {gate.id!r}")
        expected = {"parallelGateway": {"parallelGateway"},
                    "exclusiveGateway": {"exclusiveGateway"},
                    "eventBasedGateway": {"exclusiveGateway", "eventBasedGateway"}}[gate.tag]
        if join.tag not in expected:
            raise UnstructuredModelError(f"split {gate.id!r} ({gate.tag}) closed by {join.tag} {join.id!r}")
        visited.add(join.id)
        cls = {"parallelGateway": AndGate, "exclusiveGateway": XorGate, "eventBasedGateway": EventGate}[gate.tag]
        return cls(e_in, tuple(branches), join.outgoing[0], id=_ident(gate.id)), join.outgoing[0]

    if first_flow is not None:
        elements, join, _ = chain(first_flow)
    else:
        elements, join, _ = chain(None, node)
    if join is not None:
        raise UnstructuredModelError(f"join {join.id!r} without matching split")
    unreached = [n.id for n in nodes.values() if n.kind not in ("start", "end") and n.id not in visited]
    if unreached:
        raise UnstructuredModelError(f"nodes not on the structured path: {sorted(unreached)}")
    return tuple(elements)


def _task_element(node, e_in, e_out):
    if node.kind == "task":
        name = _ident(node.name or node.id)
        return Task(e_in, e_out, name, id=name)
    # channel/message are bound once message flows are read
    cls = SndTask if node.kind == "send" else RcvTask
    return cls(e_in, "", "", e_out, id=_ident(node.id))


def _bind_messages(model, raw_flows, owner, message_flows):
    binding = {}
    for mf, flow in zip(raw_flows, message_flows):
        binding[_ident(mf.get("sourceRef"))] = (flow.channel, flow.message)
        binding[_ident(mf.get("targetRef"))] = (flow.channel, flow.message)

    def bind(elements):
        out = []
        for el in elements:
            if isinstance(el, (SndTask, RcvTask)):
                if el.id not in binding:
                    raise ParseError(f"{type(el).__name__} {el.id!r} is not connected to any message flow")
                ch, m = binding[el.id]
                el = type(el)(el.e_in, ch, m, el.e_out, id=el.id)
            elif isinstance(el, (AndGate, XorGate, EventGate)):
                el = type(el)(el.e_in, tuple(bind(b) for b in el.branches), el.e_out, id=el.id)
            out.append(el)
        return tuple(out)

    return CollaborationModel(tuple(Pool(p.name, bind(p.elements)) for p in model.pools), model.message_flows)


def to_bpmn_xml(model: CollaborationModel) -> str:
    """Serialize a model as BPMN 2.0 XML (no diagram interchange).

    XML needs one sequence flow per edge, so a flow name that the structured
    model reuses (``e2`` on every branch of a split, say) is
    emitted once under its own name and then as ``<name>_2``, ``<name>_3``...
    Re-reading such a document yields the same model up to flow names.
    """
    ET.register_namespace("", BPMN_NS)
    root = ET.Element(_Q + "definitions", id="Definitions", targetNamespace="http://iopc/corpus")
    collab = ET.SubElement(root, _Q + "collaboration", id="Collaboration")
    msg_ids = {}
    for mf in model.message_flows:
        msg_ids[(mf.channel, mf.message)] = f"Msg_{mf.channel}_{mf.message}"
    node_of = {}  # (pool, ch, m, kind) -> node id
    procs = []
    for pool in model.pools:
        ET.SubElement(collab, _Q + "participant", id=f"Participant_{pool.name}", name=pool.name,
                      processRef=f"Process_{pool.name}")
        proc = ET.Element(_Q + "process", id=f"Process_{pool.name}")
        procs.append(proc)
        counter = [0]
        seq = []

        def add(tag, nid, **attrs):
            ET.SubElement(proc, _Q + tag, id=nid, **attrs)

        def emit(elements, pool=pool):
            """Returns (entry node, exit node)."""
            entry = prev = None
            for el in elements:
                first, last = emit_one(el, pool)
                if prev is None:
                    entry = first
                else:
                    seq.append((el.e_in, prev, first))
                prev = last
            return entry, prev

        def emit_one(el, pool):
            counter[0] += 1
            nid = el.id or f"{pool.name}_n{counter[0]}"
            if isinstance(el, Task):
                add("task", nid, name=el.name or nid)
                return nid, nid
            if isinstance(el, (SndTask, RcvTask)):
                kind = "sendTask" if isinstance(el, SndTask) else "receiveTask"
                add(kind, nid, messageRef=msg_ids.get((el.channel, el.message), ""))
                node_of[(pool.name, el.channel, el.message, kind)] = nid
                return nid, nid
            tag = {AndGate: "parallelGateway", XorGate: "exclusiveGateway", EventGate: "eventBasedGateway"}[type(el)]
            join_tag = "parallelGateway" if isinstance(el, AndGate) else "exclusiveGateway"
            add(tag, f"{nid}_split")
            add(join_tag, f"{nid}_join")
            for branch in el.branches:
                b_first, b_last = emit(branch)
                seq.append((branch[0].e_in, f"{nid}_split", b_first))
                seq.append((branch[-1].e_out, b_last, f"{nid}_join"))
            return f"{nid}_split", f"{nid}_join"

        entry, exit_ = emit(pool.elements)
        add("startEvent", f"{pool.name}_start")
        add("endEvent", f"{pool.name}_end")
        if entry is not None:
            seq.insert(0, (pool.elements[0].e_in, f"{pool.name}_start", entry))
            seq.append((pool.elements[-1].e_out, exit_, f"{pool.name}_end"))
        used: dict[str, int] = {}
        for fid, src, dst in seq:
            used[fid] = used.get(fid, 0) + 1
            if used[fid] > 1:
                fid = f"{fid}_{used[fid]}"
            ET.SubElement(proc, _Q + "sequenceFlow", id=fid, sourceRef=src, targetRef=dst)
    for i, mf in enumerate(model.message_flows):
        src = node_of.get((mf.sender, mf.channel, mf.message, "sendTask"), "")
        dst = node_of.get((mf.receiver, mf.channel, mf.message, "receiveTask"), "")
        ET.SubElement(collab, _Q + "messageFlow", id=f"MessageFlow_{i + 1}", name=mf.channel,
                      sourceRef=src, targetRef=dst, messageRef=msg_ids[(mf.channel, mf.message)])
    for (ch, m), mid in msg_ids.items():
        ET.SubElement(root, _Q + "message", id=mid, name=m)
    root.extend(procs)
    ET.indent(root)
    return ET.tostring(root, encoding="unicode", xml_declaration=True) + "\n"

