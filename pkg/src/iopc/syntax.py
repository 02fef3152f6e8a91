"""Syntax trees over CSP# specifications.

Internal nodes are composite processes (definitions, sequences, interleavings,
choices); leaves are atomic processes, i.e. prefix chains ending in ``Skip``
with no composition inside.  Framing chains that only carry ``event_*`` flow
events are not nodes of their own; they are attached to the enclosing
composite as ``frames``.

Nodes below each definition are numbered ``P1, P2, ...`` in pre-order, so the
leaves read left to right in the same order as the printed process.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .csp import (
    PREFIXES,
    Call,
    CspSpec,
    EventChoice,
    ExtChoice,
    Par,
    Recv,
    Send,
    Seq,
    Skip,
    action_label,
    format_process,
    iter_terms,
)

FRAME_PREFIX = "event_"

COMPOSITE_LABELS = {Par: "parallel", ExtChoice: "choice", EventChoice: "eventChoice"}


def is_flat(p) -> bool:
    """True for composition-free chains: prefixes, Skip, and sequences of those."""
    if isinstance(p, Skip):
        return True
    if isinstance(p, PREFIXES):
        return is_flat(p.cont)
    if isinstance(p, Seq):
        return all(not isinstance(q, Seq) and is_flat(q) for q in p.items)
    return False


def chain_actions(p) -> list[str]:
    return [action_label(q) for q in iter_terms(p) if isinstance(q, PREFIXES)]


def is_frame(label: str) -> bool:
    return label.startswith(FRAME_PREFIX)


def is_silent(p) -> bool:
    return is_flat(p) and all(is_frame(a) for a in chain_actions(p))


@dataclass(eq=False)
class Node:
    name: str
    label: str
    participant: str | None = None
    term: object = None
    children: list["Node"] = field(default_factory=list)
    parent: "Node | None" = field(default=None, repr=False)
    frames: tuple[str, ...] = ()

    @property
    def id(self) -> str:
        if self.label in ("definition", "spec") or self.participant is None:
            return self.name
        return f"{self.participant}.{self.name}"

    @property
    def is_leaf(self) -> bool:
        return not self.children and self.label != "definition"

    @property
    def actions(self) -> tuple[str, ...]:
        """Non-framing step labels of a leaf (``ch!m``, ``ch?m`` or a work event)."""
        if not self.is_leaf or self.term is None:
            return ()
        return tuple(a for a in chain_actions(self.term) if not is_frame(a))

    @property
    def kind(self) -> str:
        for q in iter_terms(self.term) if self.term is not None else ():
            if isinstance(q, Send):
                return "send"
            if isinstance(q, Recv):
                return "receive"
        return "internal"

    @property
    def text(self) -> str:
        return format_process(self.term) if self.term is not None else self.name

    def walk(self):
        yield self
        for c in self.children:
            yield from c.walk()

    def __repr__(self):
        return f"Node({self.id}, {self.label})"


@dataclass
class SyntaxTree:
    root: Node
    participants: tuple[str, ...]

    def definition(self, name: str) -> Node:
        for d in self.root.children:
            if d.name == name:
                return d
        raise KeyError(name)

    def nodes(self):
        return list(self.root.walk())

    def leaves(self, participant: str | None = None) -> list[Node]:
        roots = [self.definition(participant)] if participant else self.root.children
        return [n for r in roots for n in r.walk() if n.is_leaf]

    def node(self, node_id: str) -> Node:
        for n in self.root.walk():
            if n.id == node_id:
                return n
        raise KeyError(node_id)


def _make(term, participant) -> Node:
    if is_flat(term):
        return Node("", "atomic", participant, term)
    if isinstance(term, Call):
        return Node("", "defnCallLeft", participant, term)
    if isinstance(term, Seq):
        real, frames = _split_frames(term.items)
        if len(real) == 1:
            node = _make(real[0], participant)
            node.frames = tuple(frames) + node.frames
            return node
        node = Node("", "sequence", participant, term, frames=tuple(frames))
        node.children = [_make(q, participant) for q in real]
    else:
        node = Node("", COMPOSITE_LABELS[type(term)], participant, term)
        node.children = [_make(q, participant) for q in term.branches]
    for c in node.children:
        c.parent = node
    return node


def _split_frames(items):
    real, frames = [], []
    for q in items:
        if is_silent(q) and not isinstance(q, Skip):
            frames.extend(chain_actions(q))
        else:
            real.append(q)
    if not real:  # nothing but framing: keep it as one leaf
        return list(items[:1]), frames[1:]
    return real, frames


def _definition(name, body) -> Node:
    node = Node(name, "definition", name, body)
    if isinstance(body, Seq) and not is_flat(body):
        real, frames = _split_frames(body.items)
        node.frames = tuple(frames)
        node.children = [_make(q, name) for q in real]
    else:
        node.children = [_make(body, name)]
    for c in node.children:
        c.parent = node
    counter = 0
    for n in node.walk():
        if n is not node:
            counter += 1
            n.name = f"P{counter}"
    return node


def syntax_tree(spec: CspSpec) -> SyntaxTree:
    root = Node("spec", "spec")
    order = list(spec.system) + [n for n, _ in spec.definitions if n not in spec.system]
    defs = spec.defs
    for name in order:
        d = _definition(name, defs[name])
        d.parent = root
        root.children.append(d)
    return SyntaxTree(root, tuple(spec.system))
