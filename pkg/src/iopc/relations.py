"""Association relationships over syntax-tree nodes, and their reduction.

Relationships between tree nodes of one participant:

* ``Init(N)``  children that start when N starts
* ``Next(A)``  the sibling that starts when A ends
* ``End(A)``   the composite that ends when A ends
* ``And(N)``   branches an interleaving waits for
* ``Xor(A)``   sibling choice branches disabled once A runs

plus ``Enable(S) = [R]`` from the sending atomic to the receiving atomic of
each message.  Reduction keeps atomic (leaf) processes only:

* ``Activate(a)``   atomics that become Waiting when a is Done
* ``Inactivate(a)`` atomics disabled when a runs (sibling choice branches)
* ``Parallel``      join groups; an activation that leaves an interleaving is
  gated on its join, whose condition lists the sets of atomics that may
  complete it (several sets when a branch ends in a choice)
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from itertools import product

from .csp import CspSpec
from .syntax import Node, SyntaxTree, syntax_tree


@dataclass
class RelationSet:
    tree: SyntaxTree
    init: dict[Node, list[Node]] = field(default_factory=dict)
    next: dict[Node, list[Node]] = field(default_factory=dict)
    end: dict[Node, list[Node]] = field(default_factory=dict)
    and_rel: dict[Node, list[Node]] = field(default_factory=dict)
    xor: dict[Node, list[Node]] = field(default_factory=dict)
    enable: dict[Node, list[Node]] = field(default_factory=dict)

    def named(self, relation: str) -> dict[str, list[str]]:
        """A relation keyed by node id, for comparisons and display."""
        table = getattr(self, relation)
        return {k.id: [v.id for v in vs] for k, vs in table.items()}


@dataclass
class JoinGroup:
    id: str
    participant: str
    alternatives: tuple[frozenset[str], ...]

    @property
    def members(self) -> frozenset[str]:
        return frozenset().union(*self.alternatives)


@dataclass
class ReducedRelationSet:
    atomics: list[str]
    owner: dict[str, str]
    activate: dict[str, list[str]] = field(default_factory=dict)
    inactivate: dict[str, list[str]] = field(default_factory=dict)
    gates: dict[str, list[str]] = field(default_factory=dict)
    groups: dict[str, JoinGroup] = field(default_factory=dict)
    parallel: dict[str, str] = field(default_factory=dict)
    enable: dict[str, list[str]] = field(default_factory=dict)
    initials: dict[str, list[str]] = field(default_factory=dict)
    finals: dict[str, list[str]] = field(default_factory=dict)
    completion: dict[str, tuple[frozenset[str], ...]] = field(default_factory=dict)

    def ids(self) -> set[str]:
        """Every process id mentioned anywhere in the reduced set."""
        out = set(self.atomics) | set(self.owner)
        for table in (self.activate, self.inactivate, self.enable, self.initials, self.finals):
            for k, vs in table.items():
                if k not in self.initials and k not in self.finals:
                    out.add(k)
                out.update(vs)
        out.update(self.parallel)
        for group in self.groups.values():
            out |= group.members
        for alts in self.completion.values():
            for alt in alts:
                out |= alt
        return out


def extract_relations(spec: CspSpec, tree: SyntaxTree | None = None) -> RelationSet:
    tree = tree or syntax_tree(spec)
    rel = RelationSet(tree)
    for name in tree.participants:
        _visit(tree.definition(name), rel)
    senders, receivers = {}, {}
    for leaf in tree.leaves():
        if leaf.participant not in tree.participants:
            continue
        for action in leaf.actions:
            if "!" in action:
                senders.setdefault(action.replace("!", "."), []).append(leaf)
            elif "?" in action:
                receivers.setdefault(action.replace("?", "."), []).append(leaf)
    for key, sends in senders.items():
        for s in sends:
            targets = receivers.get(key, [])
            if targets:
                rel.enable.setdefault(s, []).extend(targets)
    return rel


def _visit(node: Node, rel: RelationSet):
    kids = node.children
    if not kids:
        return
    if node.label in ("definition", "sequence"):
        rel.init[node] = [kids[0]]
        for a, b in zip(kids, kids[1:]):
            rel.next[a] = [b]
        rel.end[kids[-1]] = [node]
    elif node.label == "parallel":
        rel.init[node] = list(kids)
        rel.and_rel[node] = list(kids)
    elif node.label in ("choice", "eventChoice"):
        rel.init[node] = list(kids)
        for k in kids:
            rel.end[k] = [node]
            rel.xor[k] = [o for o in kids if o is not k]
    for k in kids:
        _visit(k, rel)


class _Reducer:
    def __init__(self, rel: RelationSet):
        self.rel = rel
        self._first = {}
        self._completion = {}

    def is_atomic(self, n: Node) -> bool:
        return n.is_leaf

    def first(self, n: Node) -> list[Node]:
        """Atomics that become Waiting when n starts."""
        if n not in self._first:
            if self.is_atomic(n):
                out = [n]
            else:
                out = [a for c in self.rel.init.get(n, []) for a in self.first(c)]
            self._first[n] = out
        return self._first[n]

    def completion(self, n: Node) -> tuple[frozenset[str], ...]:
        """Sets of atomics whose joint completion completes n (any set suffices)."""
        if n not in self._completion:
            if self.is_atomic(n):
                out = (frozenset([n.id]),)
            elif n in self.rel.and_rel:
                parts = [self.completion(c) for c in self.rel.and_rel[n]]
                out = tuple(dict.fromkeys(frozenset().union(*combo) for combo in product(*parts)))
            else:
                enders = [c for c in n.children if self.rel.end.get(c) == [n]]
                out = tuple(dict.fromkeys(alt for c in enders for alt in self.completion(c)))
            self._completion[n] = out
        return self._completion[n]

    def exit_walk(self, a: Node):
        """Follow a's completion upward: (activated atomics, join gates, reached root?)."""
        gates = []
        x = a
        while True:
            if x in self.rel.next:
                return [t for y in self.rel.next[x] for t in self.first(y)], gates, False
            p = x.parent
            if p is None or x.label == "definition":
                return [], gates, True
            if p in self.rel.and_rel:
                gates.append(p)
            x = p

    def disabled_by(self, a: Node) -> list[Node]:
        out = []
        x = a
        while True:
            if x in self.rel.xor:
                out += [t for s in self.rel.xor[x] for t in self.first(s)]
            p = x.parent
            if p is None or p.label == "definition" or a not in self.first(p):
                return out
            x = p


def reduce(relations: RelationSet, spec: CspSpec | None = None) -> ReducedRelationSet:
    """Collapse the relationships onto atomic processes."""
    tree = relations.tree
    red = _Reducer(relations)
    out = ReducedRelationSet(atomics=[], owner={})
    for name in tree.participants:
        root = tree.definition(name)
        leaves = [n for n in root.walk() if n.is_leaf]
        out.atomics += [n.id for n in leaves]
        out.owner.update({n.id: name for n in leaves})
        out.initials[name] = [n.id for n in red.first(root)]
        out.completion[name] = red.completion(root)
        # join groups get their own ids so no composite id survives reduction
        pars = [n for n in root.walk() if n in relations.and_rel]
        join_id = {p: f"{name}.J{i}" for i, p in enumerate(pars, 1)}
        finals = []
        for n in leaves:
            targets, gates, at_root = red.exit_walk(n)
            if targets:
                out.activate[n.id] = [t.id for t in targets]
            if gates:
                out.gates[n.id] = [join_id[g] for g in gates]
            if at_root:
                finals.append(n.id)
            disabled = red.disabled_by(n)
            if disabled:
                out.inactivate[n.id] = [t.id for t in disabled]
        out.finals[name] = finals
        # innermost interleavings first so each atomic maps to its nearest join
        for p in reversed(pars):
            group = JoinGroup(join_id[p], name, red.completion(p))
            out.groups[group.id] = group
            for member in sorted(group.members):
                out.parallel.setdefault(member, group.id)
    for s, rs in relations.enable.items():
        out.enable[s.id] = [r.id for r in rs]
    return out


# ------------------------------------------------------------------ dumping


def _short(node_id: str, participant: str | None) -> str:
    if participant and node_id.startswith(participant + "."):
        return node_id[len(participant) + 1:]
    return node_id


def _key(node_id: str):
    m = re.fullmatch(r"(.*?)\.?([PJ])(\d+)", node_id)
    return (m.group(1), m.group(2), int(m.group(3))) if m else (node_id, "", -1)


def _fmt(name, lhs, rhs):
    return f"{name}({lhs}) = [{', '.join(rhs)}]"


def dump_relations(rels) -> str:
    """Sorted listing, one section per participant plus an Enable section."""
    if isinstance(rels, RelationSet):
        return _dump_full(rels)
    return _dump_reduced(rels)


def _dump_full(rel: RelationSet) -> str:
    sections = []
    for name in rel.tree.participants:
        lines = []
        for label, table in (("Init", rel.init), ("Next", rel.next), ("End", rel.end),
                             ("And", rel.and_rel), ("Xor", rel.xor)):
            for k, vs in table.items():
                if k.participant == name:
                    lines.append(_fmt(label, _short(k.id, name), [_short(v.id, name) for v in vs]))
        sections.append(_section(name, lines))
    lines = [_fmt("Enable", k.id, [v.id for v in sorted(vs, key=lambda n: _key(n.id))])
             for k, vs in rel.enable.items()]
    sections.append(_section("Enable", lines))
    return "".join(sections)


def _dump_reduced(red: ReducedRelationSet) -> str:
    sections = []
    for name in red.initials:
        def short(ids):
            return [_short(i, name) for i in sorted(ids, key=_key)]
        lines = [_fmt("Initial", name, short(red.initials[name])),
                 _fmt("Final", name, ["&".join(short(alt)) for alt in red.completion[name]])]
        for a in red.atomics:
            if red.owner[a] != name:
                continue
            if a in red.activate:
                lines.append(_fmt("Activate", _short(a, name), short(red.activate[a])))
            if a in red.inactivate:
                lines.append(_fmt("Inactivate", _short(a, name), short(red.inactivate[a])))
            if a in red.gates:
                lines.append(_fmt("Gate", _short(a, name), short(red.gates[a])))
            if a in red.parallel:
                group = red.groups[red.parallel[a]]
                lines.append(_fmt("Parallel", _short(a, name), short(group.members - {a})))
        for gid, group in red.groups.items():
            if group.participant == name:
                lines.append(_fmt("Join", _short(gid, name), ["&".join(short(alt)) for alt in group.alternatives]))
        sections.append(_section(name, lines))
    lines = [_fmt("Enable", k, sorted(vs, key=_key)) for k, vs in red.enable.items()]
    sections.append(_section("Enable", lines))
    return "".join(sections)


def _section(title, lines):
    body = "".join(line + "\n" for line in sorted(lines))
    return f"# {title}\n{body}"
