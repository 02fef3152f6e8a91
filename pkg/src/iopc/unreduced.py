"""Contract variant driven by the unreduced relationships.

Every syntax-tree node below a definition (and the definition itself) carries
a state.  Requests still target atomics only, but completion propagates
through composite nodes: a finished node starts its ``Next`` sibling or
finishes the composite named by ``End``; an interleaving finishes when all
of its ``And`` branches are Done; starting a composite starts its ``Init``
children; running a node of a choice branch disables the ``Xor`` siblings.

This is the baseline the reduction is measured against: same behaviour, more
tracked state variables.
"""

from __future__ import annotations

from dataclasses import dataclass

from .contract import DISABLED, DONE, WAITING, ContractState, RequestResult
from .csp import CspSpec
from .errors import ContractError
from .relations import RelationSet, extract_relations
from .syntax import Node


@dataclass
class UnreducedContract:
    relations: RelationSet
    channels: tuple[tuple[str, int], ...]
    messages: tuple[tuple[str, str], ...]

    def __post_init__(self):
        tree = self.relations.tree
        self.participants = tree.participants
        self.nodes: list[Node] = [n for p in self.participants for n in tree.definition(p).walk()]
        self.index = {n: i for i, n in enumerate(self.nodes)}
        self.atomics = [n for n in self.nodes if n.is_leaf]
        self.by_id = {n.id: n for n in self.atomics}
        self._ch = {c: i for i, (c, _) in enumerate(self.channels)}
        self._msg = {cm: i for i, cm in enumerate(self.messages)}

    @property
    def state_variables(self) -> int:
        return len(self.nodes)

    def initial(self) -> ContractState:
        states = [DISABLED] * len(self.nodes)
        for p in self.participants:
            self._start(self.relations.tree.definition(p), states)
        return ContractState(tuple(states), tuple(() for _ in self.channels),
                             tuple(0 for _ in self.messages))

    def _start(self, node, states):
        states[self.index[node]] = WAITING
        for c in self.relations.init.get(node, []):
            self._start(c, states)

    def _finish(self, node, states):
        rel = self.relations
        states[self.index[node]] = DONE
        if node in rel.next:
            for n in rel.next[node]:
                self._start(n, states)
            return
        parent = node.parent
        if node.label == "definition" or parent is None:
            return
        if parent in rel.and_rel:
            if all(states[self.index[b]] == DONE for b in rel.and_rel[parent]):
                self._finish(parent, states)
        elif rel.end.get(node) == [parent]:
            self._finish(parent, states)

    def _disable(self, node, states):
        for n in node.walk():
            states[self.index[n]] = DISABLED

    def handle(self, state: ContractState, atomic_id: str) -> RequestResult:
        try:
            node = self.by_id[atomic_id]
        except KeyError:
            raise ContractError(f"unknown atomic {atomic_id!r}") from None
        i = self.index[node]
        if state.states[i] != WAITING:
            return RequestResult(False, "not enabled")
        queues, pending = list(state.queues), list(state.pending)
        actions = node.actions
        kind = node.kind
        if kind in ("send", "receive"):
            ch, m = actions[0].replace("?", "!").split("!")
            c, k = self._ch[ch], self._msg[(ch, m)]
            if kind == "send":
                if len(queues[c]) >= self.channels[c][1]:
                    return RequestResult(False, "channel full")
                queues[c] += (m,)
                pending[k] += 1
            else:
                if not queues[c] or queues[c][0] != m:
                    return RequestResult(False, "missing message")
                queues[c] = queues[c][1:]
                pending[k] -= 1
        states = list(state.states)
        x = node
        while x is not None and x.label != "definition":
            for sibling in self.relations.xor.get(x, []):
                self._disable(sibling, states)
            x = x.parent
        self._finish(node, states)
        return RequestResult(True, state=ContractState(tuple(states), tuple(queues), tuple(pending)))

    def enabled(self, state: ContractState):
        out = []
        for n in self.atomics:
            res = self.handle(state, n.id)
            if res.accepted:
                out.append((n.id, res))
        return out

    def is_final(self, state: ContractState) -> bool:
        tree = self.relations.tree
        return all(state.states[self.index[tree.definition(p)]] == DONE for p in self.participants)

    def labels(self, atomic_id: str) -> tuple[str, ...]:
        return self.by_id[atomic_id].actions


def build_unreduced_contract(spec: CspSpec, relations: RelationSet | None = None) -> UnreducedContract:
    relations = relations or extract_relations(spec)
    atomics = [n for n in relations.tree.leaves() if n.participant in relations.tree.participants]
    messages = set()
    for n in atomics:
        if n.kind in ("send", "receive"):
            ch, m = n.actions[0].replace("?", "!").split("!")
            messages.add((ch, m))
    return UnreducedContract(relations, tuple(spec.channels), tuple(sorted(messages)))
