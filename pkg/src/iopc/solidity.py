"""Solidity (^0.8) source for a ContractModel.

The emitter reads only ``model.guard_table()``, ``model.final_table()`` and
``model.initial_indices()`` -- the same data the twin simulator executes -- so
every check and effect in the output has a counterpart in ``handle_request``:

* ``require`` owner, then ``Disabled`` -> "disabled", not ``Waiting`` -> "not enabled";
* send: channel room, enqueue, pending += 1, ``MessageForwarded`` per receiver;
* receive: message at the channel head, dequeue, pending -= 1;
* Done, Inactivate (Waiting -> Disabled), then Activate behind the join gates.
"""

from __future__ import annotations

import re

from .contract import ContractModel, GuardRow


def contract_name(name: str) -> str:
    ident = re.sub(r"\W", "_", name)
    if not ident or ident[0].isdigit():
        ident = "C_" + ident
    return ident


def function_name(row: GuardRow) -> str:
    return row.atomic.id.replace(".", "_")


def _gate_expr(row: GuardRow) -> str:
    parts = []
    for gate in row.gates:
        alts = [" && ".join(f"_done({x})" for x in alt) for alt in gate]
        parts.append(alts[0] if len(alts) == 1 else "(" + " || ".join(f"({a})" for a in alts) + ")")
    return " && ".join(parts)


class _Writer:
    def __init__(self):
        self.lines = []
        self.level = 0

    def __call__(self, text=""):
        self.lines.append(("    " * self.level + text) if text else "")

    def block(self, head):
        self(head + " {")
        self.level += 1

    def end(self):
        self.level -= 1
        self("}")

    def text(self):
        return "\n".join(self.lines) + "\n"


def emit_solidity(model: ContractModel) -> str:
    rows = model.guard_table()
    finals = model.final_table()
    n_atoms, n_parts = len(rows), len(model.participants)
    n_chans, n_msgs = len(model.channels), len(model.messages)
    w = _Writer()
    w("// SPDX-License-Identifier: MIT")
    w(f"// Generated from collaboration {model.name}; do not edit by hand.")
    w("pragma solidity ^0.8.0;")
    w()
    w.block(f"contract {contract_name(model.name)}")
    w("enum State { Disabled, Waiting, Executing, Done }")
    w()
    w("event Transition(uint256 indexed atomic, State from, State to);")
    if n_msgs:
        w("event MessageForwarded(uint256 indexed channel, uint256 indexed message, address receiver);")
    w()
    if n_atoms:
        w("// atomic processes")
        for row in rows:
            a = row.atomic
            w(f"//   {row.index}: {a.id} ({a.kind}) {' '.join(a.labels)}".rstrip())
        w(f"State[{n_atoms}] public state;")
    if n_parts:
        w(f"address[{n_parts}] public participant;  // {', '.join(model.participants)}")
    if n_chans:
        w(f"// channels: {', '.join(f'{i}={c}' for i, (c, _) in enumerate(model.channels))}")
        w(f"uint256[{n_chans}] public capacity;")
        w(f"uint256[][{n_chans}] private queue;")
        w(f"uint256[{n_chans}] private head;")
    if n_msgs:
        w(f"// messages: {', '.join(f'{i}=({c},{m})' for i, (c, m) in enumerate(model.messages))}")
        w(f"uint256[{n_msgs}] public pending;")
    w()
    _constructor(w, model)
    if n_atoms:
        _helpers(w, n_msgs > 0)
        for row in rows:
            _functions(w, model, row)
    w()
    w.block("function isFinal() public view returns (bool)")
    if n_parts:
        w(f"for (uint256 p = 0; p < {n_parts}; p++) if (!participantFinal(p)) return false;")
    w("return true;")
    w.end()
    if n_parts:
        w()
        w.block("function participantFinal(uint256 p) public view returns (bool)")
        for p, alts in enumerate(finals):
            cond = " || ".join("(" + " && ".join(f"_done({x})" for x in alt) + ")" for alt in alts) or "true"
            w(f"if (p == {p}) return {cond};")
        w("return false;")
        w.end()
    w.end()
    return w.text()


def _constructor(w, model):
    n_parts = len(model.participants)
    args = f"address[{n_parts}] memory parties" if n_parts else ""
    w.block(f"constructor({args})")
    if n_parts:
        w("participant = parties;")
    for i, (_, cap) in enumerate(model.channels):
        w(f"capacity[{i}] = {cap};")
    for i in model.initial_indices():
        w(f"_set({i}, State.Waiting);  // {model.atomics[i].id}")
    w.end()


def _helpers(w, with_messages):
    w()
    w.block("modifier onlyBy(uint256 p)")
    w('require(msg.sender == participant[p], "not owner");')
    w("_;")
    w.end()
    w()
    w.block("function _set(uint256 i, State s) private")
    w.block("if (state[i] != s)")
    w("emit Transition(i, state[i], s);")
    w("state[i] = s;")
    w.end()
    w.end()
    w()
    w.block("function _done(uint256 i) private view returns (bool)")
    w("return state[i] == State.Done;")
    w.end()
    w()
    w.block("function _enabled(uint256 i) private view")
    w('require(state[i] != State.Disabled, "disabled");')
    w('require(state[i] == State.Waiting, "not enabled");')
    w.end()
    if not with_messages:
        return
    w()
    w.block("function _send(uint256 c, uint256 k) private")
    w('require(queue[c].length - head[c] < capacity[c], "channel full");')
    w("queue[c].push(k);")
    w("pending[k] += 1;")
    w.end()
    w()
    w.block("function _receive(uint256 c, uint256 k) private")
    w('require(pending[k] > 0 && queue[c][head[c]] == k, "missing message");')
    w("head[c] += 1;")
    w("pending[k] -= 1;")
    w.end()


def _channel_effect(w, model, row):
    a = row.atomic
    if a.kind == "send":
        w(f"_send({row.channel}, {row.message});  // {a.channel}!{a.message}")
        for receiver in row.receivers:
            p = model.participants.index(receiver)
            w(f"emit MessageForwarded({row.channel}, {row.message}, participant[{p}]);")
    elif a.kind == "receive":
        w(f"_receive({row.channel}, {row.message});  // {a.channel}?{a.message}")


def _inactivate(w, row):
    for q in row.inactivate:
        w(f"if (state[{q}] == State.Waiting) _set({q}, State.Disabled);")


def _activate(w, row):
    if not row.activate:
        return
    gate = _gate_expr(row)
    if gate:
        w.block(f"if ({gate})")
    for q in row.activate:
        w(f"if (state[{q}] == State.Disabled || state[{q}] == State.Done) _set({q}, State.Waiting);")
    if gate:
        w.end()


def _functions(w, model, row):
    name, i = function_name(row), row.index
    w()
    if not model.two_call:
        w.block(f"function {name}() external onlyBy({row.owner})")
        w(f"_enabled({i});")
        _channel_effect(w, model, row)
        w(f"_set({i}, State.Done);")
        _inactivate(w, row)
        _activate(w, row)
        w.end()
        return
    w.block(f"function start_{name}() external onlyBy({row.owner})")
    w(f"_enabled({i});")
    _channel_effect(w, model, row)
    w(f"_set({i}, State.Executing);")
    _inactivate(w, row)
    w.end()
    w()
    w.block(f"function complete_{name}() external onlyBy({row.owner})")
    w(f'require(state[{i}] == State.Executing, "not executing");')
    w(f"_set({i}, State.Done);")
    _activate(w, row)
    w.end()
