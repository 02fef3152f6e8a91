"""Textual collaboration format: parser and canonical printer.

Grammar (whitespace and ``//`` comments are insignificant)::

    spec   := [pool ("||" pool)*] "messages" "{" (msg [","])* "}"
    pool   := "pool" "(" ident "," elems ")"
    elems  := elem (";" elem)*
    elem   := "task" "(" sf "," sf ["," ident] ")"
            | ("sndTask" | "rcvTask") "(" sf "," "(" ident "," ident ")" "," sf ")"
            | ("andGate" | "xorGate" | "eventbaseGate") "(" sf "," "(" branch ("," branch)* ")" "," sf ")"
    branch := "(" elems ")"
    msg    := "(" ident "(" ident "," ident ")" "," ident ")"

The optional third argument of ``task`` names the task; unnamed tasks get a
synthesized id.
"""

from __future__ import annotations

import re

from .errors import ModelError, ParseError
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
    assign_ids,
    walk,
)

GATES = {"andGate": AndGate, "xorGate": XorGate, "eventbaseGate": EventGate}
GATE_KEYWORDS = {cls: kw for kw, cls in GATES.items()}

_TOKEN = re.compile(
    r"(?P<ws>[ \t\r]+)|(?P<nl>\n)|(?P<comment>//[^\n]*)"
    r"|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)|(?P<par>\|\|)|(?P<punct>[(),;{}])"
)


def _tokenize(text):
    tokens = []
    line, line_start, pos = 1, 0, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        if kind == "nl":
            line, line_start = line + 1, m.end()
        elif kind not in ("ws", "comment"):
            tokens.append((m.group(), line, m.start() - line_start + 1))
        pos = m.end()
    tokens.append(("<eof>", line, pos - line_start + 1))
    return tokens


class _Parser:
    def __init__(self, text):
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self, offset=0):
        return self.tokens[min(self.i + offset, len(self.tokens) - 1)][0]

    def error(self, message):
        _, line, col = self.tokens[self.i]
        raise ParseError(message, line, col)

    def expect(self, value):
        tok = self.peek()
        if tok != value:
            self.error(f"expected {value!r}, found {tok!r}")
        self.i += 1

    def ident(self):
        tok = self.peek()
        if not re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", tok):
            self.error(f"expected identifier, found {tok!r}")
        self.i += 1
        return tok

    def spec(self):
        pools = []
        if self.peek() == "pool":
            pools.append(self.pool())
            while self.peek() == "||":
                self.i += 1
                pools.append(self.pool())
        self.expect("messages")
        self.expect("{")
        flows = []
        while self.peek() == "(":
            flows.append(self.msg())
            if self.peek() == ",":
                self.i += 1
        self.expect("}")
        if self.peek() != "<eof>":
            self.error(f"unexpected trailing input {self.peek()!r}")
        return CollaborationModel(tuple(pools), tuple(flows))

    def pool(self):
        self.expect("pool")
        self.expect("(")
        name = self.ident()
        self.expect(",")
        elements = self.elems()
        self.expect(")")
        return Pool(name, elements)

    def elems(self):
        out = [self.elem()]
        while self.peek() == ";":
            self.i += 1
            out.append(self.elem())
        return tuple(out)

    def elem(self):
        kw = self.peek()
        if kw == "task":
            self.i += 1
            self.expect("(")
            e_in = self.ident()
            self.expect(",")
            e_out = self.ident()
            name = None
            if self.peek() == ",":
                self.i += 1
                name = self.ident()
            self.expect(")")
            return Task(e_in, e_out, name)
        if kw in ("sndTask", "rcvTask"):
            self.i += 1
            self.expect("(")
            e_in = self.ident()
            self.expect(",")
            self.expect("(")
            ch = self.ident()
            self.expect(",")
            m = self.ident()
            self.expect(")")
            self.expect(",")
            e_out = self.ident()
            self.expect(")")
            return (SndTask if kw == "sndTask" else RcvTask)(e_in, ch, m, e_out)
        if kw in GATES:
            self.i += 1
            self.expect("(")
            e_in = self.ident()
            self.expect(",")
            self.expect("(")
            branches = [self.branch()]
            while self.peek() == ",":
                self.i += 1
                branches.append(self.branch())
            self.expect(")")
            self.expect(",")
            e_out = self.ident()
            self.expect(")")
            return GATES[kw](e_in, tuple(branches), e_out)
        self.error(f"expected element, found {kw!r}")

    def branch(self):
        self.expect("(")
        elements = self.elems()
        self.expect(")")
        return elements

    def msg(self):
        self.expect("(")
        ch = self.ident()
        self.expect("(")
        sender = self.ident()
        self.expect(",")
        receiver = self.ident()
        self.expect(")")
        self.expect(",")
        m = self.ident()
        self.expect(")")
        return MessageFlow(ch, sender, receiver, m)


def parse_bnf_text(text: str) -> CollaborationModel:
    """Parse the textual collaboration format.

    Raises ParseError on lexical/syntax errors and ModelError for duplicate
    identifiers or tasks that reference a message missing from the message list.
    """
    model = _Parser(text).spec()
    problems = []
    seen = set()
    for pool in model.pools:
        if pool.name in seen:
            problems.append(f"duplicate pool name {pool.name!r}")
        seen.add(pool.name)
    declared = set()
    for mf in model.message_flows:
        key = (mf.channel, mf.message)
        if key in declared:
            problems.append(f"duplicate message ({mf.channel}, {mf.message})")
        declared.add(key)
    names = set()
    for pool in model.pools:
        for el in walk(pool.elements):
            if isinstance(el, (SndTask, RcvTask)) and (el.channel, el.message) not in declared:
                problems.append(f"pool {pool.name}: ({el.channel}, {el.message}) is not declared in messages")
            if isinstance(el, Task) and el.name:
                if el.name in names:
                    problems.append(f"duplicate task name {el.name!r}")
                names.add(el.name)
    if problems:
        raise ModelError("; ".join(problems))
    return assign_ids(model)


def _print_elem(el) -> str:
    if isinstance(el, Task):
        name = f",{el.name}" if el.name else ""
        return f"task({el.e_in},{el.e_out}{name})"
    if isinstance(el, SndTask):
        return f"sndTask({el.e_in},({el.channel},{el.message}),{el.e_out})"
    if isinstance(el, RcvTask):
        return f"rcvTask({el.e_in},({el.channel},{el.message}),{el.e_out})"
    branches = ",".join(f"({_print_elems(b)})" for b in el.branches)
    return f"{GATE_KEYWORDS[type(el)]}({el.e_in},({branches}),{el.e_out})"


def _print_elems(elements) -> str:
    return "; ".join(_print_elem(el) for el in elements)


def print_bnf(model: CollaborationModel) -> str:
    """Canonical text: one pool per line, then the message block."""
    lines = []
    for i, pool in enumerate(model.pools):
        lead = "|| " if i else ""
        lines.append(f"{lead}pool({pool.name}, {_print_elems(pool.elements)})")
    lines.append("messages {")
    for mf in model.message_flows:
        lines.append(f"  ({mf.channel}({mf.sender},{mf.receiver}),{mf.message})")
    lines.append("}")
    return "\n".join(lines) + "\n"
