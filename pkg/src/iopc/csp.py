"""Abstract syntax for the CSP# subset, with a parser and canonical printer.

Supported operators: event prefix ``e -> P``, channel output ``ch!m -> P``,
channel input ``ch?m -> P``, ``Skip``, sequential composition ``;``,
interleaving ``||``, external choice ``[]``, event-based choice ``[*]`` and
process calls ``Q()``.  Text form::

    channel cMB 1;
    Broker() = (event_e1 -> Skip; cMB?SupplierOrder -> Skip; event_e2 -> Skip); (...);
    System() = Broker() || Supplier();

The ``System`` definition names the participants.  When it is absent the
system is every definition that no other definition calls, in text order.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Union

from .errors import CspError, ParseError

SYSTEM = "System"


@dataclass(frozen=True)
class Skip:
    pass


@dataclass(frozen=True)
class EventPrefix:
    event: str
    cont: "Process"


@dataclass(frozen=True)
class Send:
    channel: str
    message: str
    cont: "Process"


@dataclass(frozen=True)
class Recv:
    channel: str
    message: str
    cont: "Process"


@dataclass(frozen=True)
class Seq:
    """Sequential composition of two or more processes."""

    items: tuple["Process", ...]


@dataclass(frozen=True)
class Par:
    branches: tuple["Process", ...]


@dataclass(frozen=True)
class ExtChoice:
    branches: tuple["Process", ...]


@dataclass(frozen=True)
class EventChoice:
    """Choice resolved only by the receive that starts each branch."""

    branches: tuple["Process", ...]


@dataclass(frozen=True)
class Call:
    name: str


Process = Union[Skip, EventPrefix, Send, Recv, Seq, Par, ExtChoice, EventChoice, Call]
PREFIXES = (EventPrefix, Send, Recv)
COMPOSITES = (Par, ExtChoice, EventChoice)
OPERATORS = {Par: "||", ExtChoice: "[]", EventChoice: "[*]"}
SKIP = Skip()


@dataclass(frozen=True)
class CspSpec:
    channels: tuple[tuple[str, int], ...] = ()
    definitions: tuple[tuple[str, Process], ...] = ()
    system: tuple[str, ...] = ()

    def process(self, name: str) -> Process:
        for n, body in self.definitions:
            if n == name:
                return body
        raise KeyError(name)

    @property
    def defs(self) -> dict[str, Process]:
        return dict(self.definitions)

    @property
    def capacities(self) -> dict[str, int]:
        return dict(self.channels)


def action_label(p) -> str:
    """Step label of a prefix node: ``e``, ``ch!m`` or ``ch?m``."""
    if isinstance(p, EventPrefix):
        return p.event
    if isinstance(p, Send):
        return f"{p.channel}!{p.message}"
    return f"{p.channel}?{p.message}"


def subterms(p):
    """Direct children of a process term."""
    if isinstance(p, PREFIXES):
        return (p.cont,)
    if isinstance(p, Seq):
        return p.items
    if isinstance(p, COMPOSITES):
        return p.branches
    return ()


def iter_terms(p):
    stack = [p]
    while stack:
        q = stack.pop()
        yield q
        stack.extend(reversed(subterms(q)))


def calls(p) -> list[str]:
    return [q.name for q in iter_terms(p) if isinstance(q, Call)]


def alphabet(spec: CspSpec):
    """(events, channels, messages) occurring in the spec's processes.

    ``messages`` holds (channel, message) pairs.
    """
    events, channels, messages = set(), set(), set()
    for _, body in spec.definitions:
        for q in iter_terms(body):
            if isinstance(q, EventPrefix):
                events.add(q.event)
            elif isinstance(q, (Send, Recv)):
                channels.add(q.channel)
                messages.add((q.channel, q.message))
    return events, channels, messages


def default_system(definitions) -> tuple[str, ...]:
    called = {c for _, body in definitions for c in calls(body)}
    return tuple(n for n, _ in definitions if n not in called)


def check_spec(spec: CspSpec) -> None:
    """Raise CspError if the spec violates its structural invariants."""
    names = [n for n, _ in spec.definitions]
    if len(set(names)) != len(names):
        raise CspError("duplicate process definition")
    if SYSTEM in names:
        raise CspError("System is reserved for the system composition")
    declared = {c for c, _ in spec.channels}
    if len(declared) != len(spec.channels):
        raise CspError("duplicate channel declaration")
    for name in spec.system:
        if name not in names:
            raise CspError(f"system references undefined process {name!r}")
    for name, body in spec.definitions:
        for q in iter_terms(body):
            if isinstance(q, (Send, Recv)) and q.channel not in declared:
                raise CspError(f"{name}: undeclared channel {q.channel!r}")
            if isinstance(q, Call) and q.name not in names:
                raise CspError(f"{name}: call to undefined process {q.name!r}")
            if isinstance(q, Seq) and len(q.items) < 2:
                raise CspError(f"{name}: sequence with fewer than two items")
            if isinstance(q, COMPOSITES) and len(q.branches) < 2:
                raise CspError(f"{name}: {OPERATORS[type(q)]} with fewer than two branches")
            if isinstance(q, EventChoice):
                for b in q.branches:
                    if not _starts_with_receive(b):
                        raise CspError(f"{name}: [*] branch does not begin with a receive")


def _starts_with_receive(p) -> bool:
    while True:
        if isinstance(p, Recv):
            return True
        if isinstance(p, EventPrefix):
            p = p.cont
        elif isinstance(p, Seq):
            head = p.items[0]
            if isinstance(head, EventPrefix) and head.cont == SKIP:
                p = Seq(p.items[1:]) if len(p.items) > 2 else p.items[1]
            else:
                p = head
        else:
            return False


# ---------------------------------------------------------------- printing


def format_process(p) -> str:
    if isinstance(p, Skip):
        return "Skip"
    if isinstance(p, PREFIXES):
        return f"{action_label(p)} -> {_operand(p.cont)}"
    if isinstance(p, Seq):
        return "; ".join(_operand(q) for q in p.items)
    if isinstance(p, Call):
        return f"{p.name}()"
    op = f" {OPERATORS[type(p)]} "
    return "(" + op.join(_operand(q) for q in p.branches) + ")"


def _operand(p) -> str:
    text = format_process(p)
    return f"({text})" if isinstance(p, Seq) else text


def format_definition(name: str, body) -> str:
    return f"{name}() = {format_process(body)};"


def print_csp(spec: CspSpec) -> str:
    lines = [f"channel {c} {n};" for c, n in spec.channels]
    lines += [format_definition(n, b) for n, b in spec.definitions]
    if spec.system != default_system(spec.definitions):
        if len(spec.system) == 1:
            body = Call(spec.system[0])
        else:
            body = Par(tuple(Call(n) for n in spec.system))
        lines.append(f"{SYSTEM}() = {format_process(body)};")
    return "\n".join(lines) + "\n"


# ----------------------------------------------------------------- parsing

_TOKEN = re.compile(
    r"(?P<ws>[ \t\r]+)|(?P<nl>\n)|(?P<comment>//[^\n]*)"
    r"|(?P<num>\d+)|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op>->|\|\||\[\*\]|\[\]|[();=!?])"
)


def tokenize(text):
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
        self.tokens = tokenize(text)
        self.i = 0

    def peek(self, k=0):
        return self.tokens[min(self.i + k, len(self.tokens) - 1)][0]

    def error(self, message):
        _, line, col = self.tokens[self.i]
        raise ParseError(message, line, col)

    def take(self):
        tok = self.peek()
        self.i += 1
        return tok

    def expect(self, value):
        if self.peek() != value:
            self.error(f"expected {value!r}, found {self.peek()!r}")
        self.i += 1

    def ident(self):
        tok = self.peek()
        if not re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", tok):
            self.error(f"expected identifier, found {tok!r}")
        self.i += 1
        return tok

    def spec(self):
        channels, definitions, system = [], [], None
        while self.peek() != "<eof>":
            if self.peek() == "channel":
                self.i += 1
                name = self.ident()
                if not self.peek().isdigit():
                    self.error("expected channel capacity")
                channels.append((name, int(self.take())))
                self.expect(";")
                continue
            line, col = self.tokens[self.i][1:]
            name = self.ident()
            self.expect("(")
            self.expect(")")
            self.expect("=")
            body = self.seq()
            self.expect(";")
            if name == SYSTEM:
                system = self._system_names(body, line, col)
            else:
                definitions.append((name, body))
        definitions = tuple(definitions)
        spec = CspSpec(tuple(channels), definitions, system if system is not None else default_system(definitions))
        try:
            check_spec(spec)
        except CspError as exc:
            raise ParseError(str(exc)) from None
        return spec

    @staticmethod
    def _system_names(body, line, col):
        if isinstance(body, Call):
            return (body.name,)
        if isinstance(body, Par) and all(isinstance(b, Call) for b in body.branches):
            return tuple(b.name for b in body.branches)
        raise ParseError("System must be a call or an interleaving of calls", line, col)

    def seq(self):
        items = [self.par()]
        # a ';' followed by a definition head or EOF terminates the body
        while self.peek() == ";" and self._continues_body():
            self.i += 1
            items.append(self.par())
        return items[0] if len(items) == 1 else Seq(tuple(items))

    def _continues_body(self):
        nxt = self.peek(1)
        if nxt in ("<eof>", "channel"):
            return False
        if re.fullmatch(r"[A-Za-z_]\w*", nxt) and self.peek(2) == "(" and self.peek(3) == ")" and self.peek(4) == "=":
            return False
        return True

    def par(self):
        return self._chain(self.choice, {"||": Par})

    def choice(self):
        return self._chain(self.prefix, {"[]": ExtChoice, "[*]": EventChoice})

    def _chain(self, operand, ops):
        first = operand()
        if self.peek() not in ops:
            return first
        cls = ops[self.peek()]
        branches = [first]
        while self.peek() in ops:
            if ops[self.peek()] is not cls:
                self.error("mixing [] and [*] needs parentheses")
            self.i += 1
            branches.append(operand())
        return cls(tuple(branches))

    def prefix(self):
        tok = self.peek()
        if tok == "(":
            self.i += 1
            inner = self.seq()
            self.expect(")")
            return inner
        if tok == "Skip":
            self.i += 1
            return SKIP
        name = self.ident()
        nxt = self.peek()
        if nxt == "->":
            self.i += 1
            return EventPrefix(name, self.prefix())
        if nxt in ("!", "?"):
            self.i += 1
            msg = self.ident()
            self.expect("->")
            cls = Send if nxt == "!" else Recv
            return cls(name, msg, self.prefix())
        if nxt == "(" and self.peek(1) == ")":
            self.i += 2
        return Call(name)


def parse_csp(text: str) -> CspSpec:
    """Parse CSP#-subset text; raises ParseError with a location on bad input."""
    return _Parser(text).spec()


def parse_process(text: str):
    """Parse a single process body (no definitions)."""
    parser = _Parser(text)
    body = parser.seq()
    if parser.peek() == ";":
        parser.i += 1
    if parser.peek() != "<eof>":
        parser.error(f"unexpected {parser.peek()!r}")
    return body
