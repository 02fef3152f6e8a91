"""Explicit-state semantics and soundness checking for CSP# specs.

Participants run interleaved and communicate only through bounded FIFO
channels.  Step rules:

* ``e -> P`` can always fire ``e``;
* ``ch!m -> P`` fires while ``|ch|`` is below the channel capacity;
* ``ch?m -> P`` fires when ``m`` is at the head of ``ch``;
* ``P; Q`` steps ``P``, continuing with ``Q`` once ``P`` is ``Skip``;
* ``P1 || ... || Pn`` interleaves its branches and is done when all are;
* ``P1 [] ... [] Pn`` offers every branch's first step and commits to it;
* ``P1 [*] ... [*] Pn`` only offers each branch's first receive; event
  prefixes in front of that receive are absorbed into the step.

A state is terminal when every participant is ``Skip``.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

from .csp import (
    SKIP,
    Call,
    CspSpec,
    EventChoice,
    EventPrefix,
    ExtChoice,
    Par,
    Recv,
    Send,
    Seq,
    Skip,
    alphabet,
    iter_terms,
)
from .errors import CspError

EVENT, SEND, RECEIVE = "internal-event", "send", "receive"
PASS, FAIL, INCONCLUSIVE = "PASS", "FAIL", "INCONCLUSIVE"
SOUNDNESS = ("deadlock-freedom", "terminability", "task-reachability", "message-drainage")
_MAX_UNFOLD = 64


@dataclass(frozen=True)
class Bounds:
    max_states: int = 1_000_000
    queue_depth: int | None = None  # None: each channel's declared capacity


@dataclass(frozen=True)
class Transition:
    kind: str
    participant: str
    label: str
    absorbed: tuple[str, ...] = ()
    path: tuple[int, ...] = field(default=(), compare=False)

    @property
    def labels(self) -> tuple[str, ...]:
        return self.absorbed + (self.label,)

    def __str__(self):
        return f"{self.participant}\t{self.label}"


@dataclass(frozen=True)
class GlobalState:
    participants: tuple[str, ...]
    continuations: tuple
    channel_names: tuple[str, ...]
    channels: tuple[tuple[str, ...], ...]

    def continuation(self, participant):
        return self.continuations[self.participants.index(participant)]

    def queue(self, channel) -> tuple[str, ...]:
        return self.channels[self.channel_names.index(channel)]

    @property
    def is_terminal(self) -> bool:
        return all(isinstance(p, Skip) for p in self.continuations)


@dataclass
class Verdict:
    property: str
    status: str
    counterexample: list[Transition] = field(default_factory=list)
    stats: dict = field(default_factory=dict)
    detail: str = ""
    witness: list[Transition] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.status == PASS

    def as_dict(self):
        return {
            "property": self.property,
            "status": self.status,
            "detail": self.detail,
            "counterexample": [{"participant": t.participant, "kind": t.kind, "label": t.label}
                               for t in self.counterexample],
            "witness": [str(w) for w in self.witness],
            "stats": dict(self.stats),
        }


# ------------------------------------------------------------ term semantics


def normalize(p, defs=None):
    """Canonical form: no leading Skip in sequences, no finished interleaving branches."""
    if isinstance(p, Seq):
        items = list(p.items)
        head = normalize(items[0], defs)
        while isinstance(head, Skip) and len(items) > 1:
            items.pop(0)
            head = normalize(items[0], defs)
        if len(items) == 1:
            return head
        return Seq((head,) + tuple(items[1:]))
    if isinstance(p, Par):
        branches = tuple(b for b in (normalize(b, defs) for b in p.branches) if not isinstance(b, Skip))
        if not branches:
            return SKIP
        return branches[0] if len(branches) == 1 else Par(branches)
    if isinstance(p, Call) and defs is not None and isinstance(defs[p.name], Skip):
        return SKIP
    return p


@dataclass(frozen=True)
class _Step:
    kind: str
    label: str
    channel: str | None
    message: str | None
    absorbed: tuple[str, ...]
    path: tuple[int, ...]
    target: object


def term_steps(p, defs, depth=0) -> list[_Step]:
    """Local steps of a process term, ignoring channel contents."""
    if isinstance(p, Skip):
        return []
    if isinstance(p, EventPrefix):
        return [_Step(EVENT, p.event, None, None, (), (), normalize(p.cont, defs))]
    if isinstance(p, Send):
        return [_Step(SEND, f"{p.channel}!{p.message}", p.channel, p.message, (), (), normalize(p.cont, defs))]
    if isinstance(p, Recv):
        return [_Step(RECEIVE, f"{p.channel}?{p.message}", p.channel, p.message, (), (), normalize(p.cont, defs))]
    if isinstance(p, Seq):
        rest = p.items[1:]
        return [_with(s, (0,) + s.path, normalize(Seq((s.target,) + rest), defs))
                for s in term_steps(p.items[0], defs, depth)]
    if isinstance(p, Par):
        out = []
        for i, b in enumerate(p.branches):
            for s in term_steps(b, defs, depth):
                branches = p.branches[:i] + (s.target,) + p.branches[i + 1:]
                out.append(_with(s, (i,) + s.path, normalize(Par(branches), defs)))
        return out
    if isinstance(p, ExtChoice):
        return [_with(s, (i,) + s.path, s.target)
                for i, b in enumerate(p.branches) for s in term_steps(b, defs, depth)]
    if isinstance(p, EventChoice):
        return [_with(s, (i,) + s.path, s.target)
                for i, b in enumerate(p.branches) for s in _receive_initial(b, defs, depth)]
    if isinstance(p, Call):
        if depth > _MAX_UNFOLD:
            raise CspError(f"unguarded recursion through {p.name}()")
        return term_steps(normalize(defs[p.name], defs), defs, depth + 1)
    raise CspError(f"unknown process term {p!r}")


def _with(step, path, target, absorbed=None):
    return _Step(step.kind, step.label, step.channel, step.message,
                 step.absorbed if absorbed is None else absorbed, path, target)


def _receive_initial(p, defs, depth, absorbed=()):
    if depth > _MAX_UNFOLD:
        raise CspError("event-based choice branch never reaches a receive")
    out = []
    for s in term_steps(p, defs, depth):
        if s.kind == RECEIVE:
            out.append(_with(s, s.path, s.target, absorbed + s.absorbed))
        elif s.kind == EVENT:
            for t in _receive_initial(s.target, defs, depth + 1, absorbed + s.absorbed + (s.label,)):
                out.append(_with(t, s.path + t.path, t.target, t.absorbed))
    return out


class Semantics:
    """Compiled interleaving semantics of one spec.

    Each participant's terms are interned to integers, so a global state is a
    tuple of local ids plus the channel queues.
    """

    def __init__(self, spec: CspSpec, bounds: Bounds | None = None):
        self.spec = spec
        self.bounds = bounds or Bounds()
        self.defs = spec.defs
        self.participants = tuple(spec.system)
        self.channel_names = tuple(c for c, _ in spec.channels)
        self.channel_index = {c: i for i, c in enumerate(self.channel_names)}
        depth = self.bounds.queue_depth
        self.capacity = tuple(depth if depth is not None else n for _, n in spec.channels)
        self._terms = [[] for _ in self.participants]
        self._ids = [{} for _ in self.participants]
        self._steps = [[] for _ in self.participants]

    def intern(self, k, term) -> int:
        ids = self._ids[k]
        i = ids.get(term)
        if i is None:
            i = ids[term] = len(self._terms[k])
            self._terms[k].append(term)
            self._steps[k].append(None)
        return i

    def term(self, k, i):
        return self._terms[k][i]

    def local_steps(self, k, i):
        steps = self._steps[k][i]
        if steps is None:
            steps = []
            for s in term_steps(self._terms[k][i], self.defs):
                ch = self.channel_index.get(s.channel) if s.channel else None
                steps.append((s, ch, self.intern(k, s.target)))
            self._steps[k][i] = steps
        return steps

    def initial(self):
        locals_ = tuple(self.intern(k, normalize(self.defs[name], self.defs))
                        for k, name in enumerate(self.participants))
        return locals_, tuple(() for _ in self.channel_names)

    def successors(self, state):
        locals_, queues = state
        out = []
        for k, i in enumerate(locals_):
            for s, ch, target in self.local_steps(k, i):
                if s.kind == SEND:
                    if len(queues[ch]) >= self.capacity[ch]:
                        continue
                    new_q = queues[:ch] + (queues[ch] + (s.message,),) + queues[ch + 1:]
                elif s.kind == RECEIVE:
                    q = queues[ch]
                    if not q or q[0] != s.message:
                        continue
                    new_q = queues[:ch] + (q[1:],) + queues[ch + 1:]
                else:
                    new_q = queues
                t = Transition(s.kind, self.participants[k], s.label, s.absorbed, s.path)
                out.append((t, (locals_[:k] + (target,) + locals_[k + 1:], new_q)))
        return out

    def is_terminal(self, state) -> bool:
        return all(isinstance(self._terms[k][i], Skip) for k, i in enumerate(state[0]))

    def to_global(self, state) -> GlobalState:
        locals_, queues = state
        terms = tuple(self._terms[k][i] for k, i in enumerate(locals_))
        return GlobalState(self.participants, terms, self.channel_names, queues)

    def from_global(self, g: GlobalState):
        locals_ = tuple(self.intern(k, t) for k, t in enumerate(g.continuations))
        return locals_, tuple(g.channels)


def initial_state(spec: CspSpec) -> GlobalState:
    sem = Semantics(spec)
    return sem.to_global(sem.initial())


def enabled_transitions(state: GlobalState, spec: CspSpec, bounds: Bounds | None = None) -> list[Transition]:
    sem = Semantics(spec, bounds)
    return [t for t, _ in sem.successors(sem.from_global(state))]


def apply_transition(state: GlobalState, transition: Transition, spec: CspSpec,
                     bounds: Bounds | None = None) -> GlobalState:
    """Fire one enabled transition; matched on participant, label and path."""
    sem = Semantics(spec, bounds)
    for t, nxt in sem.successors(sem.from_global(state)):
        if t == transition and (not transition.path or t.path == transition.path):
            return sem.to_global(nxt)
    raise ValueError(f"transition {transition} is not enabled")


def replay(spec: CspSpec, transitions, bounds: Bounds | None = None) -> GlobalState:
    state = initial_state(spec)
    for t in transitions:
        state = apply_transition(state, t, spec, bounds)
    return state


def replay_labels(spec: CspSpec, steps, bounds: Bounds | None = None) -> set[GlobalState]:
    """States reachable by following ``(participant, label)`` pairs, e.g. from a trace file."""
    sem = Semantics(spec, bounds)
    current = {sem.initial()}
    for participant, label in steps:
        current = {nxt for s in current for t, nxt in sem.successors(s)
                   if t.participant == participant and t.label == label}
    return {sem.to_global(s) for s in current}


def replay_visible(spec: CspSpec, steps, bounds: Bounds | None = None) -> set[GlobalState]:
    """Like ``replay_labels`` but ``steps`` omit the ``event_*`` flow events."""
    sem = Semantics(spec, bounds)

    def closure(states):
        seen, work = set(states), list(states)
        while work:
            for t, nxt in sem.successors(work.pop()):
                if t.kind == EVENT and t.label.startswith("event_") and nxt not in seen:
                    seen.add(nxt)
                    work.append(nxt)
        return seen

    current = closure({sem.initial()})
    for participant, label in steps:
        if label.startswith("event_"):
            continue
        current = closure({nxt for s in current for t, nxt in sem.successors(s)
                           if t.participant == participant and t.label == label})
    return {sem.to_global(s) for s in current}


# --------------------------------------------------------------- exploration


@dataclass
class StateGraph:
    semantics: Semantics
    states: list
    edges: list[list[tuple[Transition, int]]]
    parent: list[tuple[int, Transition] | None]
    truncated: bool
    depth: int

    @property
    def initial(self) -> int:
        return 0

    def __len__(self):
        return len(self.states)

    def is_terminal(self, i) -> bool:
        return self.semantics.is_terminal(self.states[i])

    def state(self, i) -> GlobalState:
        return self.semantics.to_global(self.states[i])

    def path_to(self, i) -> list[Transition]:
        path = []
        while self.parent[i] is not None:
            i, t = self.parent[i]
            path.append(t)
        return path[::-1]

    def stats(self):
        return {"states": len(self.states), "edges": sum(map(len, self.edges)),
                "depth": self.depth, "truncated": self.truncated}


def explore(spec: CspSpec, bounds: Bounds | None = None, order: str = "bfs") -> StateGraph:
    """Reachable state graph up to ``bounds.max_states``; truncation is flagged."""
    sem = Semantics(spec, bounds)
    init = sem.initial()
    index = {init: 0}
    states, edges, parent, level = [init], [[]], [None], [0]
    work = deque([0])
    truncated = False
    while work:
        i = work.popleft() if order == "bfs" else work.pop()
        for t, nxt in sem.successors(states[i]):
            j = index.get(nxt)
            if j is None:
                if len(states) >= sem.bounds.max_states:
                    truncated = True
                    continue
                j = index[nxt] = len(states)
                states.append(nxt)
                edges.append([])
                parent.append((i, t))
                level.append(level[i] + 1)
                work.append(j)
            edges[i].append((t, j))
    return StateGraph(sem, states, edges, parent, truncated, max(level))


# ----------------------------------------------------------------- checking


def atomic_labels(spec: CspSpec) -> set[str]:
    """Labels every sound model must exercise: channel operations and work events."""
    events, _, _ = alphabet(spec)
    labels = {e for e in events if not e.startswith("event_")}
    for _, body in spec.definitions:
        for q in iter_terms(body):
            if isinstance(q, Send):
                labels.add(f"{q.channel}!{q.message}")
            elif isinstance(q, Recv):
                labels.add(f"{q.channel}?{q.message}")
    return labels


def _can_terminate(graph: StateGraph) -> list[bool]:
    preds = [[] for _ in graph.states]
    for i, out in enumerate(graph.edges):
        for _, j in out:
            preds[j].append(i)
    ok = [False] * len(graph.states)
    work = deque(i for i in range(len(graph.states)) if graph.is_terminal(i))
    for i in work:
        ok[i] = True
    while work:
        j = work.popleft()
        for i in preds[j]:
            if not ok[i]:
                ok[i] = True
                work.append(i)
    return ok


def check_soundness(spec: CspSpec, bounds: Bounds | None = None, order: str = "bfs",
                    graph: StateGraph | None = None) -> list[Verdict]:
    """Deadlock-freedom, terminability, task reachability and message drainage."""
    graph = graph or explore(spec, bounds, order)
    stats = graph.stats()
    if graph.truncated:
        note = f"state bound {graph.semantics.bounds.max_states} reached"
        return [Verdict(name, INCONCLUSIVE, stats=stats, detail=note) for name in SOUNDNESS]

    n = len(graph.states)
    order_ = range(n)
    verdicts = []

    stuck = next((i for i in order_ if not graph.edges[i] and not graph.is_terminal(i)), None)
    verdicts.append(_verdict("deadlock-freedom", graph, stuck, stats, "reachable non-terminal state with no enabled step"))

    ok = _can_terminate(graph)
    # prefer a stuck doomed state: its trace shows where the run gets trapped
    doomed = next((i for i in order_ if not ok[i] and not graph.edges[i]), None)
    if doomed is None:
        doomed = next((i for i in order_ if not ok[i]), None)
    verdicts.append(_verdict("terminability", graph, doomed, stats, "no terminal state is reachable from here"))

    seen = set()
    for out in graph.edges:
        for t, _ in out:
            seen.update(t.labels)
    missing = sorted(atomic_labels(spec) - seen)
    if missing:
        verdicts.append(Verdict("task-reachability", FAIL, stats=stats, detail="never executed: " + ", ".join(missing)))
    else:
        verdicts.append(Verdict("task-reachability", PASS, stats=stats))

    full = next((i for i in order_ if graph.is_terminal(i) and any(graph.states[i][1])), None)
    detail = ""
    if full is not None:
        g = graph.state(full)
        left = [f"|{c}|={len(q)}" for c, q in zip(g.channel_names, g.channels) if q]
        detail = "terminated with undelivered messages: " + ", ".join(left)
    verdicts.append(_verdict("message-drainage", graph, full, stats, detail))
    return verdicts


def _verdict(name, graph, bad, stats, detail):
    if bad is None:
        return Verdict(name, PASS, stats=stats)
    return Verdict(name, FAIL, graph.path_to(bad), stats=stats, detail=detail)


def check_reachability(spec: CspSpec, label: str, bounds: Bounds | None = None) -> Verdict:
    """Does some reachable step carry ``label``?  ``end`` asks for a terminal state."""
    events, _, messages = alphabet(spec)
    known = events | {f"{c}!{m}" for c, m in messages} | {f"{c}?{m}" for c, m in messages}
    if label != "end" and label not in known:
        raise ValueError(f"label {label!r} is not in the alphabet of the spec")
    graph = explore(spec, bounds)
    stats = graph.stats()
    name = f"reaches {label}"
    for i, out in enumerate(graph.edges):
        if label == "end" and graph.is_terminal(i):
            return Verdict(name, PASS, stats=stats, witness=graph.path_to(i))
        for t, j in out:
            if label in t.labels:
                return Verdict(name, PASS, stats=stats, witness=graph.path_to(i) + [t])
    if graph.truncated:
        return Verdict(name, INCONCLUSIVE, stats=stats, detail="state bound reached")
    return Verdict(name, FAIL, stats=stats, detail=f"{label} never occurs")


def write_trace(transitions, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for t in transitions:
            fh.write(f"{t.participant}\t{t.label}\n")


def read_trace(path) -> list[tuple[str, str]]:
    steps = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if line.strip() and not line.startswith("#"):
                participant, _, label = line.partition("\t")
                steps.append((participant.strip(), label.strip()))
    return steps
