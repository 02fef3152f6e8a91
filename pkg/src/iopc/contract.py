"""Contract state machine built from reduced relationships, and its twin simulator.

Every atomic process has one of four states.  A request names an atomic (or a
message sent by a participant); it is accepted when the atomic is Waiting and
its channel condition holds:

* send:    the channel has room (capacity as declared in the spec);
* receive: the message is at the head of its channel (pending count > 0).

On acceptance the atomic becomes Done, its Inactivate targets become Disabled,
and its Activate targets become Waiting once every join gate on the way has a
fully Done alternative.  A rejected request changes nothing.

Channels are FIFO queues, as in the verifier, with a per-(channel, message)
pending counter alongside.  In two-call mode a request is split into ``start``
(Waiting -> Executing; channel effect and Inactivate) and ``complete``
(Executing -> Done; Activate).
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .csp import CspSpec
from .errors import ContractError
from .relations import ReducedRelationSet, extract_relations, reduce
from .syntax import syntax_tree

DISABLED, WAITING, EXECUTING, DONE = "Disabled", "Waiting", "Executing", "Done"
STATES = (DISABLED, WAITING, EXECUTING, DONE)


@dataclass(frozen=True)
class Atomic:
    id: str
    owner: str
    kind: str  # internal | send | receive
    labels: tuple[str, ...]
    channel: str | None = None
    message: str | None = None


@dataclass(frozen=True)
class GuardRow:
    """Everything a request handler needs for one atomic, by index."""

    index: int
    atomic: Atomic
    owner: int
    channel: int | None
    message: int | None
    receivers: tuple[str, ...]
    inactivate: tuple[int, ...]
    activate: tuple[int, ...]
    # each gate is a tuple of alternatives; an alternative is a tuple of atomics
    gates: tuple[tuple[tuple[int, ...], ...], ...]


@dataclass
class ContractModel:
    name: str
    participants: tuple[str, ...]
    atomics: list[Atomic]
    activate: dict[str, list[str]] = field(default_factory=dict)
    inactivate: dict[str, list[str]] = field(default_factory=dict)
    gates: dict[str, list[tuple[frozenset[str], ...]]] = field(default_factory=dict)
    parallel: dict[str, frozenset[str]] = field(default_factory=dict)
    enable: dict[str, list[str]] = field(default_factory=dict)
    initials: dict[str, list[str]] = field(default_factory=dict)
    finals: dict[str, tuple[frozenset[str], ...]] = field(default_factory=dict)
    channels: tuple[tuple[str, int], ...] = ()
    messages: tuple[tuple[str, str], ...] = ()
    two_call: bool = False

    def __post_init__(self):
        self.index = {a.id: i for i, a in enumerate(self.atomics)}

    def atomic(self, atomic_id: str) -> Atomic:
        try:
            return self.atomics[self.index[atomic_id]]
        except KeyError:
            raise ContractError(f"unknown atomic {atomic_id!r}") from None

    @property
    def state_variables(self) -> int:
        """Tracked per-process state slots (one per atomic)."""
        return len(self.atomics)

    def guard_table(self) -> list[GuardRow]:
        """Guard data shared by the twin simulator and the Solidity emitter."""
        ch_index = {c: i for i, (c, _) in enumerate(self.channels)}
        msg_index = {cm: i for i, cm in enumerate(self.messages)}
        owners = {p: i for i, p in enumerate(self.participants)}
        rows = []
        for i, a in enumerate(self.atomics):
            rows.append(GuardRow(
                index=i,
                atomic=a,
                owner=owners[a.owner],
                channel=ch_index.get(a.channel),
                message=msg_index.get((a.channel, a.message)),
                receivers=tuple(self.atomic(r).owner for r in self.enable.get(a.id, [])),
                inactivate=tuple(self.index[q] for q in self.inactivate.get(a.id, [])),
                activate=tuple(self.index[q] for q in self.activate.get(a.id, [])),
                gates=tuple(
                    tuple(tuple(sorted(self.index[x] for x in alt)) for alt in gate)
                    for gate in self.gates.get(a.id, [])
                ),
            ))
        return rows

    def final_table(self) -> list[tuple[tuple[int, ...], ...]]:
        """Per participant, the alternatives whose completion ends it."""
        return [tuple(tuple(sorted(self.index[x] for x in alt)) for alt in self.finals[p])
                for p in self.participants]

    def initial_indices(self) -> list[int]:
        return [self.index[a] for p in self.participants for a in self.initials[p]]


def build_contract_model(reduced: ReducedRelationSet, spec: CspSpec, name: str = "Collaboration",
                         two_call: bool = False) -> ContractModel:
    tree = syntax_tree(spec)
    known = set(reduced.atomics)
    for table in (reduced.activate, reduced.inactivate, reduced.enable):
        for k, vs in table.items():
            for x in [k, *vs]:
                if x not in known:
                    raise ContractError(f"reduced relations mention unknown atomic {x!r}")
    for p, xs in reduced.initials.items():
        for x in xs:
            if x not in known:
                raise ContractError(f"initial {x!r} of {p} is not an atomic")
    atomics = []
    for atomic_id in reduced.atomics:
        node = tree.node(atomic_id)
        labels = node.actions
        channel = message = None
        kind = node.kind
        if kind in ("send", "receive"):
            if len(labels) != 1:
                raise ContractError(f"{atomic_id} performs {len(labels)} actions; one expected")
            channel, message = labels[0].replace("?", "!").split("!")
        atomics.append(Atomic(atomic_id, reduced.owner[atomic_id], kind, labels, channel, message))

    def group_alts(gid):
        return reduced.groups[gid].alternatives

    messages = sorted({(a.channel, a.message) for a in atomics if a.channel})
    return ContractModel(
        name=name,
        participants=tuple(reduced.initials),
        atomics=atomics,
        activate=dict(reduced.activate),
        inactivate=dict(reduced.inactivate),
        gates={a: [group_alts(g) for g in gs] for a, gs in reduced.gates.items()},
        parallel={a: reduced.groups[g].members for a, g in reduced.parallel.items()},
        enable=dict(reduced.enable),
        initials=dict(reduced.initials),
        finals=dict(reduced.completion),
        channels=tuple(spec.channels),
        messages=tuple(messages),
        two_call=two_call,
    )


def contract_for_spec(spec: CspSpec, name: str = "Collaboration", two_call: bool = False) -> ContractModel:
    """extract_relations -> reduce -> build_contract_model in one call."""
    rel = extract_relations(spec)
    return build_contract_model(reduce(rel, spec), spec, name, two_call)


# ------------------------------------------------------------ runtime state


@dataclass(frozen=True)
class ContractState:
    states: tuple[str, ...]
    queues: tuple[tuple[str, ...], ...]
    pending: tuple[int, ...]


@dataclass(frozen=True)
class RequestResult:
    accepted: bool
    reason: str = ""
    changes: tuple[tuple[str, str, str], ...] = ()
    forwarded: tuple[tuple[str, str, str], ...] = ()
    state: ContractState | None = None


def initial_contract_state(model: ContractModel) -> ContractState:
    states = [DISABLED] * len(model.atomics)
    for i in model.initial_indices():
        states[i] = WAITING
    return ContractState(tuple(states), tuple(() for _ in model.channels),
                         tuple(0 for _ in model.messages))


def resolve_request(model: ContractModel, request, sender: str | None = None) -> str:
    """An atomic id, or a (channel, message) pair sent by ``sender``."""
    if isinstance(request, str):
        model.atomic(request)
        return request
    channel, message = request
    for a in model.atomics:
        if a.kind == "send" and (a.channel, a.message) == (channel, message) and sender in (None, a.owner):
            return a.id
    raise ContractError(f"no atomic sends ({channel}, {message})" + (f" for {sender}" if sender else ""))


def _gates_open(row: GuardRow, states) -> bool:
    return all(any(all(states[x] == DONE for x in alt) for alt in gate) for gate in row.gates)


def _reject(reason):
    return RequestResult(False, reason)


class _Apply:
    """Mutable scratch copy of a state while one request is being applied."""

    def __init__(self, model, state, rows):
        self.model, self.rows = model, rows
        self.states = list(state.states)
        self.queues = list(state.queues)
        self.pending = list(state.pending)
        self.changes, self.forwarded = [], []

    def set(self, i, new):
        old = self.states[i]
        if old != new:
            self.states[i] = new
            self.changes.append((self.model.atomics[i].id, old, new))

    def channel_guard(self, row: GuardRow):
        a = row.atomic
        if a.kind == "send":
            capacity = self.model.channels[row.channel][1]
            if len(self.queues[row.channel]) >= capacity:
                return "channel full"
        elif a.kind == "receive":
            queue = self.queues[row.channel]
            if self.pending[row.message] <= 0 or queue[0] != a.message:
                return "missing message"
        return None

    def channel_effect(self, row: GuardRow):
        a = row.atomic
        if a.kind == "send":
            self.queues[row.channel] = self.queues[row.channel] + (a.message,)
            self.pending[row.message] += 1
            for receiver in row.receivers:
                self.forwarded.append((a.channel, a.message, receiver))
        elif a.kind == "receive":
            self.queues[row.channel] = self.queues[row.channel][1:]
            self.pending[row.message] -= 1

    def inactivate(self, row: GuardRow):
        for q in row.inactivate:
            if self.states[q] == WAITING:
                self.set(q, DISABLED)

    def activate(self, row: GuardRow):
        if _gates_open(row, self.states):
            for q in row.activate:
                if self.states[q] in (DISABLED, DONE):
                    self.set(q, WAITING)

    def result(self):
        state = ContractState(tuple(self.states), tuple(self.queues), tuple(self.pending))
        return RequestResult(True, "", tuple(self.changes), tuple(self.forwarded), state)


def handle_request(model: ContractModel, state: ContractState, request, sender: str | None = None,
                   phase: str | None = None, rows: list[GuardRow] | None = None) -> RequestResult:
    """Apply one external request; ``phase`` is ``start``/``complete`` in two-call mode."""
    atomic_id = resolve_request(model, request, sender)
    rows = rows or model.guard_table()
    row = rows[model.index[atomic_id]]
    if sender is not None and sender != row.atomic.owner:
        return _reject(f"{sender} does not own {atomic_id}")
    current = state.states[row.index]
    run = _Apply(model, state, rows)
    if model.two_call and phase == "complete":
        if current != EXECUTING:
            return _reject("not executing")
        run.set(row.index, DONE)
        run.activate(row)
        return run.result()
    if current != WAITING:
        return _reject("disabled" if current == DISABLED else "not enabled")
    reason = run.channel_guard(row)
    if reason:
        return _reject(reason)
    run.channel_effect(row)
    if model.two_call:
        run.set(row.index, EXECUTING)
        run.inactivate(row)
        return run.result()
    run.set(row.index, DONE)
    run.inactivate(row)
    run.activate(row)
    return run.result()


def participant_final(model: ContractModel, state: ContractState, participant: str) -> bool:
    idx = model.participants.index(participant)
    return any(all(state.states[x] == DONE for x in alt) for alt in model.final_table()[idx])


def is_final(model: ContractModel, state: ContractState) -> bool:
    return all(participant_final(model, state, p) for p in model.participants)


def enabled_requests(model: ContractModel, state: ContractState, rows=None):
    """(atomic id, phase, result) for every request that would be accepted."""
    rows = rows or model.guard_table()
    out = []
    for row in rows:
        s = state.states[row.index]
        if s == WAITING:
            phase = "start" if model.two_call else None
        elif s == EXECUTING and model.two_call:
            phase = "complete"
        else:
            continue
        res = handle_request(model, state, row.atomic.id, phase=phase, rows=rows)
        if res.accepted:
            out.append((row.atomic.id, phase, res))
    return out


# ------------------------------------------------------------ twin simulator


@dataclass
class LogEntry:
    seq: int
    atomic: str
    accepted: bool
    reason: str
    phase: str | None = None

    def __str__(self):
        name = self.atomic if self.phase is None else f"{self.atomic}:{self.phase}"
        return f"{self.seq}\t{name}\t{str(self.accepted).lower()}\t{self.reason}"


class TwinSimulator:
    """Off-chain executor of a ContractModel; requests apply strictly in order."""

    def __init__(self, model: ContractModel):
        self.model = model
        self.rows = model.guard_table()
        self.log: list[LogEntry] = []
        self.current = initial_contract_state(model)

    def init(self):
        self.log = []
        self.current = initial_contract_state(self.model)
        return self

    def request(self, request, sender: str | None = None, phase: str | None = None) -> RequestResult:
        atomic_id = resolve_request(self.model, request, sender)
        res = handle_request(self.model, self.current, atomic_id, sender, phase, self.rows)
        self.log.append(LogEntry(len(self.log) + 1, atomic_id, res.accepted, res.reason, phase))
        if res.accepted:
            self.current = res.state
        return res

    def state(self, atomic_id: str) -> str:
        return self.current.states[self.model.index[self.model.atomic(atomic_id).id]]

    def pending(self, channel: str, message: str) -> int:
        return self.current.pending[self.model.messages.index((channel, message))]

    def is_final(self) -> bool:
        return is_final(self.model, self.current)

    def participant_final(self, participant: str) -> bool:
        return participant_final(self.model, self.current, participant)

    def transaction_log(self) -> str:
        return "".join(f"{e}\n" for e in self.log)

    def replay_log(self) -> ContractState:
        """Re-run the accepted log entries from a fresh state."""
        state = initial_contract_state(self.model)
        for e in self.log:
            if e.accepted:
                state = handle_request(self.model, state, e.atomic, phase=e.phase, rows=self.rows).state
        return state


def simulate(model: ContractModel) -> TwinSimulator:
    return TwinSimulator(model).init()


def label_of(model: ContractModel, atomic_id: str) -> tuple[str, ...]:
    """Visible labels of an atomic's request (work events and channel actions)."""
    return model.atomic(atomic_id).labels


def request_for_label(model: ContractModel, participant: str, label: str) -> str:
    """The atomic of ``participant`` whose action is ``label``."""
    for a in model.atomics:
        if a.owner == participant and label in a.labels:
            return a.id
    raise ContractError(f"{participant} has no atomic performing {label!r}")
