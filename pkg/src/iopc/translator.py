"""Translation of collaboration models into CSP# specifications.

Element rules::

    task(ei, eo)          event_ei -> Skip; work_<id> -> Skip; event_eo -> Skip
    sndTask(ei, M, eo)    event_ei -> Skip; ch!m -> Skip; event_eo -> Skip
    rcvTask(ei, M, eo)    event_ei -> Skip; ch?m -> Skip; event_eo -> Skip
    andGate(ei, T, eo)    event_ei -> Skip; (T1 || ... || Tn); event_eo -> Skip
    xorGate(ei, T, eo)    event_ei -> Skip; (T1 [] ... [] Tn); event_eo -> Skip
    eventbaseGate(...)    event_ei -> Skip; (T1 [*] ... [*] Tn); event_eo -> Skip

A gateway's framing event is left out when the same sequence flow has just
been traversed (``ei`` equals the previous element's ``eo``) or is traversed
by every branch on exit (each branch ends on ``eo``).  Pools become
definitions composed with ``||``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .csp import SKIP, CspSpec, EventChoice, EventPrefix, ExtChoice, Par, Recv, Send, Seq
from .errors import ModelError
from .model import (
    AndGate,
    CollaborationModel,
    EventGate,
    Pool,
    RcvTask,
    SndTask,
    Task,
    XorGate,
    validate_model,
)

_OPS = {AndGate: Par, XorGate: ExtChoice, EventGate: EventChoice}


def flow_event(flow: str) -> str:
    return f"event_{flow}"


def work_event(task: Task) -> str:
    return f"work_{task.name or task.id or task.e_in}"


@dataclass
class TranslationContext:
    """Per-collaboration lookup tables used while translating."""

    channels: dict[tuple[str, str], tuple[str, str]] = field(default_factory=dict)
    next_elements: dict[str, list[str]] = field(default_factory=dict)

    @classmethod
    def for_model(cls, model: CollaborationModel) -> "TranslationContext":
        ctx = cls()
        for mf in model.message_flows:
            ctx.channels[(mf.channel, mf.message)] = (mf.sender, mf.receiver)
        for pool in model.pools:
            ctx._link(pool.elements, [])
        return ctx

    def _link(self, elements, after):
        # successor ids of each element; a gateway points at its branch heads
        for i, el in enumerate(elements):
            succ = [elements[i + 1].id] if i + 1 < len(elements) else list(after)
            if isinstance(el, (AndGate, XorGate, EventGate)):
                self.next_elements[el.id] = [b[0].id for b in el.branches]
                for b in el.branches:
                    self._link(b, succ)
            else:
                self.next_elements[el.id] = succ

    def resolve(self, channel: str, message: str):
        try:
            return self.channels[(channel, message)]
        except KeyError:
            raise ModelError(f"({channel}, {message}) is not in the message list") from None


def _frame(flow):
    return EventPrefix(flow_event(flow), SKIP)


def translate_element(el, ctx: TranslationContext, prev_flow: str | None = None):
    """CSP# process for one element; ``prev_flow`` is the flow just traversed."""
    if isinstance(el, Task):
        middle = EventPrefix(work_event(el), SKIP)
    elif isinstance(el, SndTask):
        ctx.resolve(el.channel, el.message)
        middle = Send(el.channel, el.message, SKIP)
    elif isinstance(el, RcvTask):
        ctx.resolve(el.channel, el.message)
        middle = Recv(el.channel, el.message, SKIP)
    elif type(el) in _OPS:
        branches = tuple(translate_sequence(b, ctx, el.e_in) for b in el.branches)
        items = []
        if prev_flow != el.e_in:
            items.append(_frame(el.e_in))
        items.append(_OPS[type(el)](branches))
        if any(b[-1].e_out != el.e_out for b in el.branches):
            items.append(_frame(el.e_out))
        return items[0] if len(items) == 1 else Seq(tuple(items))
    else:
        raise ModelError(f"unknown element kind {type(el).__name__}")
    return Seq((_frame(el.e_in), middle, _frame(el.e_out)))


def translate_sequence(elements, ctx, prev_flow=None):
    items = []
    for el in elements:
        items.append(translate_element(el, ctx, prev_flow))
        prev_flow = el.e_out
    return items[0] if len(items) == 1 else Seq(tuple(items))


def translate_participant(pool: Pool, ctx: TranslationContext):
    """(name, process) for one pool."""
    return pool.name, translate_sequence(pool.elements, ctx)


def channel_table(model: CollaborationModel, capacity: int | None = None):
    """Declared channels with capacity = messages on the channel, or ``capacity``."""
    counts: dict[str, int] = {}
    for mf in model.message_flows:
        counts[mf.channel] = counts.get(mf.channel, 0) + 1
    return tuple((ch, capacity if capacity is not None else n) for ch, n in counts.items())


def translate_collaboration(model: CollaborationModel, capacity: int | None = None) -> CspSpec:
    """Translate a valid model; structural issues abort with ModelError."""
    issues = validate_model(model)
    if issues:
        raise ModelError("model is not valid: " + "; ".join(map(str, issues)), issues)
    if not model.pools:
        raise ModelError("empty collaboration: no pools to translate")
    ctx = TranslationContext.for_model(model)
    definitions = tuple(translate_participant(pool, ctx) for pool in model.pools)
    return CspSpec(channel_table(model, capacity), definitions, tuple(p.name for p in model.pools))
