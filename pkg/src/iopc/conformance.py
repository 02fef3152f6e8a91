"""Trace-set equality between a spec (verifier semantics) and a contract.

Both sides are labelled transition systems whose visible letters are
``(participant, labels)``: a channel action or work event together with the
participant performing it.  Flow events ``event_*`` and two-call ``complete``
requests are silent.  The two systems are determinized on the fly (subset
construction over silent closures) and explored in lock-step; at every pair
of subsets the offered letters and the ability to terminate must agree.
That is equality of the complete and the prefix-closed trace sets, both
directions, without enumerating the traces themselves.  Traces are counted
afterwards on the (acyclic) product graph.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

from .contract import ContractModel, enabled_requests, initial_contract_state, is_final
from .csp import CspSpec
from .syntax import is_frame
from .unreduced import UnreducedContract
from .verifier import FAIL, INCONCLUSIVE, PASS, Bounds, Semantics, Verdict

Letter = tuple[str, tuple[str, ...]]


@dataclass
class LTS:
    """initial state, ``steps(s) -> [(letter | None, s')]``, ``final(s)``."""

    initial: object
    steps: object
    final: object


def spec_lts(spec: CspSpec, bounds: Bounds | None = None) -> LTS:
    sem = Semantics(spec, bounds)

    def steps(s):
        out = []
        for t, nxt in sem.successors(s):
            visible = tuple(x for x in t.labels if not is_frame(x))
            out.append(((t.participant, visible) if visible else None, nxt))
        return out

    return LTS(sem.initial(), steps, sem.is_terminal)


def contract_lts(model: ContractModel) -> LTS:
    rows = model.guard_table()

    def steps(s):
        out = []
        for atomic_id, phase, res in enabled_requests(model, s, rows):
            a = model.atomic(atomic_id)
            silent = phase == "complete" or not a.labels
            out.append((None if silent else (a.owner, a.labels), res.state))
        return out

    return LTS(initial_contract_state(model), steps, lambda s: is_final(model, s))


def unreduced_lts(contract: UnreducedContract) -> LTS:
    def steps(s):
        out = []
        for atomic_id, res in contract.enabled(s):
            node = contract.by_id[atomic_id]
            labels = contract.labels(atomic_id)
            out.append(((node.participant, labels) if labels else None, res.state))
        return out

    return LTS(contract.initial(), steps, contract.is_final)


class _Determinized:
    def __init__(self, lts: LTS):
        self.lts = lts
        self.cache = {}
        self.explored = 0

    def closure(self, states) -> frozenset:
        seen = set(states)
        work = list(states)
        while work:
            s = work.pop()
            for letter, nxt in self.steps(s):
                if letter is None and nxt not in seen:
                    seen.add(nxt)
                    work.append(nxt)
        return frozenset(seen)

    def steps(self, s):
        out = self.cache.get(s)
        if out is None:
            out = self.cache[s] = self.lts.steps(s)
            self.explored += 1
        return out

    def moves(self, subset: frozenset) -> dict[Letter, frozenset]:
        raw: dict[Letter, set] = {}
        for s in subset:
            for letter, nxt in self.steps(s):
                if letter is not None:
                    raw.setdefault(letter, set()).add(nxt)
        return {letter: self.closure(targets) for letter, targets in raw.items()}

    def final(self, subset) -> bool:
        return any(self.lts.final(s) for s in subset)


def _fmt_letter(letter: Letter) -> str:
    participant, labels = letter
    return f"{participant}\t{' '.join(labels)}"


def _count_traces(succ, finals, root):
    """Complete traces from root in an acyclic graph; None if a cycle exists."""
    order, state = [], {}
    stack = [(root, iter(succ[root]))]
    state[root] = 1
    while stack:
        node, it = stack[-1]
        nxt = next(it, None)
        if nxt is None:
            stack.pop()
            state[node] = 2
            order.append(node)
        elif state.get(nxt) == 1:
            return None
        elif nxt not in state:
            state[nxt] = 1
            stack.append((nxt, iter(succ[nxt])))
    count = {}
    for node in order:
        count[node] = (1 if node in finals else 0) + sum(count[c] for c in succ[node])
    return count[root]


def compare_lts(left: LTS, right: LTS, max_pairs: int = 1_000_000,
                names=("spec", "contract")) -> Verdict:
    """Trace equivalence (with termination) of two labelled transition systems."""
    a, b = _Determinized(left), _Determinized(right)
    root = (a.closure([left.initial]), b.closure([right.initial]))
    parent = {root: None}
    succ = {}
    finals = set()
    work = deque([root])
    while work:
        pair = work.popleft()
        sa, sb = pair
        fa, fb = a.final(sa), b.final(sb)
        if fa != fb:
            who = names[0] if fa else names[1]
            return _mismatch(_trace(parent, pair), f"only the {who} can terminate after this trace", a, b)
        if fa:
            finals.add(pair)
        ma, mb = a.moves(sa), b.moves(sb)
        if ma.keys() != mb.keys():
            extra_a = sorted(ma.keys() - mb.keys())
            letter = extra_a[0] if extra_a else sorted(mb.keys() - ma.keys())[0]
            who = names[0] if extra_a else names[1]
            return _mismatch(_trace(parent, pair) + [letter], f"only the {who} accepts the last step", a, b)
        succ[pair] = []
        for letter in sorted(ma):
            nxt = (ma[letter], mb[letter])
            succ[pair].append(nxt)
            if nxt not in parent:
                if len(parent) >= max_pairs:
                    return Verdict("conformance", INCONCLUSIVE, stats=_stats(parent, a, b, None),
                                   detail=f"pair bound {max_pairs} reached")
                parent[nxt] = (pair, letter)
                work.append(nxt)
    traces = _count_traces(succ, finals, root)
    return Verdict("conformance", PASS, stats=_stats(parent, a, b, traces))


def _trace(parent, pair):
    out = []
    while parent[pair] is not None:
        pair, letter = parent[pair]
        out.append(letter)
    return out[::-1]


def _stats(parent, a, b, traces):
    return {"pairs": len(parent), "spec_states": a.explored, "contract_states": b.explored,
            "traces": traces}


def _mismatch(trace, detail, a, b):
    return Verdict("conformance", FAIL, stats={"spec_states": a.explored, "contract_states": b.explored},
                   detail=detail, witness=[_fmt_letter(x) for x in trace])


def conformance_check(spec: CspSpec, model, bounds: Bounds | None = None) -> Verdict:
    """PASS iff the contract's accepted label traces equal the spec's traces."""
    bounds = bounds or Bounds()
    right = unreduced_lts(model) if isinstance(model, UnreducedContract) else contract_lts(model)
    return compare_lts(spec_lts(spec, bounds), right, bounds.max_states)


def longest_complete_trace(lts: LTS) -> list[Letter] | None:
    """A longest visible trace ending in a final state (ties: smallest letters).

    Requires an acyclic system; returns None when no final state is reachable.
    """
    best: dict = {}

    def visit(s):
        if s in best:
            return best[s]
        best[s] = None  # guards against cycles
        options = [[]] if lts.final(s) else []
        for letter, nxt in sorted(lts.steps(s), key=lambda x: (x[0] is not None, x[0] or ("",))):
            tail = visit(nxt)
            if tail is not None:
                options.append(([letter] if letter else []) + tail)
        result = max(options, key=len) if options else None
        best[s] = result
        return result

    return visit(lts.initial)


class TraceLimitExceeded(Exception):
    pass


def trace_sets(lts: LTS, limit: int = 10_000) -> tuple[frozenset, frozenset]:
    """Explicit (complete traces, prefix-closed traces) of an acyclic system.

    Traces are tuples of visible letters.  Enumeration runs on the
    determinized system, one side at a time, so it is independent of the
    lock-step comparison in ``compare_lts``.  Raises TraceLimitExceeded
    when either set grows past ``limit``.
    """
    det = _Determinized(lts)
    memo: dict = {}

    def visit(subset):
        if subset in memo:
            return memo[subset]
        complete = {()} if det.final(subset) else set()
        prefixes = {()}
        for letter, nxt in det.moves(subset).items():
            c, p = visit(nxt)
            complete.update((letter,) + t for t in c)
            prefixes.update((letter,) + t for t in p)
            if len(complete) > limit or len(prefixes) > limit:
                raise TraceLimitExceeded(f"more than {limit} traces")
        memo[subset] = (complete, prefixes)
        return memo[subset]

    complete, prefixes = visit(det.closure([lts.initial]))
    return frozenset(complete), frozenset(prefixes)
