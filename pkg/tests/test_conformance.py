import pytest

from iopc import contract_for_spec
from iopc.conformance import (
    TraceLimitExceeded,
    compare_lts,
    contract_lts,
    longest_complete_trace,
    spec_lts,
    trace_sets,
)
from iopc.corpus import load_case
from iopc.verifier import INCONCLUSIVE, PASS


def test_pair_bound_is_inconclusive():
    spec = load_case("pc").spec()
    v = compare_lts(spec_lts(spec), contract_lts(contract_for_spec(spec)), max_pairs=5)
    assert v.status == INCONCLUSIVE and "pair bound" in v.detail


def test_trace_sets_limit():
    spec = load_case("pr").spec()
    with pytest.raises(TraceLimitExceeded):
        trace_sets(spec_lts(spec), limit=10)


def test_trace_sets_match_between_spec_and_contract():
    spec = load_case("oe").spec()
    left = trace_sets(spec_lts(spec))
    right = trace_sets(contract_lts(contract_for_spec(spec)))
    assert left == right
    complete, prefixes = left
    assert complete <= prefixes and () in prefixes


def test_longest_trace_is_complete():
    spec = load_case("minimal-ping").spec()
    lts = contract_lts(contract_for_spec(spec))
    trace = longest_complete_trace(lts)
    complete, _ = trace_sets(lts)
    assert tuple(trace) in complete
    assert len(trace) == max(len(t) for t in complete)


def test_spec_compared_with_itself_passes():
    spec = load_case("bt-round2").spec()
    assert compare_lts(spec_lts(spec), spec_lts(spec)).status == PASS
