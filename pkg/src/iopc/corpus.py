"""Test corpus: five application scenarios plus constructed unsound variants.

Each case lives in ``corpus/<name>/``:

* ``model.bnf``          the collaboration (always present)
* ``model.bpmn``         the same model as BPMN 2.0 XML (optional)
* ``expected.verdicts``  ``<property> <PASS|FAIL>`` per soundness property
* ``replay.trace``       ``participant<TAB>label`` lines: for sound cases a
                         longest complete run, otherwise the visible part of
                         the first non-empty counterexample
* ``expected.csp``       golden translation
* ``expected.relations`` golden reduced relationships
* ``expected.sol``       golden contract (sound cases only)

The golden files are written by ``python -m iopc.corpus regenerate`` and
checked by the test suite.  The corpus directory is found through the
``IOPC_CORPUS`` environment variable, else by looking for ``corpus/`` next to
the source tree or in the working directory.
"""

from __future__ import annotations

import argparse
import os
from dataclasses import dataclass, field
from pathlib import Path

from .bnf import parse_bnf_text
from .bpmn_xml import parse_bpmn_xml
from .conformance import contract_lts, longest_complete_trace
from .contract import ContractModel, contract_for_spec
from .csp import CspSpec, print_csp
from .errors import IopcError
from .model import AndGate, CollaborationModel, EventGate, XorGate, walk
from .relations import dump_relations, extract_relations, reduce
from .solidity import emit_solidity
from .translator import translate_collaboration
from .verifier import check_soundness, read_trace

CASES = (
    "sc-round1", "sc-round2", "bt-round1", "bt-round2", "oe", "pr", "pc",
    "minimal-ping", "crossed-receive", "undelivered-message",
)
# the five application scenarios, both rounds where there are two
APPLICATION_CASES = ("sc-round1", "sc-round2", "bt-round1", "bt-round2", "oe", "pr", "pc")

CONTRACT_NAMES = {
    "sc-round1": "SC", "sc-round2": "SC", "bt-round1": "BT", "bt-round2": "BT",
    "oe": "OE", "pr": "PR", "pc": "PC", "minimal-ping": "Ping",
    "crossed-receive": "Crossed", "undelivered-message": "Undelivered",
}


class UnknownCaseError(IopcError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else ""


def corpus_root() -> Path:
    env = os.environ.get("IOPC_CORPUS")
    if env:
        return Path(env)
    here = Path(__file__).resolve()
    for base in [*here.parents, Path.cwd()]:
        candidate = base / "corpus"
        if (candidate / "minimal-ping" / "model.bnf").is_file():
            return candidate
    raise FileNotFoundError("corpus directory not found; set IOPC_CORPUS")


@dataclass
class CorpusCase:
    name: str
    path: Path
    bnf_text: str
    bpmn_text: str | None
    expected_verdicts: dict[str, str]
    replay: list[tuple[str, str]] = field(default_factory=list)
    expected_csp: str | None = None
    expected_relations: str | None = None
    expected_solidity: str | None = None

    @property
    def contract_name(self) -> str:
        return CONTRACT_NAMES.get(self.name, "Collaboration")

    @property
    def expected_sound(self) -> bool:
        return all(v == "PASS" for v in self.expected_verdicts.values())

    def model(self) -> CollaborationModel:
        return parse_bnf_text(self.bnf_text)

    def model_from_xml(self) -> CollaborationModel | None:
        return parse_bpmn_xml(self.bpmn_text) if self.bpmn_text is not None else None

    def spec(self) -> CspSpec:
        return translate_collaboration(self.model())

    def contract(self, two_call: bool = False) -> ContractModel:
        return contract_for_spec(self.spec(), self.contract_name, two_call)

    @property
    def has_gateway(self) -> bool:
        return any(isinstance(el, (AndGate, XorGate, EventGate))
                   for pool in self.model().pools for el in walk(pool.elements))


def _read(path: Path) -> str | None:
    return path.read_text(encoding="utf-8") if path.is_file() else None


def parse_verdicts(text: str) -> dict[str, str]:
    out = {}
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            prop, status = line.split()
            out[prop] = status
    return out


def list_cases() -> list[str]:
    root = corpus_root()
    return [n for n in CASES if (root / n).is_dir()]


def load_case(name: str) -> CorpusCase:
    if name not in CASES:
        raise UnknownCaseError(f"unknown corpus case {name!r}; known: {', '.join(CASES)}")
    path = corpus_root() / name
    bnf = _read(path / "model.bnf")
    if bnf is None:
        raise UnknownCaseError(f"corpus case {name!r} has no model.bnf under {path}")
    verdicts = _read(path / "expected.verdicts")
    replay = read_trace(path / "replay.trace") if (path / "replay.trace").is_file() else []
    return CorpusCase(
        name=name,
        path=path,
        bnf_text=bnf,
        bpmn_text=_read(path / "model.bpmn"),
        expected_verdicts=parse_verdicts(verdicts) if verdicts else {},
        replay=replay,
        expected_csp=_read(path / "expected.csp"),
        expected_relations=_read(path / "expected.relations"),
        expected_solidity=_read(path / "expected.sol"),
    )


# ------------------------------------------------------------ regeneration


def replay_steps(case: CorpusCase, verdicts=None) -> list[tuple[str, str]]:
    """Replay script: a longest complete run, or the failing run's visible steps."""
    spec = case.spec()
    verdicts = verdicts or check_soundness(spec)
    if all(v.passed for v in verdicts):
        trace = longest_complete_trace(contract_lts(contract_for_spec(spec, case.contract_name)))
        return [(p, label) for p, labels in trace for label in labels]
    failing = next(v for v in verdicts if not v.passed and v.counterexample)
    return [(t.participant, t.label) for t in failing.counterexample if not t.label.startswith("event_")]


def regenerate(name: str) -> list[Path]:
    """Rewrite the derived files of one case from its model.bnf."""
    case = load_case(name)
    spec = case.spec()
    verdicts = check_soundness(spec)
    written = []

    def put(filename, text):
        target = case.path / filename
        target.write_text(text, encoding="utf-8")
        written.append(target)

    put("expected.verdicts", "".join(f"{v.property} {v.status}\n" for v in verdicts))
    put("expected.csp", print_csp(spec))
    rel = extract_relations(spec)
    put("expected.relations", dump_relations(reduce(rel, spec)))
    steps = replay_steps(case, verdicts)
    put("replay.trace", "".join(f"{p}\t{label}\n" for p, label in steps))
    if all(v.passed for v in verdicts):
        put("expected.sol", emit_solidity(contract_for_spec(spec, case.contract_name)))
    elif (case.path / "expected.sol").exists():
        (case.path / "expected.sol").unlink()
    return written


def main(argv=None):
    parser = argparse.ArgumentParser(prog="python -m iopc.corpus", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("list", help="list the registered cases")
    regen = sub.add_parser("regenerate", help="rewrite golden files from model.bnf")
    regen.add_argument("names", nargs="*", help="cases to regenerate (default: all)")
    args = parser.parse_args(argv)
    if args.command == "list":
        for name in list_cases():
            print(name)
        return 0
    for name in args.names or list_cases():
        for path in regenerate(name):
            print(path)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
