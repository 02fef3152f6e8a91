"""Command-line driver: ``iopc <command> INPUT [options]``.

Commands: translate, verify, relations, emit, simulate, pipeline.  Every
stage writes its artifacts to ``--out`` (default ``out``).  Exit codes:
0 success, 1 verification failure / rejected replay, 2 input error,
3 state bound exceeded (inconclusive).
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

from .bnf import parse_bnf_text
from .bpmn_xml import parse_bpmn_xml
from .conformance import conformance_check
from .contract import ContractModel, contract_for_spec, request_for_label, simulate
from .csp import CspSpec, parse_csp, print_csp
from .errors import ContractError, IopcError
from .relations import dump_relations, extract_relations, reduce
from .solidity import contract_name, emit_solidity
from .translator import translate_collaboration
from .verifier import INCONCLUSIVE, PASS, Bounds, check_soundness, read_trace, write_trace

EXIT_OK, EXIT_VERIFY, EXIT_INPUT, EXIT_BOUND = 0, 1, 2, 3
FORMATS = {".bnf": "bnf", ".bpmn": "xml", ".xml": "xml", ".csp": "csp"}
REPORT_VERSION = 1


@dataclass
class PipelineConfig:
    input: Path
    format: str | None = None  # bnf | xml | csp; None: from the file extension
    out_dir: Path = Path("out")
    max_states: int = 1_000_000
    queue_depth: int | None = None  # None: each channel's declared capacity
    report: str = "text"  # text | json
    two_call: bool = False
    unsafe_skip_verify: bool = False
    channel_capacity: int | None = None
    name: str | None = None
    order: str = "bfs"
    trace: Path | None = None

    def __post_init__(self):
        self.input = Path(self.input)
        self.out_dir = Path(self.out_dir)
        if self.trace is not None:
            self.trace = Path(self.trace)

    @property
    def bounds(self) -> Bounds:
        return Bounds(self.max_states, self.queue_depth)

    @property
    def stem(self) -> str:
        """Base name for artifacts: ``--name``, else the input file (or its directory for model.*)."""
        if self.name:
            return self.name
        path = Path(self.input)
        return path.parent.name if path.stem == "model" and path.parent.name else path.stem

    @property
    def input_format(self) -> str:
        if self.format:
            return self.format
        fmt = FORMATS.get(Path(self.input).suffix.lower())
        if fmt is None:
            raise InputError(f"cannot tell the format of {self.input}; pass --format bnf|xml|csp")
        return fmt


class InputError(IopcError):
    pass


@dataclass
class Report:
    command: str
    input: str
    status: str = PASS
    exit_code: int = EXIT_OK
    verdicts: list = field(default_factory=list)
    artifacts: dict = field(default_factory=dict)
    stats: dict = field(default_factory=dict)
    messages: list = field(default_factory=list)

    def as_dict(self):
        return {
            "version": REPORT_VERSION,
            "command": self.command,
            "input": self.input,
            "status": self.status,
            "exit_code": self.exit_code,
            "verdicts": [v.as_dict() for v in self.verdicts],
            "artifacts": dict(sorted(self.artifacts.items())),
            "stats": self.stats,
            "messages": list(self.messages),
        }

    def text(self) -> str:
        lines = [f"{self.command}: {self.status}"]
        for v in self.verdicts:
            line = f"  {v.property:<18} {v.status}"
            if v.detail:
                line += f"  ({v.detail})"
            lines.append(line)
        for key, path in sorted(self.artifacts.items()):
            lines.append(f"  wrote {key}: {path}")
        lines += [f"  {m}" for m in self.messages]
        return "\n".join(lines) + "\n"

    def fail(self, status, code, message=None):
        self.status, self.exit_code = status, code
        if message:
            self.messages.append(message)
        return self


# ----------------------------------------------------------------- loading


def load_spec(config: PipelineConfig) -> CspSpec:
    text = Path(config.input).read_text(encoding="utf-8")
    fmt = config.input_format
    if fmt == "csp":
        return parse_csp(text)
    model = parse_bpmn_xml(text) if fmt == "xml" else parse_bnf_text(text)
    return translate_collaboration(model, config.channel_capacity)


def _write(config: PipelineConfig, filename: str, text: str) -> str:
    config.out_dir.mkdir(parents=True, exist_ok=True)
    path = config.out_dir / filename
    path.write_text(text, encoding="utf-8")
    return str(path)


def _contract_name(config: PipelineConfig) -> str:
    return contract_name(config.name or config.stem)


# ---------------------------------------------------------------- commands


def cmd_translate(config: PipelineConfig, report: Report | None = None):
    report = report or Report("translate", str(config.input))
    spec = load_spec(config)
    report.artifacts["csp"] = _write(config, f"{config.stem}.csp", print_csp(spec))
    return report, spec


def cmd_verify(config: PipelineConfig, report: Report | None = None, spec: CspSpec | None = None):
    report = report or Report("verify", str(config.input))
    spec = spec or load_spec(config)
    verdicts = check_soundness(spec, config.bounds, config.order)
    report.verdicts += verdicts
    report.stats["verify"] = verdicts[0].stats if verdicts else {}
    for v in verdicts:
        if v.counterexample:
            path = Path(config.out_dir) / f"{config.stem}.{v.property}.trace"
            config.out_dir.mkdir(parents=True, exist_ok=True)
            write_trace(v.counterexample, path)
            report.artifacts[f"counterexample.{v.property}"] = str(path)
    if any(v.status == INCONCLUSIVE for v in verdicts):
        report.fail(INCONCLUSIVE, EXIT_BOUND, f"inconclusive: state bound {config.max_states} reached")
    elif not all(v.passed for v in verdicts):
        report.fail("FAIL", EXIT_VERIFY, "model is not sound")
    return report, spec


def cmd_relations(config: PipelineConfig, report: Report | None = None, spec: CspSpec | None = None):
    report = report or Report("relations", str(config.input))
    spec = spec or load_spec(config)
    rel = extract_relations(spec)
    reduced = reduce(rel, spec)
    report.artifacts["relations"] = _write(config, f"{config.stem}.relations", dump_relations(reduced))
    report.artifacts["relations.full"] = _write(config, f"{config.stem}.relations.full", dump_relations(rel))
    return report, reduced


def cmd_emit(config: PipelineConfig, report: Report | None = None, spec: CspSpec | None = None):
    report = report or Report("emit", str(config.input))
    spec = spec or load_spec(config)
    if config.unsafe_skip_verify:
        report.messages.append("WARNING: verification skipped (--unsafe-skip-verify); "
                               "the contract may encode an unsound model")
    else:
        cmd_verify(config, report, spec)
        if report.exit_code != EXIT_OK:
            report.messages.append("refusing to emit a contract for a model that did not pass verification")
            return report, None
    return report, _emit_artifacts(config, report, spec)


def _emit_artifacts(config: PipelineConfig, report: Report, spec: CspSpec) -> ContractModel:
    cmd_relations(config, report, spec)
    model = contract_for_spec(spec, _contract_name(config), config.two_call)
    report.artifacts["solidity"] = _write(config, f"{model.name}.sol", emit_solidity(model))
    report.stats["contract"] = {"atomics": len(model.atomics), "participants": len(model.participants),
                                "two_call": model.two_call}
    return model


def replay_on_twin(model: ContractModel, steps):
    """Drive the twin with (participant, label) steps; flow events are skipped."""
    sim = simulate(model)
    first_rejection = None
    for n, (participant, label) in enumerate(steps, 1):
        if label.startswith("event_"):
            continue
        try:
            atomic = _pick_atomic(sim, participant, label)
        except ContractError as exc:
            first_rejection = first_rejection or (n, participant, label, str(exc))
            break
        phases = ("start", "complete") if model.two_call else (None,)
        for phase in phases:
            res = sim.request(atomic, participant, phase)
            if not res.accepted:
                first_rejection = first_rejection or (n, participant, label, res.reason)
                break
        if first_rejection:
            break
    return sim, first_rejection


def _pick_atomic(sim, participant, label):
    candidates = [a.id for a in sim.model.atomics if a.owner == participant and label in a.labels]
    if not candidates:
        return request_for_label(sim.model, participant, label)  # raises with a clear message
    waiting = [c for c in candidates if sim.state(c) == "Waiting"]
    return (waiting or candidates)[0]


def cmd_simulate(config: PipelineConfig, report: Report | None = None, spec: CspSpec | None = None):
    report = report or Report("simulate", str(config.input))
    spec = spec or load_spec(config)
    if config.trace is None:
        raise InputError("simulate needs a trace file (--trace)")
    steps = read_trace(config.trace)
    model = contract_for_spec(spec, _contract_name(config), config.two_call)
    sim, rejection = replay_on_twin(model, steps)
    report.artifacts["log"] = _write(config, f"{config.stem}.log", sim.transaction_log())
    accepted = sum(1 for e in sim.log if e.accepted)
    report.stats["simulate"] = {"steps": len(steps), "requests": len(sim.log), "accepted": accepted,
                                "final": sim.is_final()}
    if rejection:
        n, participant, label, reason = rejection
        report.fail("FAIL", EXIT_VERIFY, f"step {n} rejected: {participant} {label}: {reason}")
    else:
        report.messages.append(f"all {accepted} requests accepted; final state "
                               f"{'reached' if sim.is_final() else 'not reached'}")
    return report, sim


def cmd_pipeline(config: PipelineConfig):
    report = Report("pipeline", str(config.input))
    _, spec = cmd_translate(config, report)
    cmd_verify(config, report, spec)
    if report.exit_code != EXIT_OK:
        if not config.unsafe_skip_verify:
            report.messages.append("stopped after verification")
            return report, None
        report.messages.append("WARNING: continuing past failed verification (--unsafe-skip-verify)")
    model = _emit_artifacts(config, report, spec)
    verdict = conformance_check(spec, model, config.bounds)
    report.verdicts.append(verdict)
    report.stats["conformance"] = verdict.stats
    if report.exit_code != EXIT_OK:
        return report, model
    if verdict.status == INCONCLUSIVE:
        report.fail(INCONCLUSIVE, EXIT_BOUND, "conformance inconclusive")
    elif not verdict.passed:
        report.fail("FAIL", EXIT_VERIFY, "contract does not conform: " + verdict.detail)
    return report, model


COMMANDS = {
    "translate": cmd_translate,
    "verify": cmd_verify,
    "relations": cmd_relations,
    "emit": cmd_emit,
    "simulate": cmd_simulate,
    "pipeline": cmd_pipeline,
}


# ---------------------------------------------------------------- argparse


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="iopc", description="BPMN collaboration -> CSP# -> verified Solidity")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in (
        ("translate", "translate a collaboration model to CSP#"),
        ("verify", "check soundness; writes counterexample traces"),
        ("relations", "dump association relationships (full and reduced)"),
        ("emit", "verify, then emit the Solidity contract and relations"),
        ("simulate", "replay a trace file on the twin simulator"),
        ("pipeline", "translate, verify, relations, emit and conformance"),
    ):
        p = sub.add_parser(name, help=help_)
        p.add_argument("input", type=Path, help="model file (.bnf, .bpmn/.xml or .csp)")
        if name == "simulate":
            p.add_argument("trace", type=Path, nargs="?", help="participant<TAB>label trace file")
        p.add_argument("--format", choices=("bnf", "xml", "csp"), help="input format (default: by extension)")
        p.add_argument("--out", type=Path, default=Path("out"), help="output directory (default: out)")
        p.add_argument("--name", help="base name for artifacts and the contract")
        p.add_argument("--bounds-states", type=int, default=1_000_000, metavar="N",
                       help="maximum explored states (default: 1000000)")
        p.add_argument("--bounds-depth", type=int, default=None, metavar="N",
                       help="queue depth per channel (default: the declared capacity, 1 per message)")
        p.add_argument("--channel-capacity", type=int, default=None, metavar="N",
                       help="override the declared capacity of every channel")
        p.add_argument("--order", choices=("bfs", "dfs"), default="bfs", help="exploration order")
        p.add_argument("--report", choices=("text", "json"), default="text", help="report format")
        p.add_argument("--two-call", action="store_true", help="emit start/complete functions per task")
        p.add_argument("--unsafe-skip-verify", action="store_true",
                       help="UNSAFE: emit even if verification fails (testing only)")
    return parser


def config_from_args(args) -> PipelineConfig:
    return PipelineConfig(
        input=args.input,
        format=args.format,
        out_dir=args.out,
        max_states=args.bounds_states,
        queue_depth=args.bounds_depth,
        report=args.report,
        two_call=args.two_call,
        unsafe_skip_verify=args.unsafe_skip_verify,
        channel_capacity=args.channel_capacity,
        name=args.name,
        order=args.order,
        trace=getattr(args, "trace", None),
    )


def run(config: PipelineConfig, command: str) -> Report:
    try:
        report, _ = COMMANDS[command](config)
    except (IopcError, ValueError, OSError) as exc:
        report = Report(command, str(config.input)).fail("ERROR", EXIT_INPUT, f"error: {exc}")
    return report


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    config = config_from_args(args)
    report = run(config, args.command)
    if config.report == "json":
        print(json.dumps(report.as_dict(), indent=2))
    else:
        out = sys.stderr if report.exit_code == EXIT_INPUT else sys.stdout
        print(report.text(), end="", file=out)
    return report.exit_code


if __name__ == "__main__":
    raise SystemExit(main())
