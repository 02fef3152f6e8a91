"""BPMN collaboration models to verified CSP# specifications and Solidity contracts.

Pipeline: parse (``bnf`` / ``bpmn_xml``) -> ``translate_collaboration`` ->
``check_soundness`` -> ``extract_relations`` / ``reduce`` ->
``build_contract_model`` -> ``emit_solidity``, with ``conformance_check``
comparing the twin simulator against the verifier.
"""

from .bnf import parse_bnf_text, print_bnf
from .bpmn_xml import parse_bpmn_xml, to_bpmn_xml
from .conformance import conformance_check
from .contract import (
    ContractModel,
    RequestResult,
    TwinSimulator,
    build_contract_model,
    contract_for_spec,
    handle_request,
    simulate,
)
from .corpus import CorpusCase, load_case
from .csp import CspSpec, alphabet, parse_csp, print_csp
from .errors import (
    ContractError,
    CspError,
    IopcError,
    ModelError,
    ParseError,
    UnstructuredModelError,
    UnsupportedElementError,
)
from .model import CollaborationModel, validate_model
from .relations import ReducedRelationSet, RelationSet, dump_relations, extract_relations, reduce
from .solidity import emit_solidity
from .syntax import SyntaxTree, syntax_tree
from .translator import translate_collaboration
from .unreduced import build_unreduced_contract
from .verifier import Bounds, Verdict, check_reachability, check_soundness, explore

__all__ = [
    "Bounds", "CollaborationModel", "ContractError", "ContractModel", "CorpusCase", "CspError", "CspSpec",
    "IopcError", "ModelError", "ParseError", "ReducedRelationSet", "RelationSet", "RequestResult",
    "SyntaxTree", "TwinSimulator", "UnstructuredModelError", "UnsupportedElementError", "Verdict",
    "alphabet", "build_contract_model", "build_unreduced_contract", "check_reachability",
    "check_soundness", "conformance_check", "contract_for_spec", "dump_relations", "emit_solidity",
    "explore", "extract_relations", "handle_request", "load_case", "parse_bnf_text", "parse_bpmn_xml",
    "parse_csp", "print_bnf", "print_csp", "reduce", "simulate", "syntax_tree", "to_bpmn_xml",
    "translate_collaboration", "validate_model",
]
