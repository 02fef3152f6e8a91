"""Exception types shared across the toolchain."""


class IopcError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(IopcError, ValueError):
    """Syntax error in a textual input, with an optional source location."""

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        if line is not None:
            message = f"{message} (line {line}, column {column})"
        super().__init__(message)


class UnsupportedElementError(ParseError):
    """A BPMN element outside the supported subset was found."""

    def __init__(self, element_id, tag):
        self.element_id = element_id
        self.tag = tag
        super().__init__(f"unsupported element kind: <{tag}> id={element_id!r}")


class UnstructuredModelError(ParseError):
    """Gateways do not form matching split/join blocks, or the flow graph is cyclic."""


class ModelError(IopcError, ValueError):
    """A model is parseable but violates structural invariants."""

    def __init__(self, message, issues=()):
        self.issues = list(issues)
        super().__init__(message)


class CspError(IopcError, ValueError):
    """Malformed or inconsistent CSP# specification."""


class ContractError(IopcError, ValueError):
    """Inconsistent contract model or an invalid request."""
