"""Exception types shared across labelkit modules."""

from __future__ import annotations


class LabelKitError(Exception):
    """Base class for errors raised by labelkit."""


class ParseError(LabelKitError):
    """A malformed input file. Carries file/line context when known."""

    def __init__(self, message: str, *, source: str | None = None, line: int | None = None):
        self.source = source
        self.line = line
        prefix = ""
        if source is not None:
            prefix = source
            if line is not None:
                prefix += f":{line}"
            prefix += ": "
        elif line is not None:
            prefix = f"line {line}: "
        super().__init__(prefix + message)


class PlanError(LabelKitError):
    """An invalid transformation plan."""


class EvalError(LabelKitError):
    """Inconsistent inputs to an evaluation operation."""
