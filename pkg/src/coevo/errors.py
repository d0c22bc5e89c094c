"""Exception hierarchy shared across the package."""

from __future__ import annotations


class CoevoError(Exception):
    """Base class for every error raised by coevo."""


class NotFound(CoevoError, LookupError):
    def __init__(self, name: str, segment: str | None = None):
        self.name = name
        self.segment = segment if segment is not None else name
        super().__init__(f"cannot resolve {name!r} (at {self.segment!r})")


class UnknownClass(NotFound):
    pass


class UnknownObject(CoevoError, KeyError):
    def __init__(self, oid: str):
        self.oid = oid
        super().__init__(oid)

    def __str__(self) -> str:
        return f"unknown object {self.oid!r}"


class UnknownResource(CoevoError, KeyError):
    def __str__(self) -> str:
        return f"unknown resource {self.args[0]!r}"


class ParseError(CoevoError, ValueError):
    pass


class ViolationError(CoevoError):
    """Carries a list of violations alongside the message."""

    def __init__(self, message: str, violations=()):
        self.violations = list(violations)
        super().__init__(message)


class InvalidMetamodel(ViolationError):
    pass


class NonconformingInput(ViolationError):
    pass


class InapplicableChange(ViolationError):
    pass


class ReleaseRefused(ViolationError):
    pass


class CorruptHistory(CoevoError):
    pass


class ClosedRelease(CoevoError):
    pass


class SpanClosed(CoevoError):
    pass


class SpanNonContiguous(CoevoError):
    pass


class UnknownOperation(CoevoError, KeyError):
    def __str__(self) -> str:
        return f"unknown operation {self.args[0]!r}"


class ArgumentError(CoevoError, TypeError):
    pass


class AmbiguousCommonSupertype(CoevoError):
    pass


class DuplicateHook(CoevoError):
    pass


class UnknownHook(CoevoError, KeyError):
    def __str__(self) -> str:
        return f"no custom migration registered as {self.args[0]!r}"
