"""Explicit history of metamodel changes grouped into releases."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Union

from .errors import (
    ArgumentError,
    ClosedRelease,
    CorruptHistory,
    InapplicableChange,
    InvalidMetamodel,
    ParseError,
    ReleaseRefused,
    SpanClosed,
    SpanNonContiguous,
    UnknownOperation,
)
from .metamodel import (
    Attribute,
    Class,
    Enumeration,
    Metamodel,
    Reference,
    feature_of,
    validate_metamodel,
)
from .operations import ConstraintViolation, get_operation

PRIMITIVE_KINDS = (
    "CREATE_CLASS",
    "DELETE_CLASS",
    "CREATE_ATTRIBUTE",
    "CREATE_REFERENCE",
    "DELETE_FEATURE",
    "RENAME",
    "SET_PROPERTY",
    "ADD_SUPER",
    "REMOVE_SUPER",
    "CREATE_ENUM",
    "DELETE_ENUM",
)

_CLASS_PROPS = {"abstract": bool}
_ATTR_PROPS = {"type": str, "lower": int, "upper": int}
_REF_PROPS = {"target": str, "containment": bool, "lower": int, "upper": int, "opposite": (str, type(None))}


@dataclass
class PrimitiveChange:
    kind: str
    target: str
    arguments: dict[str, Any] = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "type": "primitive",
            "kind": self.kind,
            "target": self.target,
            "arguments": {k: self.arguments[k] for k in sorted(self.arguments)},
        }


@dataclass
class OperationApplication:
    operation: str
    arguments: dict[str, Any] = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "type": "operation",
            "operation": self.operation,
            "arguments": {k: self.arguments[k] for k in sorted(self.arguments)},
        }


@dataclass
class CompositeChange:
    children: list[PrimitiveChange] = field(default_factory=list)
    migration: str | None = None

    def to_json(self) -> dict:
        return {"type": "composite", "children": [c.to_json() for c in self.children], "migration": self.migration}


Change = Union[PrimitiveChange, OperationApplication, CompositeChange]


def describe(change: Change) -> str:
    if isinstance(change, PrimitiveChange):
        return f"{change.kind} {change.target}"
    if isinstance(change, OperationApplication):
        return change.operation
    return f"custom {change.migration}" if change.migration else "composite"


def change_from_json(data: dict) -> Change:
    kind = data.get("type")
    if kind == "primitive":
        return PrimitiveChange(data["kind"], data["target"], dict(data.get("arguments", {})))
    if kind == "operation":
        return OperationApplication(data["operation"], dict(data.get("arguments", {})))
    if kind == "composite":
        return CompositeChange([change_from_json(c) for c in data.get("children", [])], data.get("migration"))
    raise ParseError(f"unknown change type {kind!r}")


def _fail(change: PrimitiveChange, constraint: str, message: str) -> InapplicableChange:
    v = ConstraintViolation(change.kind, constraint, message, change.target)
    return InapplicableChange(f"{describe(change)}: {message}", [v])


def _bounds(change: PrimitiveChange, default_upper: int = 1) -> tuple[int, int]:
    lower, upper = change.arguments.get("lower", 0), change.arguments.get("upper", default_upper)
    if not all(isinstance(b, int) and not isinstance(b, bool) for b in (lower, upper)):
        raise _fail(change, "bounds", f"bounds must be integers, got {lower!r}..{upper!r}")
    return lower, upper


def apply_primitive(mm: Metamodel, change: PrimitiveChange) -> None:
    """Apply a primitive change to ``mm`` in place.

    Only structural executability is checked here; whether the result is a
    valid metamodel is decided when the release is closed.
    """
    kind, target, args = change.kind, change.target, change.arguments
    head, _, tail = target.partition(".")
    if kind not in PRIMITIVE_KINDS:
        raise _fail(change, "known-kind", f"unknown primitive change {kind!r}")

    if kind == "RENAME":
        op = get_operation("Rename")
        bound = {"element": target, "newName": args.get("newName")}
        if not isinstance(bound["newName"], str):
            raise _fail(change, "arguments", "RENAME needs a string newName")
        problems = op.check(mm, bound)
        if problems:
            raise InapplicableChange(f"{describe(change)}: {problems[0].message}", problems)
        op.adapt(mm, bound)
        return

    if kind in ("CREATE_CLASS", "CREATE_ENUM"):
        if tail or not head.isidentifier():
            raise _fail(change, "valid-name", f"{target!r} is not a plain identifier")
        if mm.name_in_use(head):
            raise _fail(change, "name-unique", f"{head!r} is already used")
        if kind == "CREATE_CLASS":
            mm.classes.append(Class(head, abstract=bool(args.get("abstract", False))))
        else:
            lits = args.get("literals", [])
            if isinstance(lits, str):
                lits = [x for x in lits.split(",") if x]
            mm.enumerations.append(Enumeration(head, list(lits)))
        return

    if kind == "DELETE_ENUM":
        e = mm.find_enum(target)
        if e is None:
            raise _fail(change, "exists", f"no enumeration {target!r}")
        mm.enumerations.remove(e)
        return

    cls = mm.find_class(head)
    if cls is None:
        raise _fail(change, "exists", f"no class {head!r}")

    if kind == "DELETE_CLASS":
        if tail:
            raise _fail(change, "class-target", "DELETE_CLASS targets a class")
        mm.classes.remove(cls)
    elif kind in ("ADD_SUPER", "REMOVE_SUPER"):
        sup = args.get("super")
        if tail or not isinstance(sup, str):
            raise _fail(change, "arguments", f"{kind} needs a class target and a 'super' argument")
        if kind == "ADD_SUPER":
            if sup in cls.super_types:
                raise _fail(change, "not-yet-super", f"{sup} is already a supertype of {head}")
            cls.super_types.append(sup)
        else:
            if sup not in cls.super_types:
                raise _fail(change, "is-super", f"{sup} is not a supertype of {head}")
            cls.super_types.remove(sup)
    elif kind in ("CREATE_ATTRIBUTE", "CREATE_REFERENCE"):
        if not tail.isidentifier():
            raise _fail(change, "valid-name", f"{tail!r} is not an identifier")
        if feature_of(mm, head, tail) is not None:
            raise _fail(change, "name-unique", f"{head} already has a feature {tail!r}")
        lower, upper = _bounds(change)
        if kind == "CREATE_ATTRIBUTE":
            if not isinstance(args.get("type"), str):
                raise _fail(change, "arguments", "CREATE_ATTRIBUTE needs a 'type'")
            cls.attributes.append(Attribute(tail, args["type"], lower, upper))
        else:
            if not isinstance(args.get("target"), str):
                raise _fail(change, "arguments", "CREATE_REFERENCE needs a 'target'")
            cls.references.append(
                Reference(tail, args["target"], bool(args.get("containment", False)), lower, upper, args.get("opposite"))
            )
    elif kind == "DELETE_FEATURE":
        if cls.feature(tail) is None:
            raise _fail(change, "declared", f"{head} declares no feature {tail!r}")
        cls.remove_feature(tail)
    elif kind == "SET_PROPERTY":
        prop, value = args.get("property"), args.get("value")
        if tail:
            el = cls.feature(tail)
            if el is None:
                raise _fail(change, "declared", f"{head} declares no feature {tail!r}")
            allowed = _REF_PROPS if isinstance(el, Reference) else _ATTR_PROPS
        else:
            el, allowed = cls, _CLASS_PROPS
        if prop not in allowed or not isinstance(value, allowed[prop]) or isinstance(value, bool) != (allowed[prop] is bool):
            raise _fail(change, "property", f"cannot set {prop!r} to {value!r} on {target}")
        setattr(el, prop, value)


def apply_change(mm: Metamodel, change: Change) -> Metamodel:
    """Return a copy of ``mm`` with ``change`` applied; raise InapplicableChange."""
    out = mm.copy()
    if isinstance(change, PrimitiveChange):
        apply_primitive(out, change)
    elif isinstance(change, CompositeChange):
        for child in change.children:
            if not isinstance(child, PrimitiveChange):
                raise InapplicableChange("composite changes may only hold primitive changes")
            apply_primitive(out, child)
    else:
        try:
            op = get_operation(change.operation)
            args = op.bind(change.arguments)
        except (UnknownOperation, ArgumentError) as exc:
            raise InapplicableChange(str(exc)) from exc
        problems = op.applicability(out, args)
        if problems:
            raise InapplicableChange(f"{change.operation} is not applicable: {problems[0]}", problems)
        op.adapt(out, args)
    return out


@dataclass
class Release:
    index: int
    changes: list[Change] = field(default_factory=list)
    released: bool = False

    def to_json(self) -> dict:
        return {"released": self.released, "changes": [c.to_json() for c in self.changes]}


class History:
    """Baseline metamodel plus an ordered list of releases.

    Only the last release can be open; changes are recorded into it.
    """

    def __init__(self, baseline: Metamodel, releases: list[Release] | None = None):
        self.metamodel_name = baseline.name
        self.baseline = baseline.copy()
        self.releases = releases if releases is not None else [Release(0)]
        self._head_cache: Metamodel | None = None

    @property
    def head(self) -> Release:
        return self.releases[-1]

    @property
    def last_index(self) -> int:
        return len(self.releases) - 1

    def head_metamodel(self) -> Metamodel:
        if self._head_cache is None:
            self._head_cache = self.reconstruct(self.last_index)
        return self._head_cache.copy()

    def record(self, change: Change) -> None:
        """Append ``change`` to the open release after checking it applies."""
        if self.head.released:
            raise ClosedRelease(f"release {self.head.index} is closed")
        self._head_cache = apply_change(self.head_metamodel(), change)
        self.head.changes.append(change)

    def apply(self, operation: str, **arguments: Any) -> None:
        self.record(OperationApplication(operation, arguments))

    def attach_migration(self, release_index: int, span: tuple[int, int], migration: str) -> CompositeChange:
        """Wrap ``span = (start, length)`` primitive changes into a custom migration."""
        if not 0 <= release_index < len(self.releases):
            raise SpanNonContiguous(f"no release {release_index}")
        rel = self.releases[release_index]
        if rel.released:
            raise SpanClosed(f"release {release_index} is closed")
        start, length = span
        if start < 0 or length < 0 or start + length > len(rel.changes):
            raise SpanNonContiguous(f"span {span} leaves release {release_index}")
        children = rel.changes[start : start + length]
        for c in children:
            if not isinstance(c, PrimitiveChange):
                raise SpanNonContiguous(f"span {span} covers a {describe(c)!r} change, not a primitive change")
        composite = CompositeChange(list(children), migration)
        rel.changes[start : start + length] = [composite]
        return composite

    def release(self) -> int:
        """Close the head release and open a new one; return the closed index."""
        problems = validate_metamodel(self.head_metamodel())
        if problems:
            raise ReleaseRefused(f"head metamodel of release {self.head.index} is invalid", problems)
        self.head.released = True
        self.releases.append(Release(len(self.releases)))
        return self.head.index - 1

    def reconstruct(self, release_index: int) -> Metamodel:
        if not 0 <= release_index < len(self.releases):
            raise IndexError(f"release {release_index} out of range 0..{self.last_index}")
        mm = self.baseline.copy()
        for rel in self.releases[: release_index + 1]:
            for i, change in enumerate(rel.changes):
                try:
                    mm = apply_change(mm, change)
                except InapplicableChange as exc:
                    raise CorruptHistory(f"release {rel.index} change {i} ({describe(change)}): {exc}") from exc
        return mm

    def changes_between(self, from_release: int, to_release: int) -> list[tuple[str, Change]]:
        """``(ref, change)`` for releases in ``(from_release, to_release]``."""
        return [
            (f"r{rel.index}.c{i}", c)
            for rel in self.releases[from_release + 1 : to_release + 1]
            for i, c in enumerate(rel.changes)
        ]

    def to_json(self) -> dict:
        return {
            "metamodel": self.metamodel_name,
            "baseline": self.baseline.to_json(),
            "releases": [r.to_json() for r in self.releases],
        }

    @classmethod
    def from_json(cls, data: dict) -> History:
        try:
            baseline = Metamodel.from_json(data["baseline"])
            releases = [
                Release(i, [change_from_json(c) for c in r.get("changes", [])], bool(r.get("released", False)))
                for i, r in enumerate(data["releases"])
            ]
        except (KeyError, TypeError) as exc:
            raise ParseError(f"malformed history JSON: {exc!r}") from exc
        if not releases:
            raise ParseError("history has no releases")
        if any(r.released is False for r in releases[:-1]):
            raise ParseError("only the last release may be open")
        h = cls(baseline, releases)
        h.metamodel_name = data.get("metamodel", baseline.name)
        return h


def create_history(mm: Metamodel) -> History:
    problems = validate_metamodel(mm)
    if problems:
        raise InvalidMetamodel(f"metamodel {mm.name!r} is invalid", problems)
    return History(mm)


__all__ = [
    "Change",
    "CompositeChange",
    "History",
    "OperationApplication",
    "PrimitiveChange",
    "Release",
    "apply_change",
    "apply_primitive",
    "create_history",
    "describe",
]
