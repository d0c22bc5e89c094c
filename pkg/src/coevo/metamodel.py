"""Structural metamodel kernel: classes, features, enumerations, validity."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Iterator, NamedTuple, Union

from .errors import NotFound, ParseError

UNBOUNDED = -1
PRIMITIVE_TYPES = ("String", "Int", "Bool", "Float")


@dataclass
class Attribute:
    name: str
    type: str
    lower: int = 0
    upper: int = 1

    @property
    def many(self) -> bool:
        return self.upper == UNBOUNDED or self.upper > 1

    def to_json(self) -> dict:
        return {"name": self.name, "type": self.type, "lower": self.lower, "upper": self.upper}


@dataclass
class Reference:
    name: str
    target: str
    containment: bool = False
    lower: int = 0
    upper: int = 1
    opposite: str | None = None

    @property
    def many(self) -> bool:
        return self.upper == UNBOUNDED or self.upper > 1

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "target": self.target,
            "containment": self.containment,
            "lower": self.lower,
            "upper": self.upper,
            "opposite": self.opposite,
        }


Feature = Union[Attribute, Reference]


@dataclass
class Class:
    name: str
    abstract: bool = False
    super_types: list[str] = field(default_factory=list)
    attributes: list[Attribute] = field(default_factory=list)
    references: list[Reference] = field(default_factory=list)

    @property
    def features(self) -> list[Feature]:
        return [*self.attributes, *self.references]

    def feature(self, name: str) -> Feature | None:
        """Own (non-inherited) feature called ``name``."""
        for f in self.features:
            if f.name == name:
                return f
        return None

    def add_feature(self, feature: Feature) -> None:
        if isinstance(feature, Reference):
            self.references.append(feature)
        else:
            self.attributes.append(feature)

    def remove_feature(self, name: str) -> Feature:
        for bucket in (self.attributes, self.references):
            for i, f in enumerate(bucket):
                if f.name == name:
                    return bucket.pop(i)
        raise NotFound(f"{self.name}.{name}", name)

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "abstract": self.abstract,
            "superTypes": list(self.super_types),
            "attributes": [a.to_json() for a in self.attributes],
            "references": [r.to_json() for r in self.references],
        }


@dataclass
class Enumeration:
    name: str
    literals: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return {"name": self.name, "literals": list(self.literals)}


class EnumLiteral(NamedTuple):
    enumeration: Enumeration
    name: str


@dataclass
class Violation:
    """A structural problem found by a validity or conformance check."""

    element: str
    kind: str
    message: str

    def __str__(self) -> str:
        return f"{self.kind} {self.element}: {self.message}"

    def to_json(self) -> dict:
        return {"element": self.element, "kind": self.kind, "message": self.message}


@dataclass
class Metamodel:
    name: str
    classes: list[Class] = field(default_factory=list)
    enumerations: list[Enumeration] = field(default_factory=list)

    def find_class(self, name: str) -> Class | None:
        for c in self.classes:
            if c.name == name:
                return c
        return None

    def get_class(self, name: str) -> Class:
        c = self.find_class(name)
        if c is None:
            raise NotFound(name)
        return c

    def find_enum(self, name: str) -> Enumeration | None:
        for e in self.enumerations:
            if e.name == name:
                return e
        return None

    def name_in_use(self, name: str) -> bool:
        return name in PRIMITIVE_TYPES or self.find_class(name) is not None or self.find_enum(name) is not None

    def copy(self) -> Metamodel:
        # explicit field-wise copy; deepcopy dominated migration time
        return Metamodel(
            self.name,
            [
                Class(
                    c.name,
                    c.abstract,
                    list(c.super_types),
                    [dataclasses.replace(a) for a in c.attributes],
                    [dataclasses.replace(r) for r in c.references],
                )
                for c in self.classes
            ],
            [Enumeration(e.name, list(e.literals)) for e in self.enumerations],
        )

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "classes": [c.to_json() for c in self.classes],
            "enumerations": [e.to_json() for e in self.enumerations],
        }

    @classmethod
    def from_json(cls, data: dict) -> Metamodel:
        try:
            return cls(
                name=data["name"],
                classes=[
                    Class(
                        name=c["name"],
                        abstract=bool(c.get("abstract", False)),
                        super_types=list(c.get("superTypes", [])),
                        attributes=[
                            Attribute(a["name"], a["type"], a.get("lower", 0), a.get("upper", 1))
                            for a in c.get("attributes", [])
                        ],
                        references=[
                            Reference(
                                r["name"],
                                r["target"],
                                bool(r.get("containment", False)),
                                r.get("lower", 0),
                                r.get("upper", 1),
                                r.get("opposite"),
                            )
                            for r in c.get("references", [])
                        ],
                    )
                    for c in data.get("classes", [])
                ],
                enumerations=[Enumeration(e["name"], list(e["literals"])) for e in data.get("enumerations", [])],
            )
        except (KeyError, TypeError) as exc:
            raise ParseError(f"malformed metamodel JSON: {exc!r}") from exc


def supertypes(mm: Metamodel, name: str) -> list[str]:
    """Reflexive-transitive supertypes of ``name``, breadth-first, cycle-safe."""
    seen = [name]
    i = 0
    while i < len(seen):
        c = mm.find_class(seen[i])
        i += 1
        if c is None:
            continue
        for s in c.super_types:
            if s not in seen:
                seen.append(s)
    return seen


def is_subtype_of(mm: Metamodel, sub: str, sup: str) -> bool:
    mm.get_class(sub)
    mm.get_class(sup)
    return sup in supertypes(mm, sub)


def subclasses(mm: Metamodel, name: str, direct: bool = False) -> list[str]:
    """Strict subclasses of ``name`` in declaration order."""
    if direct:
        return [c.name for c in mm.classes if name in c.super_types]
    return [c.name for c in mm.classes if c.name != name and name in supertypes(mm, c.name)]


def all_features(mm: Metamodel, cls: str) -> list[tuple[str, Feature]]:
    """``(owner, feature)`` pairs, inherited first, then declaration order."""
    out: list[tuple[str, Feature]] = []
    seen: set[int] = set()
    visiting: set[str] = set()

    def walk(name: str) -> None:
        if name in visiting:
            return
        visiting.add(name)
        c = mm.find_class(name)
        if c is None:
            return
        for s in c.super_types:
            walk(s)
        for f in c.features:
            if id(f) not in seen:
                seen.add(id(f))
                out.append((c.name, f))

    mm.get_class(cls)
    walk(cls)
    return out


def feature_of(mm: Metamodel, cls: str, name: str) -> tuple[str, Feature] | None:
    """Look up a feature (own or inherited) without raising."""
    if mm.find_class(cls) is None:
        return None
    for owner, f in all_features(mm, cls):
        if f.name == name:
            return owner, f
    return None


def resolve(mm: Metamodel, qn: str) -> Class | Enumeration | Attribute | Reference | EnumLiteral:
    """Resolve ``Class``, ``Enum``, ``Class.feature`` or ``Enum.LITERAL``."""
    head, _, tail = qn.partition(".")
    if "." in tail:
        raise NotFound(qn, tail.split(".", 1)[1])
    c = mm.find_class(head)
    if c is not None:
        if not tail:
            return c
        hit = feature_of(mm, head, tail)
        if hit is None:
            raise NotFound(qn, tail)
        return hit[1]
    e = mm.find_enum(head)
    if e is not None:
        if not tail:
            return e
        if tail in e.literals:
            return EnumLiteral(e, tail)
        raise NotFound(qn, tail)
    raise NotFound(qn, head)


def owner_of(mm: Metamodel, qn: str) -> str:
    """Declaring class of the feature named by ``Class.feature``."""
    head, _, tail = qn.partition(".")
    hit = feature_of(mm, head, tail) if tail else None
    if hit is None:
        raise NotFound(qn, tail or head)
    return hit[0]


def _bounds_ok(lower: object, upper: object) -> bool:
    if type(lower) is not int or type(upper) is not int:
        return False
    if lower < 0:
        return False
    if upper == UNBOUNDED:
        return True
    return upper >= 1 and lower <= upper


def validate_metamodel(mm: Metamodel) -> list[Violation]:
    out: list[Violation] = []

    def bad(element: str, kind: str, message: str) -> None:
        out.append(Violation(element, kind, message))

    names: dict[str, str] = {}
    for c in mm.classes:
        if not c.name.isidentifier():
            bad(c.name, "INVALID_NAME", "class name is not an identifier")
        if c.name in PRIMITIVE_TYPES:
            bad(c.name, "DUPLICATE_NAME", "class name shadows a primitive type")
        if c.name in names:
            bad(c.name, "DUPLICATE_NAME", f"name already used by a {names[c.name]}")
        names.setdefault(c.name, "class")
    for e in mm.enumerations:
        if not e.name.isidentifier():
            bad(e.name, "INVALID_NAME", "enumeration name is not an identifier")
        if e.name in PRIMITIVE_TYPES:
            bad(e.name, "DUPLICATE_NAME", "enumeration name shadows a primitive type")
        if e.name in names:
            bad(e.name, "DUPLICATE_NAME", f"name already used by a {names[e.name]}")
        names.setdefault(e.name, "enumeration")
        if not e.literals:
            bad(e.name, "EMPTY_ENUM", "enumeration has no literals")
        if len(set(e.literals)) != len(e.literals):
            bad(e.name, "DUPLICATE_NAME", "duplicate literal")
        for lit in e.literals:
            if not lit.isidentifier():
                bad(f"{e.name}.{lit}", "INVALID_NAME", "literal is not an identifier")

    cyclic = False
    cycles: set[frozenset[str]] = set()
    for c in mm.classes:
        for s in c.super_types:
            if mm.find_class(s) is None:
                bad(c.name, "UNRESOLVED_TYPE", f"supertype {s!r} is not a declared class")
        if len(set(c.super_types)) != len(c.super_types):
            bad(c.name, "DUPLICATE_NAME", "supertype listed twice")
        if any(c.name in supertypes(mm, s) for s in c.super_types):
            cyclic = True
            # one violation per cycle, reported at its first declared class
            members = frozenset(x for x in supertypes(mm, c.name) if c.name in supertypes(mm, x))
            if members not in cycles:
                cycles.add(members)
                listed = ", ".join(x.name for x in mm.classes if x.name in members)
                bad(c.name, "INHERITANCE_CYCLE", f"inheritance cycle through {listed}")

    for c in mm.classes:
        for a in c.attributes:
            qn = f"{c.name}.{a.name}"
            if not a.name.isidentifier():
                bad(qn, "INVALID_NAME", "feature name is not an identifier")
            if a.type not in PRIMITIVE_TYPES and mm.find_enum(a.type) is None:
                bad(qn, "UNRESOLVED_TYPE", f"attribute type {a.type!r} does not resolve")
            if not _bounds_ok(a.lower, a.upper):
                bad(qn, "BOUNDS", f"invalid bounds {a.lower}..{a.upper}")
        for r in c.references:
            qn = f"{c.name}.{r.name}"
            if not r.name.isidentifier():
                bad(qn, "INVALID_NAME", "feature name is not an identifier")
            if not _bounds_ok(r.lower, r.upper):
                bad(qn, "BOUNDS", f"invalid bounds {r.lower}..{r.upper}")
            target = mm.find_class(r.target)
            if target is None:
                bad(qn, "UNRESOLVED_TYPE", f"reference target {r.target!r} is not a declared class")
                continue
            if r.opposite is None:
                continue
            hit = None if cyclic else feature_of(mm, r.target, r.opposite)
            if hit is None or not isinstance(hit[1], Reference):
                bad(qn, "OPPOSITE", f"opposite {r.target}.{r.opposite} is not a reference")
                continue
            opp = hit[1]
            if opp is r:
                bad(qn, "OPPOSITE", "reference is its own opposite")
            elif opp.opposite != r.name or opp.target not in supertypes(mm, c.name):
                bad(qn, "OPPOSITE", f"opposite {r.target}.{r.opposite} does not point back")
            elif r.containment and opp.containment:
                bad(qn, "OPPOSITE", "both ends of an opposite pair are containments")

    if not cyclic:
        for c in mm.classes:
            seen: dict[str, str] = {}
            for owner, f in all_features(mm, c.name):
                if f.name in seen:
                    bad(
                        f"{c.name}.{f.name}",
                        "FEATURE_CLASH",
                        f"feature declared by both {seen[f.name]} and {owner}",
                    )
                seen.setdefault(f.name, owner)
    return out


def qualified_names(mm: Metamodel) -> Iterator[str]:
    """Every name that ``resolve`` should accept on a valid metamodel."""
    for c in mm.classes:
        yield c.name
        for _, f in all_features(mm, c.name):
            yield f"{c.name}.{f.name}"
    for e in mm.enumerations:
        yield e.name
        for lit in e.literals:
            yield f"{e.name}.{lit}"
