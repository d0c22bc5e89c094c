"""Reusable coupled operations.

Each operation bundles three things over named parameters:

* ``check``   -- constraints deciding whether it applies to a metamodel,
* ``adapt``   -- the in-place metamodel edit,
* ``migrate`` -- the in-place model edit that restores conformance.

The engine runs ``migrate`` inside a transaction; ``check`` must return no
violations before ``adapt`` is allowed to run.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Any, Callable, ClassVar

from .errors import AmbiguousCommonSupertype, ArgumentError, NotFound, UnknownOperation
from .metamodel import (
    UNBOUNDED,
    Attribute,
    Class,
    EnumLiteral,
    Enumeration,
    Metamodel,
    Reference,
    all_features,
    feature_of,
    resolve,
    subclasses,
    supertypes,
    validate_metamodel,
)
from .model import ABSENT, Ref, Repository, id_key

Warn = Callable[[str], None]


class Kind(enum.Enum):
    ELEMENT = "ELEMENT"
    ELEMENT_LIST = "ELEMENT_LIST"
    STRING = "STRING"
    FLAG = "FLAG"


@dataclass(frozen=True)
class Parameter:
    name: str
    kind: Kind
    required: bool = True


@dataclass(frozen=True)
class ConstraintViolation:
    operation: str
    constraint: str
    message: str
    element: str | None = None

    def __str__(self) -> str:
        where = f" [{self.element}]" if self.element else ""
        return f"{self.operation}/{self.constraint}{where}: {self.message}"

    def to_json(self) -> dict:
        return {
            "operation": self.operation,
            "constraint": self.constraint,
            "message": self.message,
            "element": self.element,
        }


class CoupledOperation:
    name: ClassVar[str]
    description: ClassVar[str]
    parameters: ClassVar[tuple[Parameter, ...]]

    def signature(self) -> str:
        params = ",".join(f"{p.name}:{p.kind.value}" for p in self.parameters)
        return f"{self.name}({params})"

    def bind(self, args: dict[str, Any]) -> dict[str, Any]:
        """Validate argument names and kinds; raise ArgumentError."""
        known = {p.name: p for p in self.parameters}
        for key in args:
            if key not in known:
                raise ArgumentError(f"{self.name}: unknown parameter {key!r}")
        out = {}
        for p in self.parameters:
            if p.name not in args:
                if p.required:
                    raise ArgumentError(f"{self.name}: missing parameter {p.name!r}")
                continue
            v = args[p.name]
            ok = {
                Kind.ELEMENT: isinstance(v, str),
                Kind.STRING: isinstance(v, str),
                Kind.FLAG: isinstance(v, bool),
                Kind.ELEMENT_LIST: isinstance(v, (list, tuple)) and all(isinstance(x, str) for x in v),
            }[p.kind]
            if not ok:
                raise ArgumentError(f"{self.name}: parameter {p.name!r} expects {p.kind.value}, got {v!r}")
            out[p.name] = list(v) if p.kind is Kind.ELEMENT_LIST else v
        return out

    def check(self, mm: Metamodel, args: dict[str, Any]) -> list[ConstraintViolation]:
        raise NotImplementedError

    def applicability(self, mm: Metamodel, args: dict[str, Any]) -> list[ConstraintViolation]:
        """``check`` plus a dry run that must not introduce metamodel violations."""
        out = self.check(mm, args)
        if out:
            return out
        trial = mm.copy()
        try:
            self.adapt(trial, args)
        except AmbiguousCommonSupertype as exc:
            return [self._v("common-supertype", str(exc))]
        known = {str(v) for v in validate_metamodel(mm)}
        return [self._v("valid-result", v.message, v.element) for v in validate_metamodel(trial) if str(v) not in known]

    def adapt(self, mm: Metamodel, args: dict[str, Any]) -> None:
        raise NotImplementedError

    def migrate(self, repo: Repository, before: Metamodel, after: Metamodel, args: dict[str, Any], warn: Warn) -> None:
        pass

    def _v(self, constraint: str, message: str, element: str | None = None) -> ConstraintViolation:
        return ConstraintViolation(self.name, constraint, message, element)


def _klass(mm: Metamodel, qn: str) -> Class | None:
    return mm.find_class(qn) if "." not in qn else None


def _declared(mm: Metamodel, qn: str):
    """``(class, feature)`` for a feature declared (not inherited) on ``Class``."""
    head, _, tail = qn.partition(".")
    c = mm.find_class(head)
    if c is None or not tail:
        return None
    f = c.feature(tail)
    return (c, f) if f is not None else None


def _free_feature_name(mm: Metamodel, cls: str, name: str, ignore: tuple = ()) -> bool:
    """No feature called ``name`` visible on ``cls`` or any of its subclasses."""
    for c in [cls, *subclasses(mm, cls)]:
        for _, f in all_features(mm, c):
            if f.name == name and not any(f is g for g in ignore):
                return False
    return True


def _instances(repo: Repository, mm: Metamodel, cls: str, include_subtypes: bool = True) -> list:
    """Objects whose class is ``cls`` (or a subclass) in ``mm``, by raw scan."""
    names = {cls, *subclasses(mm, cls)} if include_subtypes else {cls}
    return [o for o in repo.iter_objects() if o.cls in names]


class Rename(CoupledOperation):
    name = "Rename"
    description = "rename a class, feature, enumeration or literal"
    parameters = (Parameter("element", Kind.ELEMENT), Parameter("newName", Kind.STRING))

    def check(self, mm, args):
        qn, new = args["element"], args["newName"]
        try:
            el = resolve(mm, qn)
        except NotFound as exc:
            return [self._v("element-exists", str(exc), qn)]
        if not new.isidentifier():
            return [self._v("valid-name", f"{new!r} is not an identifier", qn)]
        old = el.name
        if new == old:
            return [self._v("name-changes", "new name equals the current name", qn)]
        if isinstance(el, (Class, Enumeration)):
            if mm.name_in_use(new):
                return [self._v("name-unique", f"{new!r} is already used in the metamodel", qn)]
        elif isinstance(el, EnumLiteral):
            if new in el.enumeration.literals:
                return [self._v("name-unique", f"literal {new!r} already exists", qn)]
        else:
            owner = next(o for o, f in all_features(mm, qn.split(".")[0]) if f is el)
            if not _free_feature_name(mm, owner, new):
                return [self._v("name-unique", f"feature {new!r} clashes on {owner} or a subclass", qn)]
        return []

    def adapt(self, mm, args):
        qn, new = args["element"], args["newName"]
        el = resolve(mm, qn)
        if isinstance(el, Class):
            old = el.name
            el.name = new
            for c in mm.classes:
                c.super_types = [new if s == old else s for s in c.super_types]
                for r in c.references:
                    if r.target == old:
                        r.target = new
        elif isinstance(el, Enumeration):
            old = el.name
            el.name = new
            for c in mm.classes:
                for a in c.attributes:
                    if a.type == old:
                        a.type = new
        elif isinstance(el, EnumLiteral):
            lits = el.enumeration.literals
            lits[lits.index(el.name)] = new
        else:
            old = el.name
            if isinstance(el, Reference) and el.opposite:
                hit = feature_of(mm, el.target, el.opposite)
                if hit is not None and isinstance(hit[1], Reference):
                    hit[1].opposite = new
            el.name = new

    def migrate(self, repo, before, after, args, warn):
        rename_migration(repo, before, args["element"], args["newName"])


def rename_migration(repo: Repository, before: Metamodel, qn: str, new: str) -> None:
    """Model side of a rename, resolved against the pre-rename metamodel."""
    el = resolve(before, qn)
    if isinstance(el, Class):
        for o in _instances(repo, before, el.name, include_subtypes=False):
            o.cls = new
    elif isinstance(el, EnumLiteral):
        enum_name = el.enumeration.name
        for c in before.classes:
            for a in c.attributes:
                if a.type != enum_name:
                    continue
                for o in _instances(repo, before, c.name):
                    v = o.slots.get(a.name, ABSENT)
                    if isinstance(v, list):
                        o.slots[a.name] = [new if x == el.name else x for x in v]
                    elif v == el.name:
                        o.slots[a.name] = new
    elif isinstance(el, (Attribute, Reference)):
        owner = next(o for o, f in all_features(before, qn.split(".")[0]) if f is el)
        for o in _instances(repo, before, owner):
            if el.name in o.slots:
                o.slots[new] = o.slots.pop(el.name)


class ExtractSuperClass(CoupledOperation):
    name = "ExtractSuperClass"
    description = "create an abstract common super class for a set of classes"
    parameters = (Parameter("subClasses", Kind.ELEMENT_LIST), Parameter("superName", Kind.STRING))

    def check(self, mm, args):
        subs, sup = args["subClasses"], args["superName"]
        out = []
        if not subs:
            out.append(self._v("non-empty", "at least one subclass is required"))
        if len(set(subs)) != len(subs):
            out.append(self._v("distinct", "subclasses listed twice"))
        for s in subs:
            if _klass(mm, s) is None:
                out.append(self._v("class-exists", f"{s!r} is not a class", s))
        if not sup.isidentifier():
            out.append(self._v("valid-name", f"{sup!r} is not an identifier"))
        elif mm.name_in_use(sup):
            out.append(self._v("name-unique", f"{sup!r} is already used in the metamodel", sup))
        return out

    def adapt(self, mm, args):
        sup = args["superName"]
        mm.classes.append(Class(sup, abstract=True))
        for s in args["subClasses"]:
            mm.get_class(s).super_types.append(sup)


def _common_target(mm: Metamodel, targets: list[str]) -> list[str]:
    """Most specific common supertypes of ``targets`` (ideally exactly one)."""
    common = None
    for t in targets:
        sts = supertypes(mm, t)
        common = [s for s in sts if mm.find_class(s)] if common is None else [s for s in common if s in sts]
    common = common or []
    return [c for c in common if not any(d != c and c in supertypes(mm, d) for d in common)]


class UniteReferences(CoupledOperation):
    name = "UniteReferences"
    description = "unite references of one class into a single many-valued reference"
    parameters = (Parameter("references", Kind.ELEMENT_LIST), Parameter("unitedName", Kind.STRING))

    def check(self, mm, args):
        qns, united = args["references"], args["unitedName"]
        if len(qns) < 2 or len(set(qns)) != len(qns):
            return [self._v("two-or-more", "at least two distinct references are required")]
        refs = []
        for qn in qns:
            hit = _declared(mm, qn)
            if hit is None or not isinstance(hit[1], Reference):
                return [self._v("reference-exists", f"{qn!r} is not a declared reference", qn)]
            refs.append(hit)
        owners = {c.name for c, _ in refs}
        if len(owners) != 1:
            return [self._v("same-class", "references are declared on different classes")]
        owner = owners.pop()
        out = []
        if len({r.containment for _, r in refs}) != 1:
            out.append(self._v("same-containment", "references mix containment and cross references"))
        for qn, (_, r) in zip(qns, refs):
            if r.opposite:
                out.append(self._v("no-opposite", "reference has an opposite", qn))
        common = _common_target(mm, [r.target for _, r in refs])
        if not common:
            out.append(self._v("common-supertype", "targets share no common supertype"))
        elif len(common) > 1:
            out.append(self._v("common-supertype", f"ambiguous common supertypes {common}"))
        if not united.isidentifier():
            out.append(self._v("valid-name", f"{united!r} is not an identifier"))
        elif not _free_feature_name(mm, owner, united, ignore=tuple(r for _, r in refs)):
            out.append(self._v("name-unique", f"{united!r} is already a feature of {owner}", owner))
        return out

    def adapt(self, mm, args):
        refs = [_declared(mm, qn) for qn in args["references"]]
        owner = refs[0][0]
        common = _common_target(mm, [r.target for _, r in refs])
        if len(common) != 1:
            raise AmbiguousCommonSupertype(f"targets {[r.target for _, r in refs]} have common supertypes {common}")
        pos = owner.references.index(refs[0][1])
        for _, r in refs:
            owner.references.remove(r)
        united = Reference(args["unitedName"], common[0], refs[0][1].containment, 0, UNBOUNDED)
        owner.references.insert(min(pos, len(owner.references)), united)

    def migrate(self, repo, before, after, args, warn):
        refs = [_declared(before, qn) for qn in args["references"]]
        owner = refs[0][0].name
        names = [r.name for _, r in refs]
        united = args["unitedName"]
        for o in _instances(repo, before, owner):
            values = []
            for n in names:
                v = o.slots.pop(n, ABSENT)
                values.extend(v if isinstance(v, list) else ([] if v is ABSENT else [v]))
            if values:
                o.slots[united] = values


class PullUpFeature(CoupledOperation):
    name = "PullUpFeature"
    description = "move a feature from a subclass to one of its super classes"
    parameters = (Parameter("feature", Kind.ELEMENT), Parameter("superClass", Kind.ELEMENT))

    @staticmethod
    def _same(a, b) -> bool:
        return type(a) is type(b) and a == b

    def check(self, mm, args):
        qn, sup_name = args["feature"], args["superClass"]
        hit = _declared(mm, qn)
        if hit is None:
            return [self._v("feature-exists", f"{qn!r} is not a declared feature", qn)]
        owner, f = hit
        sup = _klass(mm, sup_name)
        if sup is None:
            return [self._v("class-exists", f"{sup_name!r} is not a class", sup_name)]
        if owner.name == sup.name or sup.name not in supertypes(mm, owner.name):
            return [self._v("is-subclass", f"{owner.name} is not a subclass of {sup.name}", qn)]
        if isinstance(f, Reference) and f.opposite:
            return [self._v("no-opposite", "cannot pull up a reference with an opposite", qn)]
        if any(g.name == f.name for _, g in all_features(mm, sup.name)):
            return [self._v("name-free", f"{sup.name} already has a feature {f.name!r}", sup.name)]
        declarers = [c for c in subclasses(mm, sup.name) if mm.get_class(c).feature(f.name) is not None]
        direct = subclasses(mm, sup.name, direct=True)
        merge = len(declarers) > 1 or f.lower > 0
        if merge:
            if sorted(declarers) != sorted(direct):
                return [
                    self._v(
                        "all-subclasses-declare",
                        f"every direct subclass of {sup.name} must declare {f.name!r}",
                        qn,
                    )
                ]
            for c in direct:
                if not self._same(mm.get_class(c).feature(f.name), f):
                    return [self._v("identical-features", f"{c}.{f.name} differs from {qn}", f"{c}.{f.name}")]
            if f.lower > 0 and not sup.abstract:
                return [self._v("lower-bound", f"{sup.name} is concrete and {qn} is mandatory", qn)]
        return []

    def adapt(self, mm, args):
        owner, f = _declared(mm, args["feature"])
        sup = mm.get_class(args["superClass"])
        for c in subclasses(mm, sup.name):
            if mm.get_class(c).feature(f.name) is not None:
                mm.get_class(c).remove_feature(f.name)
        sup.add_feature(f)


class ClassToAssociation(CoupledOperation):
    name = "ClassToAssociation"
    description = "replace a class that links two objects by a reference"
    parameters = (
        Parameter("cls", Kind.ELEMENT),
        Parameter("sourceRef", Kind.STRING),
        Parameter("targetRef", Kind.STRING),
        Parameter("newRefName", Kind.STRING),
    )

    def check(self, mm, args):
        cname, s, t, new = args["cls"], args["sourceRef"], args["targetRef"], args["newRefName"]
        c = _klass(mm, cname)
        if c is None:
            return [self._v("class-exists", f"{cname!r} is not a class", cname)]
        feats = {f.name: f for _, f in all_features(mm, cname)}
        if s == t or set(feats) != {s, t}:
            return [self._v("two-features", f"{cname} must have exactly the features {s!r} and {t!r}", cname)]
        out = []
        for n in (s, t):
            f = feats[n]
            if not isinstance(f, Reference) or f.containment or f.many or f.opposite:
                out.append(self._v("single-cross-reference", f"{cname}.{n} must be a single-valued plain reference"))
        if subclasses(mm, cname):
            out.append(self._v("no-subclasses", f"{cname} has subclasses", cname))
        incoming = [(k.name, r) for k in mm.classes for r in k.references if r.target == cname]
        if [r.containment for _, r in incoming] != [True]:
            out.append(self._v("one-container", f"exactly one containment and no other reference may target {cname}"))
        if out:
            return out
        source = feats[s].target
        if mm.find_class(source) is None:
            return [self._v("class-exists", f"{source!r} is not a class", source)]
        if not new.isidentifier():
            out.append(self._v("valid-name", f"{new!r} is not an identifier"))
        elif not _free_feature_name(mm, source, new):
            out.append(self._v("name-unique", f"{source} already has a feature {new!r}", source))
        return out

    def adapt(self, mm, args):
        cname = args["cls"]
        feats = {f.name: f for _, f in all_features(mm, cname)}
        source = mm.get_class(feats[args["sourceRef"]].target)
        source.references.append(Reference(args["newRefName"], feats[args["targetRef"]].target, False, 0, UNBOUNDED))
        for k in mm.classes:
            k.references = [r for r in k.references if r.target != cname]
        mm.classes.remove(mm.get_class(cname))

    def migrate(self, repo, before, after, args, warn):
        cname, s, t, new = args["cls"], args["sourceRef"], args["targetRef"], args["newRefName"]
        holder_cls, container = next((k.name, r) for k in before.classes for r in k.references if r.target == cname)
        links = {o.id for o in _instances(repo, before, cname)}
        # containment order first, then uncontained instances by id
        ordered: list[str] = []
        for o in _instances(repo, before, holder_cls):
            v = o.slots.get(container.name, ABSENT)
            for r in v if isinstance(v, list) else [v]:
                if isinstance(r, Ref) and r.id in links and r.id not in ordered:
                    ordered.append(r.id)
        ordered += sorted(links.difference(ordered), key=id_key)
        for oid in ordered:
            o = repo.objects[oid]
            src, trg = o.slots.get(s, ABSENT), o.slots.get(t, ABSENT)
            if isinstance(src, Ref) and isinstance(trg, Ref) and src.id in repo.objects:
                holder = repo.objects[src.id]
                holder.slots[new] = [*holder.slots.get(new, []), trg]
            else:
                warn(f"{cname} {oid} has an absent endpoint; dropped without creating a {new} link")
        for oid in ordered:
            repo.delete_instance(oid)


class EnumerationToSubClasses(CoupledOperation):
    name = "EnumerationToSubClasses"
    description = "replace an enumeration attribute by one subclass per literal"
    parameters = (Parameter("attribute", Kind.ELEMENT),)

    def check(self, mm, args):
        qn = args["attribute"]
        hit = _declared(mm, qn)
        if hit is None or not isinstance(hit[1], Attribute):
            return [self._v("attribute-exists", f"{qn!r} is not a declared attribute", qn)]
        c, a = hit
        e = mm.find_enum(a.type)
        if e is None:
            return [self._v("enum-typed", f"{qn} is not typed by an enumeration", qn)]
        out = []
        if (a.lower, a.upper) != (1, 1):
            out.append(self._v("mandatory-single", f"{qn} must have bounds 1..1", qn))
        if subclasses(mm, c.name):
            out.append(self._v("no-subclasses", f"{c.name} already has subclasses", c.name))
        for lit in e.literals:
            if mm.name_in_use(lit):
                out.append(self._v("literal-free", f"literal {lit!r} is already a type name", f"{e.name}.{lit}"))
        return out

    def adapt(self, mm, args):
        c, a = _declared(mm, args["attribute"])
        e = mm.find_enum(a.type)
        c.abstract = True
        c.remove_feature(a.name)
        for lit in e.literals:
            mm.classes.append(Class(lit, super_types=[c.name]))
        if not any(x.type == e.name for k in mm.classes for x in k.attributes):
            mm.enumerations.remove(e)

    def migrate(self, repo, before, after, args, warn):
        c, a = _declared(before, args["attribute"])
        for o in _instances(repo, before, c.name, include_subtypes=False):
            v = o.slots.get(a.name, ABSENT)
            if isinstance(v, str):
                o.cls = v
                del o.slots[a.name]


class SubClassesToEnumeration(CoupledOperation):
    name = "SubClassesToEnumeration"
    description = "replace featureless leaf subclasses by an enumeration attribute"
    parameters = (Parameter("superClass", Kind.ELEMENT), Parameter("attributeName", Kind.STRING))

    def check(self, mm, args):
        sname, attr = args["superClass"], args["attributeName"]
        sup = _klass(mm, sname)
        if sup is None:
            return [self._v("class-exists", f"{sname!r} is not a class", sname)]
        out = []
        if not sup.abstract:
            out.append(self._v("abstract", f"{sname} must be abstract", sname))
        subs = subclasses(mm, sname, direct=True)
        if not subs:
            out.append(self._v("has-subclasses", f"{sname} has no subclasses", sname))
        for s in subs:
            k = mm.get_class(s)
            if k.super_types != [sname] or subclasses(mm, s) or k.features:
                out.append(self._v("featureless-leaf", f"{s} must be a featureless leaf with sole supertype {sname}", s))
            if any(r.target == s for c in mm.classes for r in c.references):
                out.append(self._v("unreferenced", f"{s} is the target of a reference", s))
        if mm.name_in_use(f"{sname}Kind"):
            out.append(self._v("enum-name-free", f"{sname}Kind is already used in the metamodel", sname))
        if not attr.isidentifier():
            out.append(self._v("valid-name", f"{attr!r} is not an identifier"))
        elif not _free_feature_name(mm, sname, attr):
            out.append(self._v("name-unique", f"{sname} already has a feature {attr!r}", sname))
        return out

    def adapt(self, mm, args):
        sname, attr = args["superClass"], args["attributeName"]
        sup = mm.get_class(sname)
        subs = subclasses(mm, sname, direct=True)
        mm.enumerations.append(Enumeration(f"{sname}Kind", list(subs)))
        sup.attributes.append(Attribute(attr, f"{sname}Kind", 1, 1))
        sup.abstract = False
        mm.classes = [c for c in mm.classes if c.name not in subs]

    def migrate(self, repo, before, after, args, warn):
        sname, attr = args["superClass"], args["attributeName"]
        subs = set(subclasses(before, sname, direct=True))
        for o in repo.iter_objects():
            if o.cls in subs:
                o.slots[attr] = o.cls
                o.cls = sname


REGISTRY: dict[str, CoupledOperation] = {
    op.name: op
    for op in (
        Rename(),
        ExtractSuperClass(),
        UniteReferences(),
        PullUpFeature(),
        ClassToAssociation(),
        EnumerationToSubClasses(),
        SubClassesToEnumeration(),
    )
}


def get_operation(name: str) -> CoupledOperation:
    try:
        return REGISTRY[name]
    except KeyError:
        raise UnknownOperation(name) from None


def check_applicability(name: str, args: dict[str, Any], mm: Metamodel) -> list[ConstraintViolation]:
    op = get_operation(name)
    return op.applicability(mm, op.bind(args))


def list_operations() -> list[str]:
    """One ``signature: description`` line per registered operation."""
    return [f"{op.signature()}: {op.description}" for op in REGISTRY.values()]


__all__ = [
    "REGISTRY",
    "ConstraintViolation",
    "CoupledOperation",
    "Kind",
    "Parameter",
    "check_applicability",
    "get_operation",
    "list_operations",
    "rename_migration",
]
