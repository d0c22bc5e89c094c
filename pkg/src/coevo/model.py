"""Reflective instance models: objects, slots, navigation, conformance."""

from __future__ import annotations

import copy
import enum
import functools
import re
import warnings
from dataclasses import dataclass, field
from typing import Any, Iterator

from .errors import NotFound, ParseError, UnknownClass, UnknownObject, UnknownResource
from .metamodel import (
    Attribute,
    Feature,
    Metamodel,
    Reference,
    Violation,
    all_features,
    feature_of,
    supertypes,
)


class _Absent:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "ABSENT"

    def __bool__(self) -> bool:
        return False

    def __deepcopy__(self, memo):
        return self

    def __reduce__(self):
        return (_Absent, ())


ABSENT: Any = _Absent()


@dataclass(frozen=True, order=True)
class Ref:
    """A reference-valued slot entry pointing at an object id."""

    id: str

    def __str__(self) -> str:
        return self.id


class Mode(enum.Enum):
    SET = "set"
    ADD = "add"
    REMOVE = "remove"
    UNSET = "unset"


class RemoveAbsentWarning(UserWarning):
    pass


# Violation kinds produced by check_conformance.
TYPE_MISMATCH = "TYPE_MISMATCH"
MULTIPLICITY = "MULTIPLICITY"
UNKNOWN_FEATURE = "UNKNOWN_FEATURE"
UNKNOWN_CLASS = "UNKNOWN_CLASS"
ABSTRACT_INSTANCE = "ABSTRACT_INSTANCE"
DANGLING_REF = "DANGLING_REF"
CONTAINMENT_CYCLE = "CONTAINMENT_CYCLE"
MULTI_CONTAINER = "MULTI_CONTAINER"
ORPHAN = "ORPHAN"

_DIGITS = re.compile(r"(\d+)")


def id_key(oid: str) -> tuple:
    """Natural sort key, so ``o9`` precedes ``o10``."""
    return tuple((1, int(p)) if p.isdigit() else (0, p) for p in _DIGITS.split(str(oid)))


def _oid(obj: str | Ref) -> str:
    return obj.id if isinstance(obj, Ref) else obj


def _as_list(value: Any) -> list:
    if value is ABSENT:
        return []
    if isinstance(value, list):
        return list(value)
    return [value]


@dataclass
class Obj:
    id: str
    cls: str
    resource: str
    slots: dict[str, Any] = field(default_factory=dict)


@dataclass
class Resource:
    name: str
    roots: list[str] = field(default_factory=list)


class Repository:
    """A set of resources holding typed objects.

    ``metamodel`` is the working metamodel used to interpret writes
    (containment, opposites, many-valuedness). It is not enforced on writes;
    see :func:`check_conformance`.
    """

    def __init__(self, metamodel: Metamodel | str, release: int = 0):
        if isinstance(metamodel, Metamodel):
            self.metamodel: Metamodel | None = metamodel
            self.metamodel_name = metamodel.name
        else:
            self.metamodel = None
            self.metamodel_name = metamodel
        self.release = release
        self.resources: dict[str, Resource] = {}
        self.objects: dict[str, Obj] = {}
        self._counter = 0

    # -- bookkeeping -------------------------------------------------------

    def resource(self, name: str, create: bool = True) -> Resource:
        res = self.resources.get(name)
        if res is None:
            if not create:
                raise UnknownResource(name)
            res = self.resources[name] = Resource(name)
        return res

    def obj(self, obj: str | Ref) -> Obj:
        try:
            return self.objects[_oid(obj)]
        except KeyError:
            raise UnknownObject(_oid(obj)) from None

    def __contains__(self, obj: str | Ref) -> bool:
        return _oid(obj) in self.objects

    def __len__(self) -> int:
        return len(self.objects)

    def iter_objects(self) -> Iterator[Obj]:
        for oid in sorted(self.objects, key=id_key):
            yield self.objects[oid]

    def class_of(self, obj: str | Ref) -> str:
        return self.obj(obj).cls

    def fresh_id(self) -> str:
        while True:
            self._counter += 1
            oid = f"o{self._counter}"
            if oid not in self.objects:
                return oid

    def _feature(self, cls: str, name: str) -> Feature | None:
        if self.metamodel is None:
            return None
        hit = feature_of(self.metamodel, cls, name)
        return hit[1] if hit else None

    def _is_many(self, o: Obj, name: str, default: bool) -> bool:
        f = self._feature(o.cls, name)
        return f.many if f is not None else default

    # -- creation / access -------------------------------------------------

    def new_instance(self, resource: str, cls: str, oid: str | None = None) -> Ref:
        if self.metamodel is not None and self.metamodel.find_class(cls) is None:
            raise UnknownClass(cls)
        if oid is None:
            oid = self.fresh_id()
        elif oid in self.objects:
            raise ValueError(f"object id {oid!r} already in use")
        self.objects[oid] = Obj(oid, cls, resource)
        self.resource(resource).roots.append(oid)
        return Ref(oid)

    def get_slot(self, obj: str | Ref, feature: str) -> Any:
        o = self.obj(obj)
        if feature in o.slots:
            v = o.slots[feature]
            return list(v) if isinstance(v, list) else v
        if self._is_many(o, feature, default=False):
            return []
        return ABSENT

    def set(self, obj, feature: str, value: Any) -> None:
        self.write_slot(obj, feature, Mode.SET, value)

    def add(self, obj, feature: str, value: Any) -> None:
        self.write_slot(obj, feature, Mode.ADD, value)

    def remove(self, obj, feature: str, value: Any) -> None:
        self.write_slot(obj, feature, Mode.REMOVE, value)

    def unset(self, obj, feature: str) -> None:
        self.write_slot(obj, feature, Mode.UNSET)

    def write_slot(self, obj: str | Ref, feature: str, mode: Mode | str, value: Any = ABSENT) -> None:
        """Mutate one slot, keeping containment and opposites consistent.

        Conformance is not checked here; intermediate states may be invalid.
        """
        mode = Mode(mode)
        o = self.obj(obj)
        f = self._feature(o.cls, feature)
        old = _as_list(o.slots.get(feature, ABSENT))
        if mode is Mode.UNSET or (mode is Mode.SET and value is ABSENT):
            o.slots.pop(feature, None)
            for v in old:
                self._on_removed(o, f, v)
        elif mode is Mode.SET:
            many = f.many if f is not None else isinstance(value, list)
            new = list(value) if isinstance(value, list) else [value]
            if many and isinstance(f, Reference) and f.containment:
                new = list(dict.fromkeys(new))
            if many or isinstance(value, list):
                self._store(o, feature, new)
            else:
                o.slots[feature] = value
            for v in old:
                if v not in new:
                    self._on_removed(o, f, v)
            for v in dict.fromkeys(new):
                if v not in old:
                    self._on_added(o, f, v)
        elif mode is Mode.ADD:
            if isinstance(f, Reference) and (f.containment or f.opposite) and value in old:
                return
            if f is not None and not f.many:
                # adding to a single-valued slot replaces it
                self.write_slot(o.id, feature, Mode.SET, value)
                return
            self._store(o, feature, old + [value])
            self._on_added(o, f, value)
        else:
            if value not in old:
                warnings.warn(
                    f"{o.id}.{feature}: value {value!r} not present, nothing removed",
                    RemoveAbsentWarning,
                    stacklevel=2,
                )
                return
            old.remove(value)
            if f is not None and not f.many and feature in o.slots and not isinstance(o.slots[feature], list):
                o.slots.pop(feature)
            else:
                self._store(o, feature, old)
            if value not in old:
                self._on_removed(o, f, value)

    def _store(self, o: Obj, name: str, values: list) -> None:
        if values:
            o.slots[name] = values
        else:
            o.slots.pop(name, None)

    def _raw_remove(self, o: Obj, name: str, ref: Ref) -> None:
        cur = o.slots.get(name, ABSENT)
        if isinstance(cur, list):
            self._store(o, name, [v for v in cur if v != ref])
        elif cur == ref:
            del o.slots[name]

    def _on_added(self, o: Obj, f: Feature | None, value: Any) -> None:
        if not isinstance(f, Reference) or not isinstance(value, Ref) or value.id not in self.objects:
            return
        child = self.objects[value.id]
        if f.containment:
            self._adopt(o, f.name, child)
        if f.opposite:
            opp = self._feature(child.cls, f.opposite)
            if not isinstance(opp, Reference):
                return
            me = Ref(o.id)
            if opp.many:
                cur = _as_list(child.slots.get(opp.name, ABSENT))
                if me not in cur:
                    child.slots[opp.name] = cur + [me]
            else:
                prev = child.slots.get(opp.name, ABSENT)
                if isinstance(prev, Ref) and prev != me and prev.id in self.objects:
                    self._raw_remove(self.objects[prev.id], f.name, value)
                child.slots[opp.name] = me
            if opp.containment:
                self._adopt(child, opp.name, o)

    def _on_removed(self, o: Obj, f: Feature | None, value: Any) -> None:
        if not isinstance(f, Reference) or not isinstance(value, Ref) or value.id not in self.objects:
            return
        child = self.objects[value.id]
        if f.containment:
            self._reroot(child)
        if f.opposite:
            self._raw_remove(child, f.opposite, Ref(o.id))
            opp = self._feature(child.cls, f.opposite)
            if isinstance(opp, Reference) and opp.containment:
                self._reroot(o)

    def _reroot(self, o: Obj) -> None:
        # an object that lost its last container becomes a root again
        res = self.resource(o.resource)
        if o.id not in res.roots and not self._containers(o.id):
            res.roots.append(o.id)

    def _adopt(self, parent: Obj, feature: str, child: Obj) -> None:
        """``child`` was just placed in ``parent.feature``; drop other parents."""
        me = Ref(child.id)
        for other, name in self._containers(child.id):
            if other.id == parent.id and name == feature:
                continue
            self._raw_remove(other, name, me)
            f = self._feature(other.cls, name)
            if isinstance(f, Reference) and f.opposite:
                self._raw_remove(child, f.opposite, Ref(other.id))
        res = self.resource(child.resource)
        if child.id in res.roots:
            res.roots.remove(child.id)
        self._rehome(child, parent.resource)

    def _rehome(self, o: Obj, resource: str) -> None:
        stack = [o]
        seen = set()
        while stack:
            cur = stack.pop()
            if cur.id in seen:
                continue
            seen.add(cur.id)
            cur.resource = resource
            stack.extend(self.objects[r.id] for r in self.contents(cur.id) if r.id in self.objects)

    # -- containment -------------------------------------------------------

    def _containers(self, oid: str) -> list[tuple[Obj, str]]:
        me = Ref(oid)
        out = []
        for o in self.objects.values():
            for name, v in o.slots.items():
                f = self._feature(o.cls, name)
                if isinstance(f, Reference) and f.containment and me in _as_list(v):
                    out.append((o, name))
        return out

    def container_of(self, obj: str | Ref) -> tuple[Ref, str] | None:
        """``(container, feature)`` holding ``obj``, or None for roots."""
        hits = self._containers(_oid(obj))
        if not hits:
            return None
        o, name = min(hits, key=lambda h: (id_key(h[0].id), h[1]))
        return Ref(o.id), name

    def contents(self, obj: str | Ref) -> list[Ref]:
        """Objects held directly in containment slots of ``obj``."""
        o = self.obj(obj)
        out = []
        for name, v in o.slots.items():
            f = self._feature(o.cls, name)
            if isinstance(f, Reference) and f.containment:
                out.extend(r for r in _as_list(v) if isinstance(r, Ref))
        return out

    # -- deletion / navigation --------------------------------------------

    def delete_instance(self, obj: str | Ref) -> None:
        """Delete ``obj`` and everything it transitively contains.

        Every reference to a deleted object elsewhere is cleared.
        """
        root = self.obj(obj)
        doomed: dict[str, Obj] = {}
        stack = [root]
        while stack:
            cur = stack.pop()
            if cur.id in doomed:
                continue
            doomed[cur.id] = cur
            stack.extend(self.objects[r.id] for r in self.contents(cur.id) if r.id in self.objects)
        for oid, o in doomed.items():
            del self.objects[oid]
            res = self.resources.get(o.resource)
            if res is not None and oid in res.roots:
                res.roots.remove(oid)
        for o in self.objects.values():
            for name in list(o.slots):
                v = o.slots[name]
                if isinstance(v, list):
                    kept = [x for x in v if not (isinstance(x, Ref) and x.id in doomed)]
                    if len(kept) != len(v):
                        self._store(o, name, kept)
                elif isinstance(v, Ref) and v.id in doomed:
                    del o.slots[name]

    def _split_feature(self, feature: str) -> tuple[str, str]:
        cls, _, name = feature.partition(".")
        if not name:
            raise NotFound(feature)
        if self.metamodel is not None:
            f = self._feature(cls, name)
            if not isinstance(f, Reference):
                raise NotFound(feature, name if self.metamodel.find_class(cls) else cls)
        return cls, name

    def get_inverse(self, obj: str | Ref, feature: str) -> list[Ref]:
        """Objects whose ``Class.feature`` slot contains ``obj``, in id order."""
        me = Ref(self.obj(obj).id)
        cls, name = self._split_feature(feature)
        return [r for r in self.all_instances(cls) if me in _as_list(self.objects[r.id].slots.get(name, ABSENT))]

    def all_instances(self, cls: str, include_subtypes: bool = True) -> list[Ref]:
        if self.metamodel is not None and self.metamodel.find_class(cls) is None:
            raise UnknownClass(cls)
        out = []
        for o in self.iter_objects():
            if o.cls == cls:
                out.append(Ref(o.id))
            elif include_subtypes and self.metamodel is not None and cls in supertypes(self.metamodel, o.cls):
                out.append(Ref(o.id))
        return out

    def retype(self, obj: str | Ref, cls: str) -> None:
        self.obj(obj).cls = cls

    # -- snapshots / serialization ----------------------------------------

    def snapshot(self) -> dict:
        return copy.deepcopy(
            {
                "metamodel_name": self.metamodel_name,
                "release": self.release,
                "resources": self.resources,
                "objects": self.objects,
                "_counter": self._counter,
            }
        )

    def restore(self, snap: dict) -> None:
        state = copy.deepcopy(snap)
        self.metamodel_name = state["metamodel_name"]
        self.release = state["release"]
        self.resources = state["resources"]
        self.objects = state["objects"]
        self._counter = state["_counter"]

    def copy(self) -> Repository:
        dup = Repository(self.metamodel_name, self.release)
        dup.metamodel = self.metamodel
        dup.restore(self.snapshot())
        return dup

    def to_json(self) -> dict:
        by_res: dict[str, list[Obj]] = {name: [] for name in self.resources}
        for o in self.iter_objects():
            by_res.setdefault(o.resource, []).append(o)
        return {
            "metamodel": self.metamodel_name,
            "release": self.release,
            "resources": [
                {
                    "name": name,
                    "roots": list(self.resources[name].roots) if name in self.resources else [],
                    "objects": [
                        {
                            "id": o.id,
                            "class": o.cls,
                            "slots": {k: _encode(o.slots[k]) for k in sorted(o.slots)},
                        }
                        for o in objs
                    ],
                }
                for name, objs in by_res.items()
            ],
        }

    @classmethod
    def from_json(cls, data: dict, metamodel: Metamodel | None = None) -> Repository:
        try:
            repo = cls(data["metamodel"], int(data.get("release", 0)))
            repo.metamodel = metamodel
            for res in data["resources"]:
                repo.resources[res["name"]] = Resource(res["name"], list(res.get("roots", [])))
                for o in res.get("objects", []):
                    if o["id"] in repo.objects:
                        raise ParseError(f"duplicate object id {o['id']!r}")
                    repo.objects[o["id"]] = Obj(
                        o["id"],
                        o["class"],
                        res["name"],
                        {k: _decode(v) for k, v in o.get("slots", {}).items()},
                    )
        except (KeyError, TypeError, AttributeError) as exc:
            raise ParseError(f"malformed model JSON: {exc!r}") from exc
        numbers = [int(oid[1:]) for oid in repo.objects if oid[:1] == "o" and oid[1:].isdigit()]
        repo._counter = max(numbers, default=0)
        return repo


def _encode(v: Any) -> Any:
    if isinstance(v, list):
        return [_encode(x) for x in v]
    if isinstance(v, Ref):
        return {"ref": v.id}
    return v


def _decode(v: Any) -> Any:
    if isinstance(v, list):
        return [_decode(x) for x in v]
    if isinstance(v, dict):
        if set(v) != {"ref"}:
            raise ParseError(f"unexpected slot value {v!r}")
        return Ref(v["ref"])
    return v


def reachable(
    repo: Repository,
    start: str | Ref,
    edge: str,
    src: str,
    trg: str,
    min_len: int = 1,
) -> set[str]:
    """Node ids reachable from ``start`` by a directed walk of length >= ``min_len``.

    Edges are objects of class ``edge`` whose ``src``/``trg`` slots are both
    set; outgoing edges are found by inverse navigation of ``edge.src``.
    """
    if min_len < 1:
        raise ValueError("min_len must be positive")
    repo.obj(start)

    @functools.lru_cache(maxsize=None)
    def succ(n: str) -> set[str]:
        out = set()
        for e in repo.get_inverse(n, f"{edge}.{src}"):
            t = repo.get_slot(e, trg)
            if isinstance(t, Ref) and t.id in repo.objects:
                out.add(t.id)
        return out

    frontier = {_oid(start)}
    for _ in range(min_len):
        frontier = set().union(*(succ(n) for n in frontier)) if frontier else set()
    seen = set(frontier)
    todo = list(frontier)
    while todo:
        for m in succ(todo.pop()):
            if m not in seen:
                seen.add(m)
                todo.append(m)
    return seen


def _type_ok(mm: Metamodel, attr: Attribute, v: Any) -> bool:
    t = attr.type
    if t == "String":
        return isinstance(v, str)
    if t == "Int":
        return isinstance(v, int) and not isinstance(v, bool)
    if t == "Bool":
        return isinstance(v, bool)
    if t == "Float":
        return isinstance(v, (int, float)) and not isinstance(v, bool)
    e = mm.find_enum(t)
    return e is not None and isinstance(v, str) and v in e.literals


def check_conformance(repo: Repository, mm: Metamodel) -> list[Violation]:
    """All conformance violations of ``repo`` against ``mm`` (empty iff conforming)."""
    out: list[Violation] = []
    parents: dict[str, list[str]] = {}

    def bad(element: str, kind: str, message: str) -> None:
        out.append(Violation(element, kind, message))

    for o in repo.iter_objects():
        c = mm.find_class(o.cls)
        if c is None:
            bad(o.id, UNKNOWN_CLASS, f"class {o.cls!r} is not in metamodel {mm.name!r}")
            continue
        if c.abstract:
            bad(o.id, ABSTRACT_INSTANCE, f"{o.cls} is abstract")
        feats = {f.name: f for _, f in all_features(mm, o.cls)}
        for name in sorted(o.slots):
            if name not in feats:
                bad(f"{o.id}.{name}", UNKNOWN_FEATURE, f"{o.cls} has no feature {name!r}")
        for name, f in feats.items():
            where = f"{o.id}.{name}"
            raw = o.slots.get(name, ABSENT)
            if raw is not ABSENT and isinstance(raw, list) != f.many:
                shape = "a list" if f.many else "a single value"
                bad(where, TYPE_MISMATCH, f"expected {shape}")
            values = _as_list(raw)
            upper_ok = f.upper < 0 or len(values) <= f.upper
            if len(values) < f.lower or not upper_ok:
                bad(where, MULTIPLICITY, f"{len(values)} value(s) outside {f.lower}..{f.upper if f.upper >= 0 else '*'}")
            for v in values:
                if isinstance(f, Attribute):
                    if not _type_ok(mm, f, v):
                        bad(where, TYPE_MISMATCH, f"{v!r} is not a {f.type}")
                    continue
                if not isinstance(v, Ref):
                    bad(where, TYPE_MISMATCH, f"{v!r} is not a reference")
                    continue
                target = repo.objects.get(v.id)
                if target is None:
                    bad(where, DANGLING_REF, f"{v.id!r} does not exist")
                    continue
                if mm.find_class(target.cls) is None or f.target not in supertypes(mm, target.cls):
                    bad(where, TYPE_MISMATCH, f"{v.id} is a {target.cls}, not a {f.target}")
                if f.containment:
                    parents.setdefault(v.id, []).append(o.id)

    roots: dict[str, int] = {}
    for res in repo.resources.values():
        for oid in res.roots:
            if oid not in repo.objects:
                bad(res.name, DANGLING_REF, f"root {oid!r} does not exist")
            roots[oid] = roots.get(oid, 0) + 1
    for o in repo.iter_objects():
        n = len(parents.get(o.id, ())) + roots.get(o.id, 0)
        if n > 1:
            bad(o.id, MULTI_CONTAINER, f"object has {n} containers/root entries")
        elif n == 0:
            bad(o.id, ORPHAN, "object is neither a root nor contained")
        elif o.id in parents:
            seen = {o.id}
            cur = parents[o.id][0]
            while cur in parents and len(parents[cur]) == 1 and cur not in seen:
                seen.add(cur)
                cur = parents[cur][0]
            if cur in seen or cur == o.id:
                bad(o.id, CONTAINMENT_CYCLE, "object transitively contains itself")
    return out


__all__ = [
    "ABSENT",
    "Mode",
    "Obj",
    "Ref",
    "RemoveAbsentWarning",
    "Repository",
    "Resource",
    "check_conformance",
    "id_key",
    "reachable",
]
