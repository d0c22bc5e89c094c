"""Transactional migrator replaying a history over a repository."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Callable

from .errors import DuplicateHook, NonconformingInput, UnknownClass, UnknownHook
from .history import (
    Change,
    CompositeChange,
    History,
    OperationApplication,
    PrimitiveChange,
    apply_change,
    describe,
)
from .metamodel import Metamodel, Reference, Violation, subclasses
from .model import ABSENT, Mode, Ref, Repository, check_conformance, reachable
from .operations import get_operation, rename_migration

log = logging.getLogger(__name__)

OK = "OK"
ROLLED_BACK = "ROLLED_BACK"

Hook = Callable[[Repository, Metamodel, Metamodel, "MigrationContext"], None]


class HookRegistry:
    """Custom migrations addressable by name from a history."""

    def __init__(self) -> None:
        self._hooks: dict[str, Hook] = {}

    def register(self, name: str, body: Hook | None = None):
        if body is None:
            return lambda fn: self.register(name, fn)
        if name in self._hooks:
            raise DuplicateHook(f"custom migration {name!r} is already registered")
        self._hooks[name] = body
        return body

    def get(self, name: str) -> Hook:
        try:
            return self._hooks[name]
        except KeyError:
            raise UnknownHook(name) from None

    def __contains__(self, name: str) -> bool:
        return name in self._hooks

    def names(self) -> list[str]:
        return list(self._hooks)


@dataclass
class MigrationContext:
    """Helpers handed to migration bodies; conformance is not checked until commit."""

    repo: Repository
    before: Metamodel
    after: Metamodel
    options: dict[str, Any] = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)

    def warn(self, message: str) -> None:
        log.info(message)
        self.warnings.append(message)

    def all_instances(self, cls: str, include_subtypes: bool = True) -> list[Ref]:
        return self.repo.all_instances(cls, include_subtypes)

    def get_slot(self, obj, feature: str) -> Any:
        return self.repo.get_slot(obj, feature)

    def write_slot(self, obj, feature: str, mode: Mode | str, value: Any = ABSENT) -> None:
        self.repo.write_slot(obj, feature, mode, value)

    def set(self, obj, feature: str, value: Any) -> None:
        self.repo.write_slot(obj, feature, Mode.SET, value)

    def new_instance(self, resource: str, cls: str) -> Ref:
        return self.repo.new_instance(resource, cls)

    def delete_instance(self, obj) -> None:
        self.repo.delete_instance(obj)

    def get_inverse(self, obj, feature: str) -> list[Ref]:
        return self.repo.get_inverse(obj, feature)

    def get_reachable(self, node, min_len: int = 1, edge: str = "Edge", src: str = "src", trg: str = "trg") -> set[str]:
        return reachable(self.repo, node, edge, src, trg, min_len)

    def store_result(self, resource: str, cls: str, slots: dict[str, Any] | None = None) -> Ref:
        return store_result(self.repo, resource, cls, slots or {})


def store_result(repo: Repository, resource: str, cls: str, slots: dict[str, Any]) -> Ref:
    """Create a root object of ``cls`` in ``resource`` with the given slots."""
    if repo.metamodel is None or repo.metamodel.find_class(cls) is None:
        raise UnknownClass(cls)
    ref = repo.new_instance(resource, cls)
    for name, value in slots.items():
        repo.write_slot(ref, name, Mode.SET, value)
    return ref


@dataclass
class TransactionResult:
    committed: bool
    violations: list[Violation] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)
    error: str | None = None


def run_transaction(
    repo: Repository,
    before: Metamodel,
    after: Metamodel,
    body: Callable[[MigrationContext], None],
    options: dict[str, Any] | None = None,
) -> TransactionResult:
    """Run ``body`` with conformance suspended, then commit or fully restore.

    Commit requires zero conformance violations against ``after``. On
    rollback the repository is put back exactly as it was.
    """
    snap = repo.snapshot()
    saved_mm = repo.metamodel
    repo.metamodel = after
    ctx = MigrationContext(repo, before, after, dict(options or {}))
    try:
        body(ctx)
    except Exception as exc:  # any failure inside a migration aborts the operation
        log.debug("migration body failed", exc_info=True)
        repo.restore(snap)
        repo.metamodel = saved_mm
        return TransactionResult(False, [], ctx.warnings, f"{type(exc).__name__}: {exc}")
    violations = check_conformance(repo, after)
    if violations:
        repo.restore(snap)
        repo.metamodel = saved_mm
        return TransactionResult(False, violations, ctx.warnings)
    return TransactionResult(True, [], ctx.warnings)


def default_migration(repo: Repository, before: Metamodel, change: PrimitiveChange) -> None:
    """Model side of a bare primitive change."""
    kind, target = change.kind, change.target
    head, _, tail = target.partition(".")
    if kind == "RENAME":
        rename_migration(repo, before, target, change.arguments["newName"])
    elif kind == "DELETE_CLASS":
        for o in list(repo.iter_objects()):
            if o.cls == head and o.id in repo.objects:
                repo.delete_instance(o.id)
    elif kind == "DELETE_FEATURE":
        feature = before.get_class(head).feature(tail)
        names = {head, *subclasses(before, head)}
        for o in list(repo.iter_objects()):
            if o.id not in repo.objects or o.cls not in names or tail not in o.slots:
                continue
            value = o.slots.pop(tail)
            if isinstance(feature, Reference) and feature.containment:
                for r in value if isinstance(value, list) else [value]:
                    if isinstance(r, Ref) and r.id in repo.objects:
                        repo.delete_instance(r)


@dataclass
class Step:
    change: str
    description: str
    status: str
    warnings: list[str] = field(default_factory=list)
    violations: list[Violation] = field(default_factory=list)
    error: str | None = None

    def to_json(self) -> dict:
        return {
            "change": self.change,
            "description": self.description,
            "status": self.status,
            "warnings": list(self.warnings),
            "violations": [v.to_json() for v in self.violations],
            "error": self.error,
        }


@dataclass
class MigrationReport:
    steps: list[Step]
    final_release: int

    @property
    def ok(self) -> bool:
        return all(s.status == OK for s in self.steps)

    @property
    def warnings(self) -> list[str]:
        return [w for s in self.steps for w in s.warnings]

    def to_json(self) -> dict:
        return {
            "status": OK if self.ok else ROLLED_BACK,
            "finalRelease": self.final_release,
            "steps": [s.to_json() for s in self.steps],
        }


def _body_for(change: Change, hooks: HookRegistry):
    if isinstance(change, PrimitiveChange):
        return lambda ctx: default_migration(ctx.repo, ctx.before, change)
    if isinstance(change, OperationApplication):
        op = get_operation(change.operation)
        args = op.bind(change.arguments)
        return lambda ctx: op.migrate(ctx.repo, ctx.before, ctx.after, args, ctx.warn)

    hook = hooks.get(change.migration) if change.migration else None

    def composite(ctx: MigrationContext) -> None:
        mm = ctx.before
        for child in change.children:
            nxt = apply_change(mm, child)
            default_migration(ctx.repo, mm, child)
            mm = nxt
        if hook is not None:
            hook(ctx.repo, ctx.before, ctx.after, ctx)

    return composite


def migrate(
    repo: Repository,
    history: History,
    from_release: int,
    to_release: int,
    hooks: HookRegistry | None = None,
    options: dict[str, Any] | None = None,
) -> MigrationReport:
    """Replay releases ``(from_release, to_release]`` of ``history`` over ``repo``.

    Each change runs as one transaction. The first rollback stops the run
    and restores ``repo`` to its input state.
    """
    if not 0 <= from_release <= to_release <= history.last_index:
        raise ValueError(f"bad release range {from_release}..{to_release} (history has 0..{history.last_index})")
    hooks = hooks or HookRegistry()
    mm = history.reconstruct(from_release)
    problems = check_conformance(repo, mm)
    if problems:
        raise NonconformingInput(f"model does not conform to release {from_release}", problems)
    changes = history.changes_between(from_release, to_release)
    bodies = [(ref, change, _body_for(change, hooks)) for ref, change in changes]

    snap = repo.snapshot()
    saved_mm = repo.metamodel
    repo.metamodel = mm
    steps: list[Step] = []
    for ref, change, body in bodies:
        after = apply_change(mm, change)
        result = run_transaction(repo, mm, after, body, options)
        status = OK if result.committed else ROLLED_BACK
        steps.append(Step(ref, describe(change), status, result.warnings, result.violations, result.error))
        if not result.committed:
            repo.restore(snap)
            repo.metamodel = saved_mm
            return MigrationReport(steps, from_release)
        mm = after
    repo.metamodel = mm
    repo.metamodel_name = history.metamodel_name
    repo.release = to_release
    return MigrationReport(steps, to_release)


__all__ = [
    "HookRegistry",
    "MigrationContext",
    "MigrationReport",
    "Step",
    "TransactionResult",
    "default_migration",
    "migrate",
    "run_transaction",
    "store_result",
]
