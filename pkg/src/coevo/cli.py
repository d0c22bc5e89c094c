"""Command-line front end.

Exit codes: 0 success, 1 validation/conformance failure, 2 constraint
violation or inapplicable change, 3 IO/parse/usage error, 4 migration
rolled back.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Any, Sequence

from .canonical import dumps, write_atomic
from .engine import migrate
from .errors import (
    ArgumentError,
    CoevoError,
    InapplicableChange,
    UnknownOperation,
    ViolationError,
)
from .helloworld import fixtures
from .helloworld.tasks import HOOKS, RESULT, TASKS, run_task
from .history import History, OperationApplication
from .metamodel import Metamodel, validate_metamodel
from .model import Repository, check_conformance
from .operations import Kind, get_operation, list_operations

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_CONSTRAINT = 2
EXIT_USAGE = 3
EXIT_ROLLED_BACK = 4


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        raise UsageError(f"{self.prog}: {message}")


def _resolve(value: str, table: dict[str, str]) -> Path:
    """A path, or a fixture short name such as ``g_a`` or ``graph1``."""
    p = Path(value)
    if p.exists() or value not in table:
        return p
    return fixtures.fixtures_dir() / table[value]


def _read_json(path: Path) -> Any:
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror or exc}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: invalid JSON: {exc}") from exc


def _write(path: str, text: str) -> None:
    try:
        write_atomic(path, text)
    except OSError as exc:
        raise UsageError(f"cannot write {path}: {exc.strerror or exc}") from exc


def _print_violations(violations) -> None:
    for v in violations:
        print(v, file=sys.stderr)


def _pairs(items: Sequence[str] | None) -> dict[str, str]:
    out = {}
    for item in items or ():
        key, sep, value = item.partition("=")
        if not sep or not key:
            raise UsageError(f"--arg expects key=value, got {item!r}")
        out[key] = value
    return out


def _typed_args(op_name: str, raw: dict[str, str]) -> dict[str, Any]:
    op = get_operation(op_name)
    kinds = {p.name: p.kind for p in op.parameters}
    out: dict[str, Any] = {}
    for key, value in raw.items():
        kind = kinds.get(key)
        if kind is Kind.ELEMENT_LIST:
            out[key] = [x for x in value.split(",") if x]
        elif kind is Kind.FLAG:
            if value.lower() not in ("true", "false"):
                raise UsageError(f"{key} expects true or false")
            out[key] = value.lower() == "true"
        else:
            out[key] = value
    return out


def cmd_validate(args) -> int:
    mm = Metamodel.from_json(_read_json(_resolve(args.metamodel, fixtures.METAMODELS)))
    problems = validate_metamodel(mm)
    if problems:
        _print_violations(problems)
        return EXIT_INVALID
    if args.model:
        repo = Repository.from_json(_read_json(_resolve(args.model, fixtures.MODELS)), mm)
        problems = check_conformance(repo, mm)
        if problems:
            _print_violations(problems)
            return EXIT_INVALID
    return EXIT_OK


def cmd_apply(args) -> int:
    if not args.op and not args.release:
        raise UsageError("apply needs --op and/or --release")
    # never resolved to a fixture: this file is rewritten in place
    path = Path(args.history)
    history = History.from_json(_read_json(path))
    if args.op:
        change = OperationApplication(args.op, _typed_args(args.op, _pairs(args.arg)))
        history.record(change)
    if args.release:
        closed = history.release()
        print(f"released {closed}")
    _write(str(path), dumps(history.to_json()))
    return EXIT_OK


def cmd_migrate(args) -> int:
    if args.from_release > args.to_release:
        raise UsageError(f"--from {args.from_release} is after --to {args.to_release}")
    history = History.from_json(_read_json(_resolve(args.history, fixtures.HISTORIES)))
    if args.to_release > history.last_index:
        raise UsageError(f"--to {args.to_release} is beyond the last release {history.last_index}")
    repo = Repository.from_json(_read_json(_resolve(args.model, fixtures.MODELS)))
    report = migrate(repo, history, args.from_release, args.to_release, HOOKS, _pairs(args.arg))
    sys.stdout.write(dumps(report.to_json()))
    if not report.ok:
        for step in report.steps:
            _print_violations(step.violations)
            if step.error:
                print(step.error, file=sys.stderr)
        return EXIT_ROLLED_BACK
    _write(args.out, dumps(repo.to_json()))
    return EXIT_OK


def _result_only(repo: Repository) -> Repository:
    out = Repository("result", 0)
    res = repo.resources.get(RESULT)
    if res is not None:
        out.resources[RESULT] = res
        out.objects = {oid: o for oid, o in repo.objects.items() if o.resource == RESULT}
    return out


def cmd_task(args) -> int:
    spec = TASKS.get(args.task)
    if spec is None:
        print(f"unknown task {args.task!r}; known tasks:", file=sys.stderr)
        for name in TASKS:
            print(f"  {name}", file=sys.stderr)
        return EXIT_USAGE
    repo = None
    if args.model:
        repo = Repository.from_json(_read_json(_resolve(args.model, fixtures.MODELS)), fixtures.metamodel("graph1"))
    outcome = run_task(spec.name, repo, **_pairs(args.arg))
    summary = {"task": spec.name, "output": spec.output, "report": outcome.report.to_json()}
    sys.stdout.write(dumps(summary))
    if not outcome.ok:
        for step in outcome.report.steps:
            _print_violations(step.violations)
        return EXIT_ROLLED_BACK
    if spec.output == "text":
        _write(args.out, outcome.text)
    elif spec.output == "result":
        _write(args.out, dumps(_result_only(outcome.repo).to_json()))
    else:
        _write(args.out, dumps(outcome.repo.to_json()))
    return EXIT_OK


def cmd_list_ops(args) -> int:
    for line in list_operations():
        print(line)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="coevo", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("validate", help="validate a metamodel and optionally a model against it")
    p.add_argument("--metamodel", required=True)
    p.add_argument("--model")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("apply", help="record a reusable operation in a history file")
    p.add_argument("--history", required=True)
    p.add_argument("--op")
    p.add_argument("--arg", action="append", metavar="KEY=VALUE")
    p.add_argument("--release", action="store_true")
    p.set_defaults(func=cmd_apply)

    p = sub.add_parser("migrate", help="migrate a model between two releases of a history")
    p.add_argument("--history", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--from", dest="from_release", type=int, required=True)
    p.add_argument("--to", dest="to_release", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--arg", action="append", metavar="KEY=VALUE", help="option passed to custom migrations")
    p.set_defaults(func=cmd_migrate)

    p = sub.add_parser("task", help="run one of the hello world tasks")
    p.add_argument("--task", required=True)
    p.add_argument("--model")
    p.add_argument("--out", required=True)
    p.add_argument("--arg", action="append", metavar="KEY=VALUE")
    p.set_defaults(func=cmd_task)

    p = sub.add_parser("list-ops", help="list the reusable coupled operations")
    p.set_defaults(func=cmd_list_ops)
    return parser


def _report_error(exc: Exception) -> None:
    violations = getattr(exc, "violations", None)
    if violations:
        _print_violations(violations)
    else:
        print(exc, file=sys.stderr)


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except (InapplicableChange, ArgumentError, UnknownOperation) as exc:
        _report_error(exc)
        return EXIT_CONSTRAINT
    except ViolationError as exc:
        # invalid metamodel, nonconforming input, refused release
        _report_error(exc)
        return EXIT_INVALID
    except CoevoError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    raise SystemExit(main())
