"""The hello world tasks as custom migrations and reusable-operation histories."""

from __future__ import annotations

import functools
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from ..canonical import write_atomic
from ..engine import HookRegistry, MigrationContext, MigrationReport, migrate
from ..errors import UnknownResource
from ..model import Ref, Repository
from . import fixtures
from .graph import (
    count_circles,
    count_dangling_edges,
    count_isolated_nodes,
    count_looping_edges,
    count_nodes,
    transitive_pairs,
)

RESULT = "result"
HELLO_WORLD = "Hello World"
HELLO = "Hello"
PARTICIPANTS = "TTC Participants"
HELLO_TEXT = "Hello World!"

HOOKS = HookRegistry()


def _result_resource(ctx: MigrationContext) -> str:
    return ctx.options.get("result_resource", RESULT)


@HOOKS.register("ConstantTransformation")
def constant_transformation_hook(repo, before, after, ctx):
    ctx.store_result(_result_resource(ctx), "Greeting", {"text": HELLO_WORLD})


@HOOKS.register("ConstantTransformationReferences")
def constant_transformation_references_hook(repo, before, after, ctx):
    res = _result_resource(ctx)
    greeting = ctx.store_result(res, "Greeting")
    message = ctx.new_instance(res, "GreetingMessage")
    ctx.set(message, "text", HELLO)
    person = ctx.new_instance(res, "Person")
    ctx.set(person, "name", PARTICIPANTS)
    ctx.set(greeting, "message", message)
    ctx.set(greeting, "person", person)


@HOOKS.register("ModelToTextTransformation")
def model_to_text_hook(repo, before, after, ctx):
    ctx.store_result(_result_resource(ctx), "StringResult", {"value": HELLO_TEXT})


def _counter(fn):
    def hook(repo, before, after, ctx):
        ctx.store_result(_result_resource(ctx), "IntResult", {"value": fn(repo)})

    hook.__name__ = f"{fn.__name__}_hook"
    return hook


HOOKS.register("CountNodes", _counter(count_nodes))
HOOKS.register("CountLoopingEdges", _counter(count_looping_edges))
HOOKS.register("CountIsolatedNodes", _counter(count_isolated_nodes))
HOOKS.register("CountCircles", _counter(count_circles))
HOOKS.register("CountDanglingEdges", _counter(count_dangling_edges))


@HOOKS.register("ReverseEdges")
def reverse_edges_hook(repo, before, after, ctx):
    for e in ctx.all_instances("Edge"):
        src, trg = ctx.get_slot(e, "src"), ctx.get_slot(e, "trg")
        ctx.set(e, "src", trg)
        ctx.set(e, "trg", src)


@HOOKS.register("DeleteNodeWithName")
def delete_node_with_name_hook(repo, before, after, ctx):
    name = ctx.options.get("name", "n1")
    for node in ctx.all_instances("Node"):
        if node not in repo or ctx.get_slot(node, "name") != name:
            continue
        incident = ctx.get_inverse(node, "Edge.src") + ctx.get_inverse(node, "Edge.trg")
        for e in dict.fromkeys(incident):
            if e in repo:
                ctx.delete_instance(e)
        ctx.delete_instance(node)


@HOOKS.register("InsertTransitiveEdges")
def insert_transitive_edges_hook(repo, before, after, ctx):
    # pairs are computed before any edge is created
    pairs = transitive_pairs(repo)
    for a, c in pairs:
        container = repo.container_of(a)
        resource = repo.obj(a).resource
        edge = ctx.new_instance(resource, "Edge")
        ctx.set(edge, "src", Ref(a))
        ctx.set(edge, "trg", Ref(c))
        if container is not None:
            ctx.write_slot(container[0], "edges", "add", edge)


def move_result(repo: Repository, from_resource: str, to_resource: str) -> None:
    """Re-home every root of ``from_resource`` (and its contents) to ``to_resource``."""
    if from_resource not in repo.resources:
        raise UnknownResource(from_resource)
    if from_resource == to_resource:
        return
    source = repo.resources.pop(from_resource)
    target = repo.resource(to_resource)
    for o in repo.objects.values():
        if o.resource == from_resource:
            o.resource = to_resource
    target.roots.extend(source.roots)


@HOOKS.register("MoveResult")
def move_result_hook(repo, before, after, ctx):
    move_result(repo, ctx.options.get("from_resource", "graph"), ctx.options.get("to_resource", "out"))


@dataclass(frozen=True)
class TaskSpec:
    name: str
    input: str
    output: str
    hook: str | None = None
    history: str | None = None


TASKS: dict[str, TaskSpec] = {
    t.name: t
    for t in (
        TaskSpec("hello", "none", "result", hook="ConstantTransformation"),
        TaskSpec("hello-refs", "none", "result", hook="ConstantTransformationReferences"),
        TaskSpec("hello-text", "none", "text", hook="ModelToTextTransformation"),
        TaskSpec("count-nodes", "graph", "result", hook="CountNodes"),
        TaskSpec("count-looping-edges", "graph", "result", hook="CountLoopingEdges"),
        TaskSpec("count-isolated-nodes", "graph", "result", hook="CountIsolatedNodes"),
        TaskSpec("count-circles", "graph", "result", hook="CountCircles"),
        TaskSpec("count-dangling-edges", "graph", "result", hook="CountDanglingEdges"),
        TaskSpec("reverse-edges", "graph", "model", hook="ReverseEdges"),
        TaskSpec("simple-migration", "graph", "model", history="hist_simple"),
        TaskSpec("topology-migration", "graph", "model", history="hist_topology"),
        TaskSpec("delete-node", "graph", "model", hook="DeleteNodeWithName"),
        TaskSpec("insert-transitive-edges", "graph", "model", hook="InsertTransitiveEdges"),
    )
}


@dataclass
class TaskOutcome:
    task: TaskSpec
    repo: Repository
    report: MigrationReport
    text: str | None = None

    @property
    def ok(self) -> bool:
        return self.report.ok

    def result_values(self, cls: str | None = None) -> list[Any]:
        """``value`` slots of result objects (optionally of one class), in root order."""
        res = self.repo.resources.get(RESULT)
        if res is None:
            return []
        return [
            self.repo.get_slot(r, "value")
            for r in res.roots
            if cls is None or self.repo.class_of(r) == cls
        ]


def empty_graph_repo() -> Repository:
    return Repository(fixtures.metamodel("graph1"))


@functools.lru_cache(maxsize=None)
def _history(spec: TaskSpec, fixtures_dir: str):
    # histories are read-only during migration, so one per task and fixture dir
    if spec.hook is not None:
        return fixtures.task_history(spec.hook)
    return fixtures.history(spec.history)


def run_task(name: str, repo: Repository | None = None, /, **options: Any) -> TaskOutcome:
    """Run task ``name`` in place on ``repo`` (G_A or an empty model by default)."""
    spec = TASKS[name]
    if repo is None:
        repo = empty_graph_repo() if spec.input == "none" else fixtures.model("g_a")
    if spec.input == "none":
        # constant transformations ignore their input
        repo = empty_graph_repo() if len(repo) else repo
    report = migrate(repo, _history(spec, str(fixtures.fixtures_dir())), 0, 1, HOOKS, options)
    text = None
    if spec.output == "text" and report.ok:
        (value,) = TaskOutcome(spec, repo, report).result_values("StringResult")
        text = value + "\n"
    return TaskOutcome(spec, repo, report, text)


def _single_int(outcome: TaskOutcome) -> int:
    if not outcome.ok:
        raise RuntimeError(f"task {outcome.task.name} rolled back")
    (value,) = outcome.result_values("IntResult")
    return value


def task_constant_transformation() -> Repository:
    return run_task("hello").repo


def task_constant_transformation_references() -> Repository:
    return run_task("hello-refs").repo


def task_model_to_text(path: str | Path | None = None) -> str:
    text = run_task("hello-text").text
    if path is not None:
        write_atomic(path, text)
    return text


def task_count_nodes(repo: Repository) -> int:
    return _single_int(run_task("count-nodes", repo))


def task_count_looping_edges(repo: Repository) -> int:
    return _single_int(run_task("count-looping-edges", repo))


def task_count_isolated_nodes(repo: Repository) -> int:
    return _single_int(run_task("count-isolated-nodes", repo))


def task_count_circles(repo: Repository) -> int:
    return _single_int(run_task("count-circles", repo))


def task_count_dangling_edges(repo: Repository) -> int:
    return _single_int(run_task("count-dangling-edges", repo))


def task_reverse_edges(repo: Repository) -> MigrationReport:
    return run_task("reverse-edges", repo).report


def task_simple_migration(repo: Repository, output_resource: str = "out") -> MigrationReport:
    return run_task("simple-migration", repo, to_resource=output_resource).report


def task_topology_migration(repo: Repository) -> MigrationReport:
    return run_task("topology-migration", repo).report


def task_delete_node_with_name(repo: Repository, name: str = "n1") -> MigrationReport:
    return run_task("delete-node", repo, name=name).report


def task_insert_transitive_edges(repo: Repository) -> MigrationReport:
    return run_task("insert-transitive-edges", repo).report


__all__ = [
    "HOOKS",
    "TASKS",
    "TaskOutcome",
    "TaskSpec",
    "move_result",
    "run_task",
]
