"""Fixture metamodels, models and histories for the hello world tasks."""

from __future__ import annotations

import json
import os
from pathlib import Path

from ..errors import ParseError
from ..history import CompositeChange, History, create_history
from ..metamodel import Metamodel
from ..model import Repository

METAMODELS = {
    "graph1": "graph1.metamodel.json",
    "graph_evolved": "graph_evolved.metamodel.json",
    "graph2": "graph2.metamodel.json",
    "result": "result.metamodel.json",
    "shapes": "shapes.metamodel.json",
}
MODELS = {"g_a": "g_a.model.json"}
HISTORIES = {"hist_simple": "hist_simple.history.json", "hist_topology": "hist_topology.history.json"}


def fixtures_dir() -> Path:
    """Directory holding fixture files; ``COEVO_FIXTURES`` overrides it."""
    override = os.environ.get("COEVO_FIXTURES")
    if override:
        return Path(override)
    return Path(__file__).resolve().parent.parent / "fixtures"


def _load(filename: str) -> dict:
    path = fixtures_dir() / filename
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from exc


def metamodel(name: str) -> Metamodel:
    return Metamodel.from_json(_load(METAMODELS[name]))


def model(name: str = "g_a", mm: Metamodel | None = None) -> Repository:
    return Repository.from_json(_load(MODELS[name]), mm if mm is not None else metamodel("graph1"))


def history(name: str) -> History:
    return History.from_json(_load(HISTORIES[name]))


def with_result_classes(mm: Metamodel) -> Metamodel:
    """``mm`` plus the classes and enumerations of the result metamodel."""
    out = mm.copy()
    extra = metamodel("result")
    out.classes.extend(extra.classes)
    out.enumerations.extend(extra.enumerations)
    return out


def build_simple_history() -> History:
    """Graph1 -> GraphEvolved using reusable operations, then move the result."""
    h = create_history(metamodel("graph1"))
    h.release()
    h.apply("ExtractSuperClass", subClasses=["Node", "Edge"], superName="GraphComponent")
    h.apply("UniteReferences", references=["Graph.nodes", "Graph.edges"], unitedName="gcs")
    h.apply("PullUpFeature", feature="Node.name", superClass="GraphComponent")
    h.apply("Rename", element="GraphComponent.name", newName="text")
    h.record(CompositeChange([], "MoveResult"))
    h.release()
    return h


def build_topology_history() -> History:
    """Graph1 -> Graph2: edges become a ``linksTo`` reference."""
    h = create_history(metamodel("graph1"))
    h.release()
    h.apply("ClassToAssociation", cls="Edge", sourceRef="src", targetRef="trg", newRefName="linksTo")
    h.apply("Rename", element="Node.name", newName="text")
    h.release()
    return h


def task_history(hook: str) -> History:
    """Graph1 plus result classes, then one empty adaptation carrying ``hook``."""
    h = create_history(with_result_classes(metamodel("graph1")))
    h.release()
    h.record(CompositeChange([], hook))
    h.release()
    return h
