from __future__ import annotations

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from coevo.canonical import dumps
from coevo.engine import HookRegistry, MigrationContext, default_migration, migrate, run_transaction, store_result
from coevo.errors import DuplicateHook, NonconformingInput, UnknownClass, UnknownHook
from coevo.helloworld import HOOKS, fixtures
from coevo.history import CompositeChange, PrimitiveChange, create_history
from coevo.model import ABSENT, Ref, Repository, check_conformance


def canon(repo) -> str:
    return dumps(repo.to_json())


def hook_history(mm, name):
    h = create_history(mm)
    h.release()
    h.record(CompositeChange([], name))
    h.release()
    return h


# --- transactions ------------------------------------------------------------------


def test_identity_body_commits(g_a, graph1):
    result = run_transaction(g_a, graph1, graph1, lambda ctx: None)
    assert result.committed and result.violations == []


def test_dropping_optional_slots_commits(g_a, graph1):
    def body(ctx):
        for n in ctx.all_instances("Node"):
            ctx.write_slot(n, "name", "unset")

    assert run_transaction(g_a, graph1, graph1, body).committed
    assert g_a.get_slot("n1", "name") is ABSENT


def test_type_error_rolls_back(g_a, graph1):
    before = canon(g_a)
    result = run_transaction(g_a, graph1, graph1, lambda ctx: ctx.set("e1", "src", "n2"))
    assert not result.committed
    assert [v.kind for v in result.violations] == ["TYPE_MISMATCH"]
    assert canon(g_a) == before


def test_exception_rolls_back(g_a, graph1):
    before = canon(g_a)

    def body(ctx):
        ctx.delete_instance("n1")
        raise RuntimeError("boom")

    result = run_transaction(g_a, graph1, graph1, body)
    assert not result.committed
    assert "boom" in result.error
    assert canon(g_a) == before


def test_intermediate_states_may_be_nonconforming(g_a, graph1):
    def body(ctx):
        ctx.set("e1", "src", "not a ref")
        ctx.set("e1", "src", Ref("n4"))

    assert run_transaction(g_a, graph1, graph1, body).committed


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000))
def test_transactions_commit_clean_or_restore_exactly(seed):
    rng = random.Random(seed)
    nodes, edges = oracles.random_graph(rng, max_nodes=5, max_edges=6)
    graph1 = fixtures.metamodel("graph1")
    repo = Repository.from_json(oracles.graph_json(nodes, edges), graph1)
    before = canon(repo)

    def body(ctx):
        for _ in range(rng.randint(0, 5)):
            choice = rng.randrange(5)
            objs = [o.id for o in repo.iter_objects()]
            if choice == 0 and objs:
                ctx.delete_instance(rng.choice(objs))
            elif choice == 1:
                ctx.new_instance("graph", rng.choice(["Node", "Edge", "Graph"]))
            elif choice == 2 and objs:
                repo.obj(rng.choice(objs)).slots["name"] = rng.choice(["x", 3])
            elif choice == 3 and objs:
                repo.obj(rng.choice(objs)).slots["src"] = Ref(rng.choice(objs + ["ghost"]))
            elif choice == 4:
                raise ValueError("fault")

    result = run_transaction(repo, graph1, graph1, body)
    if result.committed:
        assert check_conformance(repo, graph1) == []
    else:
        assert canon(repo) == before


# --- hooks and context ---------------------------------------------------------------


def test_hook_registry():
    reg = HookRegistry()

    @reg.register("A")
    def a(repo, before, after, ctx):
        pass

    assert reg.get("A") is a
    assert "A" in reg and reg.names() == ["A"]
    with pytest.raises(DuplicateHook):
        reg.register("A", a)
    with pytest.raises(UnknownHook):
        reg.get("B")


def test_unknown_hook_fails_before_any_mutation(g_a):
    h = hook_history(fixtures.metamodel("graph1"), "Missing")
    before = canon(g_a)
    with pytest.raises(UnknownHook):
        migrate(g_a, h, 0, 1, HookRegistry())
    assert canon(g_a) == before


def test_store_result():
    mm = fixtures.with_result_classes(fixtures.metamodel("graph1"))
    repo = Repository(mm)
    first = store_result(repo, "result", "IntResult", {"value": 4})
    second = store_result(repo, "result", "IntResult", {"value": 5})
    assert repo.resources["result"].roots == [first.id, second.id]
    assert repo.get_slot(first, "value") == 4
    assert check_conformance(repo, mm) == []
    with pytest.raises(UnknownClass):
        store_result(repo, "result", "FloatResult", {})


def test_context_helpers(g_a, graph1):
    ctx = MigrationContext(g_a, graph1, graph1)
    assert ctx.get_reachable("n1") == {"n1", "n2", "n3"}
    assert ctx.get_reachable("n1", min_len=2) == {"n1", "n2", "n3"}
    assert ctx.get_reachable("n4") == set()
    assert [r.id for r in ctx.get_inverse("n2", "Edge.trg")] == ["e1", "e4"]
    ctx.warn("note")
    assert ctx.warnings == ["note"]


def test_reachability_matches_walk_enumeration(g_a, g_a_json):
    nodes, edges = oracles.edges_of(g_a_json)
    rel = oracles.full_edges(edges)
    ctx = MigrationContext(g_a, g_a.metamodel, g_a.metamodel)
    for n in nodes:
        for k in (1, 2, 3):
            assert ctx.get_reachable(n, min_len=k) == oracles.reachable_by_paths(rel, nodes, n, k)
    with pytest.raises(ValueError):
        ctx.get_reachable("n1", min_len=0)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 3))
def test_reachability_on_random_graphs(seed, k):
    nodes, edges = oracles.random_graph(random.Random(seed), max_nodes=7, max_edges=12)
    repo = Repository.from_json(oracles.graph_json(nodes, edges), fixtures.metamodel("graph1"))
    ctx = MigrationContext(repo, repo.metamodel, repo.metamodel)
    rel = oracles.full_edges(edges)
    for n in nodes:
        assert ctx.get_reachable(n, min_len=k) == oracles.reachable_by_paths(rel, nodes, n, k)


# --- migrate -------------------------------------------------------------------------


def test_migrate_same_release_is_identity(g_a):
    h = fixtures.history("hist_simple")
    before = canon(g_a)
    report = migrate(g_a, h, 0, 0, HOOKS)
    assert report.ok and report.steps == [] and report.final_release == 0
    assert canon(g_a) == before


def test_migrate_rejects_bad_ranges(g_a):
    h = fixtures.history("hist_simple")
    for a, b in [(1, 0), (-1, 1), (0, 9)]:
        with pytest.raises(ValueError):
            migrate(g_a, h, a, b, HOOKS)


def test_nonconforming_input_is_refused(g_a):
    g_a.obj("n1").slots["text"] = "x"
    with pytest.raises(NonconformingInput):
        migrate(g_a, fixtures.history("hist_simple"), 0, 1, HOOKS)


def test_report_json_shape(g_a):
    report = migrate(g_a, fixtures.history("hist_topology"), 0, 1, HOOKS)
    data = report.to_json()
    assert list(data) == ["status", "finalRelease", "steps"]
    assert data["status"] == "OK"
    assert [s["change"] for s in data["steps"]] == ["r1.c0", "r1.c1"]
    assert data["steps"][0]["description"] == "ClassToAssociation"
    assert len(data["steps"][0]["warnings"]) == 1


def test_rollback_stops_run_and_restores_input(g_a):
    reg = HookRegistry()
    reg.register("Break", lambda repo, before, after, ctx: ctx.set("n1", "name", 7))
    h = create_history(fixtures.metamodel("graph1"))
    h.release()
    h.apply("Rename", element="Node.name", newName="label")
    h.record(CompositeChange([], "Break"))
    h.apply("Rename", element="Graph", newName="G")
    h.release()
    before = canon(g_a)
    report = migrate(g_a, h, 0, 1, reg)
    assert not report.ok
    assert [s.status for s in report.steps] == ["OK", "ROLLED_BACK"]
    assert report.final_release == 0
    assert canon(g_a) == before


def test_migrate_is_deterministic():
    outs = []
    for _ in range(2):
        repo = fixtures.model("g_a")
        report = migrate(repo, fixtures.history("hist_simple"), 0, 1, HOOKS)
        outs.append((canon(repo), dumps(report.to_json())))
    assert outs[0] == outs[1]


@pytest.mark.parametrize("name", ["hist_simple", "hist_topology"])
def test_committed_migration_conforms_to_reconstructed_release(g_a, name):
    h = fixtures.history(name)
    assert migrate(g_a, h, 0, 1, HOOKS).ok
    assert check_conformance(g_a, h.reconstruct(1)) == []
    assert g_a.release == 1


# --- default migrations ------------------------------------------------------------------


def test_default_delete_feature_drops_slots(g_a, graph1):
    default_migration(g_a, graph1, PrimitiveChange("DELETE_FEATURE", "Node.name"))
    assert all("name" not in g_a.obj(n).slots for n in ("n1", "n2", "n3", "n4"))


def test_default_delete_containment_feature_cascades(g_a, graph1):
    default_migration(g_a, graph1, PrimitiveChange("DELETE_FEATURE", "Graph.edges"))
    assert g_a.all_instances("Edge") == []


def test_default_delete_class(g_a, graph1):
    h = create_history(graph1)
    h.release()
    h.record(PrimitiveChange("DELETE_FEATURE", "Graph.edges"))
    h.record(PrimitiveChange("DELETE_CLASS", "Edge"))
    h.release()
    report = migrate(g_a, h, 0, 1)
    assert report.ok
    assert [o.cls for o in g_a.iter_objects()] == ["Graph", "Node", "Node", "Node", "Node"]


def test_composite_children_then_hook(g_a, graph1):
    seen = []

    def hook(repo, before, after, ctx):
        seen.append(repo.get_slot("n1", "label"))
        for n in ctx.all_instances("Node"):
            ctx.set(n, "weight", 1)

    reg = HookRegistry()
    reg.register("Fill", hook)
    h = create_history(graph1)
    h.release()
    h.record(PrimitiveChange("RENAME", "Node.name", {"newName": "label"}))
    h.record(PrimitiveChange("CREATE_ATTRIBUTE", "Node.weight", {"type": "Int", "lower": 1, "upper": 1}))
    h.attach_migration(1, (0, 2), "Fill")
    h.release()
    report = migrate(g_a, h, 0, 1, reg)
    assert report.ok, report.to_json()
    assert seen == ["n1"]
    assert g_a.get_slot("n4", "weight") == 1


def test_mandatory_attribute_without_hook_rolls_back(g_a, graph1):
    h = create_history(graph1)
    h.release()
    h.record(PrimitiveChange("CREATE_ATTRIBUTE", "Node.weight", {"type": "Int", "lower": 1, "upper": 1}))
    h.release()
    report = migrate(g_a, h, 0, 1)
    assert not report.ok
    assert {v.kind for v in report.steps[0].violations} == {"MULTIPLICITY"}
