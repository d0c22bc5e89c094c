"""Acceptance suite: one test (or group) per criterion, summarised after the run."""

from __future__ import annotations

import json
import os
import random
import shutil
import subprocess
import sys

import pytest

import oracles
from coevo import cli
from coevo.canonical import dumps
from coevo.engine import HookRegistry, migrate
from coevo.errors import InapplicableChange
from coevo.helloworld import HOOKS, fixtures, run_task
from coevo.history import History, create_history
from coevo.metamodel import Metamodel, qualified_names
from coevo.model import Obj, Ref, Repository, check_conformance
from coevo.operations import REGISTRY, Kind, check_applicability

N_RANDOM_GRAPHS = 200


def canon(repo: Repository) -> str:
    return dumps(repo.to_json())


def random_graphs(seed: int, n: int = N_RANDOM_GRAPHS):
    rng = random.Random(seed)
    return [oracles.random_graph(rng) for _ in range(n)]


def load_graph(nodes, edges) -> Repository:
    return Repository.from_json(oracles.graph_json(nodes, edges), fixtures.metamodel("graph1"))


# --- 1 -----------------------------------------------------------------------

C1 = "recorded simple-migration history reconstructs GraphEvolved; G_A migrates"


@pytest.mark.criterion(1, C1)
def test_simple_history_reconstructs_graph_evolved():
    h = fixtures.build_simple_history()
    assert dumps(h.reconstruct(1).to_json()) == dumps(fixtures.metamodel("graph_evolved").to_json())
    # the shipped history file is the same recording
    assert dumps(h.to_json()) == dumps(fixtures.history("hist_simple").to_json())


@pytest.mark.criterion(1, C1)
def test_simple_migration_of_g_a(g_a):
    h = fixtures.build_simple_history()
    report = migrate(g_a, h, 0, 1, HOOKS)
    assert report.ok and report.final_release == 1
    evolved = fixtures.metamodel("graph_evolved")
    assert check_conformance(g_a, evolved) == []
    (root,) = [r for res in g_a.resources.values() for r in res.roots]
    assert len(g_a.get_slot(root, "gcs")) == 9
    texts = sorted(g_a.get_slot(n, "text") for n in g_a.all_instances("Node"))
    assert texts == ["n1", "n2", "n3", "n4"]


# --- 2 -----------------------------------------------------------------------

C2 = "topology history reconstructs Graph2; linksTo and one dangling warning"


@pytest.mark.criterion(2, C2)
def test_topology_history_reconstructs_graph2():
    h = fixtures.build_topology_history()
    assert dumps(h.reconstruct(1).to_json()) == dumps(fixtures.metamodel("graph2").to_json())
    assert dumps(h.to_json()) == dumps(fixtures.history("hist_topology").to_json())


@pytest.mark.criterion(2, C2)
def test_topology_migration_of_g_a(g_a):
    report = migrate(g_a, fixtures.build_topology_history(), 0, 1, HOOKS)
    assert report.ok
    assert check_conformance(g_a, fixtures.metamodel("graph2")) == []
    links = {n.id: [r.id for r in g_a.get_slot(n, "linksTo")] for n in g_a.all_instances("Node")}
    assert links == {"n1": ["n2"], "n2": ["n3", "n2"], "n3": ["n1"], "n4": []}
    assert len(report.warnings) == 1
    assert "e5" in report.warnings[0]


# --- 3 -----------------------------------------------------------------------

C3 = "count tasks agree with brute force on G_A and 200 random graphs"
G_A_COUNTS = {
    "count-nodes": 4,
    "count-looping-edges": 1,
    "count-isolated-nodes": 1,
    "count-dangling-edges": 1,
    "count-circles": 1,
}


def _count(task: str, repo: Repository) -> int:
    outcome = run_task(task, repo)
    assert outcome.ok
    (value,) = outcome.result_values("IntResult")
    return value


@pytest.mark.criterion(3, C3)
def test_g_a_counts_match_oracle(g_a_json):
    nodes, edges = oracles.edges_of(g_a_json)
    from_oracle = {task: fn(nodes, edges) for task, fn in oracles.COUNTS.items()}
    assert from_oracle == G_A_COUNTS
    for task, expected in G_A_COUNTS.items():
        assert _count(task, fixtures.model("g_a")) == expected


@pytest.mark.criterion(3, C3)
def test_random_graph_counts_match_oracle():
    for nodes, edges in random_graphs(3):
        for task, fn in oracles.COUNTS.items():
            assert _count(task, load_graph(nodes, edges)) == fn(nodes, edges), (task, nodes, edges)


# --- 4 -----------------------------------------------------------------------

C4 = "reverse-edges is an involution; insert-transitive-edges is idempotent closure"


@pytest.mark.criterion(4, C4)
def test_reverse_edges_twice_is_identity():
    for nodes, edges in random_graphs(4):
        repo = load_graph(nodes, edges)
        # each task run stamps the model with the task's target release
        repo.release = 1
        before = canon(repo)
        assert run_task("reverse-edges", repo).ok
        assert run_task("reverse-edges", repo).ok
        assert canon(repo) == before


@pytest.mark.criterion(4, C4)
def test_insert_transitive_edges_is_idempotent_closure():
    for nodes, edges in random_graphs(44):
        repo = load_graph(nodes, edges)
        assert run_task("insert-transitive-edges", repo).ok
        once = canon(repo)
        _, after = oracles.edges_of(repo.to_json())
        closure = oracles.transitive_closure(oracles.full_edges(edges))
        assert oracles.full_edges(after) == closure
        # dangling edges are kept and no duplicate pair is introduced
        assert oracles.count_dangling(nodes, after) == oracles.count_dangling(nodes, edges)
        assert len(after) - len(edges) == len(closure - oracles.full_edges(edges))
        assert run_task("insert-transitive-edges", repo).ok
        assert canon(repo) == once


# --- 5 -----------------------------------------------------------------------

C5 = "100 fault-injected custom migrations roll back to byte-identical input"


def _seed_fault(repo: Repository, rng: random.Random) -> None:
    """Leave exactly one conformance violation behind."""
    nodes = repo.all_instances("Node")
    fault = rng.randrange(6) if nodes else rng.randrange(2, 5)
    if fault == 0:
        repo.obj(rng.choice(nodes)).slots["name"] = 42
    elif fault == 1:
        repo.obj(rng.choice(nodes)).slots["colour"] = "red"
    elif fault == 2:
        e = repo.new_instance("graph", "Edge")
        repo.obj(e).slots["src"] = Ref("ghost")
    elif fault == 3:
        oid = repo.fresh_id()
        repo.objects[oid] = Obj(oid, "Node", "graph", {})
    elif fault == 4:
        oid = repo.fresh_id()
        repo.objects[oid] = Obj(oid, "Unknown", "graph", {})
        repo.resource("graph").roots.append(oid)
    else:
        g = repo.new_instance("graph", "Graph")
        repo.obj(g).slots["nodes"] = [rng.choice(nodes)]


def _faulty_hook(repo, before, after, ctx):
    rng = random.Random(ctx.options["seed"])
    # some legitimate work first
    for e in ctx.all_instances("Edge"):
        if rng.random() < 0.5:
            src, trg = ctx.get_slot(e, "src"), ctx.get_slot(e, "trg")
            ctx.set(e, "src", trg)
            ctx.set(e, "trg", src)
    for _ in range(rng.randrange(3)):
        ctx.new_instance("graph", "Graph")
    _seed_fault(repo, rng)


@pytest.mark.criterion(5, C5)
def test_fault_injected_migrations_roll_back():
    hooks = HookRegistry()
    hooks.register("Faulty", _faulty_hook)
    history = fixtures.task_history("Faulty")
    for seed, (nodes, edges) in enumerate(random_graphs(5, 100)):
        repo = load_graph(nodes, edges)
        before = canon(repo)
        report = migrate(repo, history, 0, 1, hooks, {"seed": seed})
        assert not report.ok, seed
        assert report.to_json()["status"] == "ROLLED_BACK"
        assert report.final_release == 0
        assert len(report.steps[-1].violations) >= 1
        assert canon(repo) == before


def test_fault_seeding_leaves_exactly_one_violation():
    # checks the fault injector itself
    for seed, (nodes, edges) in enumerate(random_graphs(5, 100)):
        repo = load_graph(nodes, edges)
        repo.metamodel = fixtures.with_result_classes(fixtures.metamodel("graph1"))
        _seed_fault(repo, random.Random(seed))
        assert len(check_conformance(repo, repo.metamodel)) == 1, seed


# --- 6 -----------------------------------------------------------------------

C6 = "guard soundness: empty-constraint applications commit conforming results"


def _random_shapes_model(rng: random.Random, mm: Metamodel | None = None, n_max: int = 8) -> Repository:
    repo = Repository(mm or fixtures.metamodel("shapes"))
    d = repo.new_instance("drawing", "Drawing", "d")
    for i in range(1, rng.randint(0, n_max) + 1):
        s = repo.new_instance("drawing", "Shape", f"s{i}")
        repo.set(s, "kind", rng.choice(["CIRCLE", "SQUARE"]))
        if rng.random() < 0.5:
            repo.set(s, "size", rng.randint(1, 9))
        repo.add(d, "shapes", s)
    return repo


def _fuzz_args(op, mm: Metamodel, rng: random.Random) -> dict:
    names = list(qualified_names(mm))
    class_names = [c.name for c in mm.classes]
    strings = ["X", "text", "gcs", "kind", "src", "trg", "Node", "linksTo", "9bad", "Kind", ""]
    out = {}
    for p in op.parameters:
        if p.kind is Kind.ELEMENT:
            out[p.name] = rng.choice(names + class_names)
        elif p.kind is Kind.ELEMENT_LIST:
            pool = names + class_names
            out[p.name] = rng.sample(pool, rng.randint(1, min(3, len(pool))))
        else:
            out[p.name] = rng.choice(strings)
    return out


def _cases(mm_name: str):
    rng = random.Random(6)
    mm = fixtures.metamodel(mm_name)
    seen = set()
    for op in REGISTRY.values():
        for _ in range(80):
            args = _fuzz_args(op, mm, rng)
            key = (op.name, json.dumps(args, sort_keys=True))
            if key not in seen:
                seen.add(key)
                yield op.name, args


@pytest.mark.criterion(6, C6)
@pytest.mark.parametrize("mm_name", ["graph1", "shapes"])
def test_guard_soundness(mm_name):
    mm = fixtures.metamodel(mm_name)
    base = create_history(mm)
    base.release()
    base_json = base.to_json()
    applied = {name: 0 for name in REGISTRY}
    for op_name, args in _cases(mm_name):
        problems = check_applicability(op_name, args, mm)
        h = History.from_json(base_json)
        if problems:
            with pytest.raises(InapplicableChange):
                h.apply(op_name, **args)
            continue
        applied[op_name] += 1
        h.apply(op_name, **args)
        h.release()
        after = h.reconstruct(1)
        models = [fixtures.model("g_a")] if mm_name == "graph1" else [
            _random_shapes_model(random.Random(i)) for i in range(3)
        ]
        for repo in models:
            report = migrate(repo, h, 0, 1)
            assert report.ok, (op_name, args, report.to_json())
            assert check_conformance(repo, after) == []
    # the fuzzer must actually exercise the commit path
    assert sum(applied.values()) > 0


@pytest.mark.criterion(6, C6)
def test_guard_soundness_hand_picked_applications():
    cases = [
        ("graph1", "Rename", {"element": "Node.name", "newName": "label"}),
        ("graph1", "ExtractSuperClass", {"subClasses": ["Node", "Edge"], "superName": "Item"}),
        ("graph1", "ClassToAssociation", {"cls": "Edge", "sourceRef": "src", "targetRef": "trg", "newRefName": "to"}),
        ("shapes", "EnumerationToSubClasses", {"attribute": "Shape.kind"}),
        ("shapes", "Rename", {"element": "Kind.CIRCLE", "newName": "ROUND"}),
    ]
    for mm_name, op_name, args in cases:
        mm = fixtures.metamodel(mm_name)
        assert check_applicability(op_name, args, mm) == [], (op_name, args)
        h = create_history(mm)
        h.release()
        h.apply(op_name, **args)
        h.release()
        repo = fixtures.model("g_a") if mm_name == "graph1" else _random_shapes_model(random.Random(1))
        assert migrate(repo, h, 0, 1).ok, op_name
        assert check_conformance(repo, h.reconstruct(1)) == []


# --- 7 -----------------------------------------------------------------------

C7 = "EnumerationToSubClasses then SubClassesToEnumeration round-trips 50 models"


@pytest.mark.criterion(7, C7)
def test_enum_round_trip():
    h = create_history(fixtures.metamodel("shapes"))
    h.release()
    h.apply("EnumerationToSubClasses", attribute="Shape.kind")
    h.release()
    h.apply("SubClassesToEnumeration", superClass="Shape", attributeName="kind")
    h.release()
    rng = random.Random(7)
    for _ in range(50):
        repo = _random_shapes_model(rng, n_max=12)
        kinds = {s.id: repo.get_slot(s, "kind") for s in repo.all_instances("Shape")}
        sizes = {s.id: repo.get_slot(s, "size") for s in repo.all_instances("Shape")}
        count = len(repo)

        mid = migrate(repo, h, 0, 1)
        assert mid.ok
        assert {oid: repo.class_of(oid) for oid in kinds} == kinds

        back = migrate(repo, h, 1, 2)
        assert back.ok
        assert len(repo) == count
        assert {s.id: repo.get_slot(s, "kind") for s in repo.all_instances("Shape")} == kinds
        assert {s.id: repo.get_slot(s, "size") for s in repo.all_instances("Shape")} == sizes


# --- 8 -----------------------------------------------------------------------

C8 = "every CLI command is deterministic in output files and exit codes"


def _cli_commands(work):
    hist = work / "hist.json"
    yield ["list-ops"], []
    yield ["validate", "--metamodel", "graph1", "--model", "g_a"], []
    yield ["validate", "--metamodel", "graph2", "--model", "g_a"], []
    yield ["validate", "--metamodel", str(work / "missing.json")], []
    yield ["apply", "--history", str(hist), "--op", "Rename", "--arg", "element=Graph", "--arg", "newName=Net", "--release"], [hist]
    yield ["apply", "--history", str(hist), "--op", "Rename", "--arg", "element=Nope", "--arg", "newName=x"], [hist]
    for name in ("hist_simple", "hist_topology"):
        out = work / f"{name}.out.json"
        yield ["migrate", "--history", name, "--model", "g_a", "--from", "0", "--to", "1", "--out", str(out)], [out]
    yield ["migrate", "--history", "hist_simple", "--model", "g_a", "--from", "1", "--to", "0", "--out", str(work / "x")], []
    for task in fixtures_tasks():
        out = work / f"{task}.out"
        yield ["task", "--task", task, "--model", "g_a", "--out", str(out)], [out]
    yield ["task", "--task", "no-such-task", "--out", str(work / "y")], []


def fixtures_tasks():
    from coevo.helloworld import TASKS

    return list(TASKS)


def _run_all(work, capsys):
    shutil.copy(fixtures.fixtures_dir() / "hist_simple.history.json", work / "hist.json")
    results = []
    for argv, outputs in _cli_commands(work):
        code = cli.main(argv)
        captured = capsys.readouterr()
        files = [p.read_bytes() if p.exists() else None for p in outputs]
        results.append((argv, code, captured.out, files))
    return results


@pytest.mark.criterion(8, C8)
def test_cli_is_deterministic(tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    a.mkdir()
    b.mkdir()
    first = _run_all(a, capsys)
    second = _run_all(b, capsys)
    for (argv, code1, out1, files1), (_, code2, out2, files2) in zip(first, second):
        assert code1 == code2, argv
        assert out1.replace(str(a), "") == out2.replace(str(b), ""), argv
        assert files1 == files2, argv
    codes = {tuple(argv[:2]): code for argv, code, _, _ in first}
    assert codes[("list-ops",)] == 0
    assert codes[("task", "--task")] in (0, 3)


@pytest.mark.criterion(8, C8)
def test_cli_is_deterministic_across_processes(tmp_path):
    outs = []
    for hash_seed in ("1", "2"):
        out = tmp_path / f"t{hash_seed}.json"
        env = dict(os.environ, PYTHONHASHSEED=hash_seed)
        proc = subprocess.run(
            [sys.executable, "-m", "coevo", "task", "--task", "topology-migration", "--model", "g_a", "--out", str(out)],
            capture_output=True,
            env=env,
            check=False,
        )
        outs.append((proc.returncode, proc.stdout, out.read_bytes()))
    assert outs[0] == outs[1]
    assert outs[0][0] == 0


# --- 9 -----------------------------------------------------------------------

C9 = "metamodel, model and history JSON round-trips are fixpoints on all fixtures"


def _parse(path):
    data = json.loads(path.read_text(encoding="utf-8"))
    if path.name.endswith(".metamodel.json"):
        return Metamodel.from_json(data)
    if path.name.endswith(".history.json"):
        return History.from_json(data)
    return Repository.from_json(data, fixtures.metamodel("graph1"))


FIXTURE_FILES = sorted(p.name for p in fixtures.fixtures_dir().glob("*.json"))


@pytest.mark.criterion(9, C9)
@pytest.mark.parametrize("name", FIXTURE_FILES)
def test_fixture_round_trip(name):
    path = fixtures.fixtures_dir() / name
    once = dumps(_parse(path).to_json())
    twice = dumps(type(_parse(path)).from_json(json.loads(once)).to_json())
    assert once == twice
    # fixtures are stored in canonical form already
    assert once == path.read_text(encoding="utf-8")


def test_fixture_files_cover_every_kind():
    kinds = {n.split(".", 1)[1] for n in FIXTURE_FILES}
    assert kinds == {"metamodel.json", "model.json", "history.json"}
    assert len(FIXTURE_FILES) == len(fixtures.METAMODELS) + len(fixtures.MODELS) + len(fixtures.HISTORIES)


def test_enumerating_every_count_task_is_covered():
    from coevo.helloworld import TASKS

    assert {t for t in TASKS if t.startswith("count-")} == set(G_A_COUNTS)
    assert set(G_A_COUNTS) == set(oracles.COUNTS)
