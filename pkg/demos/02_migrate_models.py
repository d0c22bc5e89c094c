"""Migrate the example graph G_A along two recorded histories.

The simple history keeps every object and moves it under a common
superclass. The topology history turns Edge objects into a ``linksTo``
reference, so the dangling edge e5 is reported as a warning.
"""

from coevo.engine import migrate
from coevo.helloworld import HOOKS, fixtures
from coevo.model import check_conformance

for name, target in (("hist_simple", "graph_evolved"), ("hist_topology", "graph2")):
    repo = fixtures.model("g_a")
    report = migrate(repo, fixtures.history(name), 0, 1, HOOKS)
    print(f"== {name}: {report.to_json()['status']}")
    for step in report.steps:
        print(f"  {step.change:6} {step.status:12} {step.description}")
        for w in step.warnings:
            print(f"         warning: {w}")
    print("  conforms to", target, check_conformance(repo, fixtures.metamodel(target)) == [])
    classes = {}
    for o in repo.iter_objects():
        classes[o.cls] = classes.get(o.cls, 0) + 1
    print("  objects:", classes, "resources:", list(repo.resources))
