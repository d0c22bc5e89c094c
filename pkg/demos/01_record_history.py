"""Record a metamodel history with reusable coupled operations.

Each operation adapts the metamodel and carries its own model migration.
The history stores the operations, so any release can be rebuilt later.
"""

from coevo.canonical import dumps
from coevo.errors import InapplicableChange
from coevo.helloworld import fixtures
from coevo.history import create_history
from coevo.operations import list_operations

print("available operations:")
for line in list_operations():
    print("  " + line)

history = create_history(fixtures.metamodel("graph1"))
history.release()

history.apply("ExtractSuperClass", subClasses=["Node", "Edge"], superName="GraphComponent")
history.apply("UniteReferences", references=["Graph.nodes", "Graph.edges"], unitedName="gcs")
history.apply("PullUpFeature", feature="Node.name", superClass="GraphComponent")
history.apply("Rename", element="GraphComponent.name", newName="text")

# an inapplicable operation is refused and leaves the history unchanged
try:
    history.apply("Rename", element="Node.colour", newName="hue")
except InapplicableChange as exc:
    print(f"\nrefused: {exc}")

history.release()
print(f"\nreleases: {[r.released for r in history.releases]}")

evolved = history.reconstruct(1)
print("\nrelease 1 metamodel:")
print(dumps(evolved.to_json()))
print("matches graph_evolved fixture:", evolved.to_json() == fixtures.metamodel("graph_evolved").to_json())
