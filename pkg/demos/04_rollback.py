"""A custom migration that breaks conformance is rolled back.

Steps run in transactions. When one step leaves the model nonconforming,
the whole run is undone and the input model is left exactly as it was.
"""

from coevo.canonical import dumps
from coevo.engine import HookRegistry, migrate
from coevo.helloworld import fixtures
from coevo.history import CompositeChange, create_history

hooks = HookRegistry()


@hooks.register("NumberNames")
def number_names(repo, before, after, ctx):
    # name is a String attribute, so an int makes the model nonconforming
    for i, node in enumerate(ctx.all_instances("Node")):
        ctx.set(node, "name", i)


history = create_history(fixtures.metamodel("graph1"))
history.release()
history.apply("Rename", element="Graph", newName="Network")
history.record(CompositeChange([], "NumberNames"))
history.release()

repo = fixtures.model("g_a")
before = dumps(repo.to_json())
report = migrate(repo, history, 0, 1, hooks)

print(dumps(report.to_json()))
print("input unchanged:", dumps(repo.to_json()) == before)
