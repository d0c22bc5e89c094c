"""Run every hello world task on G_A and print what it produces."""

import json

from coevo.helloworld import TASKS, run_task

for name, spec in TASKS.items():
    outcome = run_task(name)
    repo = outcome.repo
    if spec.output == "text":
        shown = repr(outcome.text)
    elif spec.output == "result":
        roots = repo.resources["result"].roots
        shown = ", ".join(f"{repo.class_of(r)}{json.dumps(repo.obj(r).slots, default=str)}" for r in roots)
    else:
        shown = f"{len(repo)} objects"
    print(f"{name:24} {outcome.report.to_json()['status']:11} {shown}")
