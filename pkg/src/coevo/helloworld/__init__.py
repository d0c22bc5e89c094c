"""Hello world task pack: Graph fixtures, graph queries and task runners."""

from . import fixtures
from .graph import (
    count_circles,
    count_dangling_edges,
    count_isolated_nodes,
    count_looping_edges,
    count_nodes,
    get_reachable,
    successors,
    transitive_pairs,
)
from .tasks import (
    HOOKS,
    TASKS,
    TaskOutcome,
    TaskSpec,
    move_result,
    run_task,
    task_constant_transformation,
    task_constant_transformation_references,
    task_count_circles,
    task_count_dangling_edges,
    task_count_isolated_nodes,
    task_count_looping_edges,
    task_count_nodes,
    task_delete_node_with_name,
    task_insert_transitive_edges,
    task_model_to_text,
    task_reverse_edges,
    task_simple_migration,
    task_topology_migration,
)

__all__ = [
    "HOOKS",
    "TASKS",
    "TaskOutcome",
    "TaskSpec",
    "count_circles",
    "count_dangling_edges",
    "count_isolated_nodes",
    "count_looping_edges",
    "count_nodes",
    "fixtures",
    "get_reachable",
    "move_result",
    "run_task",
    "successors",
    "task_constant_transformation",
    "task_constant_transformation_references",
    "task_count_circles",
    "task_count_dangling_edges",
    "task_count_isolated_nodes",
    "task_count_looping_edges",
    "task_count_nodes",
    "task_delete_node_with_name",
    "task_insert_transitive_edges",
    "task_model_to_text",
    "task_reverse_edges",
    "task_simple_migration",
    "task_topology_migration",
    "transitive_pairs",
]
