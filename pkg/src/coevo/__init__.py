"""Metamodel/model co-evolution: record metamodel changes, replay them on models."""

from .engine import HookRegistry, MigrationContext, MigrationReport, migrate, run_transaction, store_result
from .history import (
    CompositeChange,
    History,
    OperationApplication,
    PrimitiveChange,
    create_history,
)
from .metamodel import (
    UNBOUNDED,
    Attribute,
    Class,
    Enumeration,
    Metamodel,
    Reference,
    Violation,
    all_features,
    is_subtype_of,
    resolve,
    validate_metamodel,
)
from .model import ABSENT, Mode, Ref, Repository, check_conformance
from .operations import REGISTRY, check_applicability, list_operations

__version__ = "0.1.0"

__all__ = [
    "ABSENT",
    "REGISTRY",
    "UNBOUNDED",
    "Attribute",
    "Class",
    "CompositeChange",
    "Enumeration",
    "History",
    "HookRegistry",
    "Metamodel",
    "MigrationContext",
    "MigrationReport",
    "Mode",
    "OperationApplication",
    "PrimitiveChange",
    "Ref",
    "Reference",
    "Repository",
    "Violation",
    "all_features",
    "check_applicability",
    "check_conformance",
    "create_history",
    "is_subtype_of",
    "list_operations",
    "migrate",
    "resolve",
    "run_transaction",
    "store_result",
    "validate_metamodel",
]
