"""semfed: semantic data federation over relational sources.

Typed RDF services are synthesized from ontology descriptions and mapping
rules, discovered from a registry to answer graph queries, and kept
interoperable by a change pipeline that diffs ontology versions, flags broken
services, and rebuilds them on request.
"""

from .rdf import Blank, Graph, Iri, Literal, Triple, parse_turtle, serialize_turtle
from .descriptions import (
    ClassDescription,
    DataHasValue,
    DataSomeValuesFrom,
    IntersectionOf,
    Named,
    ObjectHasValue,
    ObjectSomeValuesFrom,
    classify,
)
from .ontology import (
    DomainOntology,
    EntityInventory,
    ServiceDescription,
    ServiceOntology,
    inventory,
    load_ontology,
    load_service_ontology,
)
from .relational import Database, RelationalSchema, execute_plan, load_csv, parse_schema, render_sql
from .rules import RuleSet, coverage_check, parse_rules, serialize_rules
from .forge import ExecutableService, mint_iri, parse_iri, synthesize
from .registry import Registry
from .queries import BindingTable, GraphQuery, Plan, execute, parse_query, plan
from .changes import ChangeEvent, ChangeLog, RebuildQueue, apply_changes, diff, impact
from .workspace import Workspace, WorkspaceConfig, boot_workspace, replay_scenario

__version__ = "0.1.0"

__all__ = [
    "Blank", "Graph", "Iri", "Literal", "Triple", "parse_turtle", "serialize_turtle",
    "ClassDescription", "DataHasValue", "DataSomeValuesFrom", "IntersectionOf",
    "Named", "ObjectHasValue", "ObjectSomeValuesFrom", "classify",
    "DomainOntology", "EntityInventory", "ServiceDescription", "ServiceOntology",
    "inventory", "load_ontology", "load_service_ontology",
    "Database", "RelationalSchema", "execute_plan", "load_csv", "parse_schema",
    "render_sql",
    "RuleSet", "coverage_check", "parse_rules", "serialize_rules",
    "ExecutableService", "mint_iri", "parse_iri", "synthesize",
    "Registry",
    "BindingTable", "GraphQuery", "Plan", "execute", "parse_query", "plan",
    "ChangeEvent", "ChangeLog", "RebuildQueue", "apply_changes", "diff", "impact",
    "Workspace", "WorkspaceConfig", "boot_workspace", "replay_scenario",
    "__version__",
]
