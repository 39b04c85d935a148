"""Change capture and lifecycle control.

diff() compares two entity inventories into added/deleted/renamed changes
(rename = a deleted and an added entity of the same kind with equal
definition fingerprints, matched only when unambiguous). impact() annotates
changes with the services whose descriptions mention the entity and the
saved queries whose plans call those services. apply_changes() flips the
affected services to inactive, and the rebuild queue re-synthesizes them on
operator request with whatever rules/ontology are current at that moment.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

from .descriptions import mentions
from .forge import MissingMappingError, Status, synthesize
from .ontology import (
    DomainOntology,
    EntityInventory,
    InventoryEntry,
    ServiceOntology,
    KIND_ORDER,
)
from .rdf import XSD_NS, local_name
from .registry import Clock, Registry
from .relational import RelationalSchema
from .rules import RuleSet, coverage_check

logger = logging.getLogger(__name__)

ADDED = "added"
DELETED = "deleted"
RENAMED = "renamed"


class NotInactive(Exception):
    def __init__(self, name: str):
        super().__init__(f"{name} is not inactive; only inactive services rebuild")
        self.name = name


def display_name(iri: str) -> str:
    """Entity name as shown on the dashboard: xsd:local for XSD, else local."""
    if iri.startswith(XSD_NS):
        return "xsd:" + iri[len(XSD_NS):]
    return local_name(iri)


@dataclass(frozen=True)
class InventoryChange:
    kind: str               # added | deleted | renamed
    entity_kind: str        # class | object-property | data-property | datatype-use
    iri: str                # the added/deleted IRI; the new IRI for renames
    renamed_from: Optional[str] = None
    scope: str = ""         # datatype uses carry their (service, property) scope


def diff(old: EntityInventory, new: EntityInventory) -> List[InventoryChange]:
    """Inventory delta as added/deleted/renamed changes.

    Entities keeping their key but changing fingerprint are modifications and
    are not reported; a use that merely moved scope (same IRI and kind, equal
    fingerprint) cancels out quietly.
    """
    old_keys = set(old.entries)
    new_keys = set(new.entries)
    deleted = {k: old.entries[k] for k in old_keys - new_keys}
    added = {k: new.entries[k] for k in new_keys - old_keys}

    for dk in list(deleted):
        for ak in list(added):
            if dk not in deleted or ak not in added:
                continue
            d, a = deleted[dk], added[ak]
            if (d.iri, d.kind, d.fingerprint) == (a.iri, a.kind, a.fingerprint):
                del deleted[dk]
                del added[ak]

    changes: List[InventoryChange] = []
    buckets: Dict[Tuple[str, str], Tuple[List[InventoryEntry], List[InventoryEntry]]] = {}
    for entry in deleted.values():
        buckets.setdefault((entry.kind, entry.fingerprint), ([], []))[0].append(entry)
    for entry in added.values():
        buckets.setdefault((entry.kind, entry.fingerprint), ([], []))[1].append(entry)

    leftover_deleted: List[InventoryEntry] = []
    leftover_added: List[InventoryEntry] = []
    for (kind, _fp), (dels, adds) in sorted(buckets.items()):
        if len(dels) == 1 and len(adds) == 1 and dels[0].iri != adds[0].iri:
            changes.append(InventoryChange(RENAMED, kind, adds[0].iri, dels[0].iri,
                                           scope=adds[0].scope))
            continue
        if dels and adds:
            logger.info("ambiguous rename candidates for kind %s: %s -> %s; "
                        "reporting as add+delete",
                        kind, [d.iri for d in dels], [a.iri for a in adds])
        leftover_deleted.extend(dels)
        leftover_added.extend(adds)

    def order(entry: InventoryEntry):
        return (KIND_ORDER[entry.kind], entry.iri, entry.scope)

    for entry in sorted(leftover_added, key=order):
        changes.append(InventoryChange(ADDED, entry.kind, entry.iri, scope=entry.scope))
    for entry in sorted(leftover_deleted, key=order):
        changes.append(InventoryChange(DELETED, entry.kind, entry.iri, scope=entry.scope))
    renames = [c for c in changes if c.kind == RENAMED]
    others = [c for c in changes if c.kind != RENAMED]
    return sorted(renames, key=lambda c: (KIND_ORDER[c.entity_kind], c.iri)) + others


# ---------------------------------------------------------------------------
# Events
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ChangeEvent:
    timestamp: str
    description_of_change: str
    entity_added: Optional[str]
    entity_deleted: Optional[str]
    entity_renamed: Optional[Tuple[str, str]]   # (from, to)
    affected_service: Tuple[str, ...]
    affected_query: Tuple[str, ...]
    entity_iri: str
    entity_kind: str

    def __post_init__(self):
        populated = sum(x is not None for x in
                        (self.entity_added, self.entity_deleted, self.entity_renamed))
        if populated != 1:
            raise ValueError("exactly one of added/deleted/renamed per event")

    def to_json(self) -> dict:
        renamed = None
        if self.entity_renamed is not None:
            renamed = {"from": self.entity_renamed[0], "to": self.entity_renamed[1]}
        return {
            "timestamp": self.timestamp,
            "description_of_change": self.description_of_change,
            "entity_added": self.entity_added,
            "entity_deleted": self.entity_deleted,
            "entity_renamed": renamed,
            "affected_service": list(self.affected_service),
            "affected_query": list(self.affected_query),
            "entity_iri": self.entity_iri,
            "entity_kind": self.entity_kind,
        }


class ChangeLog:
    """Append-only event list with non-decreasing timestamps."""

    def __init__(self):
        self._events: List[ChangeEvent] = []

    def append(self, event: ChangeEvent) -> None:
        if self._events and event.timestamp < self._events[-1].timestamp:
            raise ValueError("change log timestamps must be non-decreasing")
        self._events.append(event)

    def extend(self, events: Sequence[ChangeEvent]) -> None:
        for e in events:
            self.append(e)

    def events(self) -> List[ChangeEvent]:
        return list(self._events)

    def __len__(self) -> int:
        return len(self._events)

    def export_jsonl(self) -> str:
        return "\n".join(json.dumps(e.to_json(), sort_keys=True) for e in self._events) \
            + ("\n" if self._events else "")


def _where_mentioned(entity_iri: str, ontologies: Sequence[ServiceOntology],
                     name: str) -> Optional[str]:
    for ont in ontologies:
        entry = ont.entries.get(name)
        if entry is None:
            continue
        if mentions(entry.output, entity_iri):
            return "output"
        if mentions(entry.input, entity_iri):
            return "input"
    return None


def impact(changes: Sequence[InventoryChange], *,
           registry: Registry,
           clock: Clock,
           slot: str = "service",
           old_service_ontology: Optional[ServiceOntology] = None,
           new_service_ontology: Optional[ServiceOntology] = None,
           saved_queries: Optional[Sequence[Tuple[str, "GraphQuery"]]] = None,
           ) -> List[ChangeEvent]:
    """Annotate changes with affected services and queries.

    Affectedness scans both ontology versions' descriptions (or, for domain
    changes, the deployed descriptions); affected queries are the saved
    queries whose plan against the pre-change registry calls an affected
    service, so impact must run before apply_changes().
    """
    from .queries import plan as plan_query

    ontologies = [o for o in (old_service_ontology, new_service_ontology) if o]
    events: List[ChangeEvent] = []

    query_services: Dict[str, List[str]] = {}
    for name, query in (saved_queries or ()):
        try:
            query_services[name] = plan_query(query, registry).services()
        except Exception:
            continue  # unplannable queries cannot be affected

    for change in changes:
        affected: List[str] = []
        where: Optional[str] = None
        # A datatype use belongs to one service; every description mentions
        # xsd:string somewhere, so only the use's own service is affected.
        if slot == "service" and change.scope:
            candidates = [change.scope.split("/", 1)[0]]
            candidates = [n for n in candidates if n in registry.names()]
        else:
            candidates = registry.names()
        names = [change.iri]
        if change.renamed_from:
            names.append(change.renamed_from)  # deployed artifacts use the old name
        for service_name in candidates:
            role = None
            for name in names:
                if slot == "service":
                    role = _where_mentioned(name, ontologies, service_name)
                elif slot == "schema":
                    from .relational import plan_references
                    refs = plan_references(registry.get(service_name).plan)
                    role = "plan" if name in refs else None
                else:
                    entry = registry.get(service_name).description
                    if mentions(entry.output, name):
                        role = "output"
                    elif mentions(entry.input, name):
                        role = "input"
                if role:
                    break
            if role:
                affected.append(service_name)
                where = where or role
        queries = sorted(q for q, services in query_services.items()
                         if set(services) & set(affected))
        if slot == "service":
            place = f"the {where or 'output'} definition"
        elif slot == "schema":
            place = "the source schema"
        else:
            place = "the domain ontology"
        if change.kind == ADDED:
            text = f"An entity is added to {place}"
        elif change.kind == DELETED:
            text = f"An entity is deleted from {place}"
        else:
            text = f"An entity is renamed in {place}"
        events.append(ChangeEvent(
            timestamp=clock.now(),
            description_of_change=text,
            entity_added=display_name(change.iri) if change.kind == ADDED else None,
            entity_deleted=display_name(change.iri) if change.kind == DELETED else None,
            entity_renamed=(display_name(change.renamed_from), display_name(change.iri))
            if change.kind == RENAMED else None,
            affected_service=tuple(sorted(affected)),
            affected_query=tuple(queries),
            entity_iri=change.iri,
            entity_kind=change.entity_kind,
        ))
    return events


def apply_changes(events: Sequence[ChangeEvent], registry: Registry,
                  log: ChangeLog) -> List[Tuple[str, str]]:
    """Inactivate affected services; returns (service, new state) transitions."""
    transitions: List[Tuple[str, str]] = []
    for event in events:
        entity = event.entity_added or event.entity_deleted or \
            (event.entity_renamed and event.entity_renamed[1])
        reason = f"{event.description_of_change}: {entity}"
        for name in event.affected_service:
            service = registry.get(name)
            reasons = service.status.reasons + (reason,) \
                if not service.status.is_active else (reason,)
            registry.set_status(name, Status.inactive(*reasons))
            transitions.append((name, "inactive"))
        log.append(event)
    return transitions


# ---------------------------------------------------------------------------
# Rebuild queue
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RebuildOutcome:
    service: str
    state: str           # "active" | "inactive"
    detail: str


class RebuildQueue:
    def __init__(self):
        self._queue: List[str] = []

    def request(self, name: str, registry: Registry) -> int:
        """Queue an inactive service; returns its 1-based queue position."""
        if registry.get(name).status.is_active:
            raise NotInactive(name)
        if name not in self._queue:
            self._queue.append(name)
        return self._queue.index(name) + 1

    def pending(self) -> List[str]:
        return list(self._queue)

    def run(self, registry: Registry, service_ontology: ServiceOntology,
            rules: RuleSet, schema: RelationalSchema,
            ontology: DomainOntology) -> List[RebuildOutcome]:
        """Drain the queue; per-service failures never abort the rest."""
        outcomes: List[RebuildOutcome] = []
        queue, self._queue = self._queue, []
        for name in queue:
            entry = service_ontology.entries.get(name)
            if entry is None:
                outcomes.append(RebuildOutcome(
                    name, "inactive", f"no description for {name!r} in "
                    f"service ontology {service_ontology.version!r}"))
                continue
            try:
                service = synthesize(entry, rules, schema, ontology)
            except MissingMappingError as exc:
                old = registry.get(name)
                registry.set_status(name, Status.inactive(*old.status.reasons, exc.reason))
                outcomes.append(RebuildOutcome(name, "inactive", exc.reason))
                continue
            except Exception as exc:
                old = registry.get(name)
                detail = f"{type(exc).__name__}: {exc}"
                registry.set_status(name, Status.inactive(*old.status.reasons, detail))
                outcomes.append(RebuildOutcome(name, "inactive", detail))
                continue
            registry.deploy(service)
            outcomes.append(RebuildOutcome(name, "active", "rebuilt"))
        return outcomes


def lifecycle_violations(registry: Registry, rules: RuleSet,
                         ontology: DomainOntology) -> List[str]:
    """Active services whose current output is not covered by the rules."""
    bad = []
    for service in registry.services():
        if not service.status.is_active:
            continue
        if coverage_check(rules, service.description.output, ontology):
            bad.append(service.name)
    return bad
