"""Service registry: deployment, description, invocation, and discovery.

The registry owns service status and timestamps and rebuilds its predicate
index on every mutation. Mutations go through one lock (single writer);
reads take a consistent snapshot under the same lock and then run pure.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from datetime import datetime
from typing import Dict, List, Optional, Sequence, Tuple

from .descriptions import ClassDescription, Named, classify, encode_description
from .forge import (
    DEFAULT_ID_BASE,
    ExecutableService,
    ParseFailure,
    Status,
    added_properties,
    apply_emitters,
    mint_iri,
    parse_iri,
)
from .ontology import SERVICE_NS, SVC_DESCRIPTION, SVC_INPUT, SVC_OUTPUT, SVC_SERVICE, DomainOntology
from .rdf import (
    Graph,
    Iri,
    Literal,
    OWL_NS,
    OWL_THING,
    RDF_NS,
    RDF_TYPE,
    Triple,
    XSD_NS,
)
from .relational import Database, execute_plan

SVC_STATUS = SERVICE_NS + "status"
SVC_STATUS_REASON = SERVICE_NS + "status_reason"
SVC_TIME_OF_CREATION = SERVICE_NS + "time_of_creation"
SVC_TIME_OF_REBUILD = SERVICE_NS + "time_of_rebuild"


class Clock:
    def now(self) -> str:
        raise NotImplementedError


class SystemClock(Clock):
    def now(self) -> str:
        return datetime.now().strftime("%Y-%m-%dT%H:%M:%S")


class FixedClock(Clock):
    """Injectable clock; stays put until set() moves it."""

    def __init__(self, timestamp: str):
        self._timestamp = timestamp

    def set(self, timestamp: str) -> None:
        self._timestamp = timestamp

    def now(self) -> str:
        return self._timestamp


class NotFound(Exception):
    def __init__(self, name: str):
        super().__init__(f"no service named {name!r}")
        self.name = name


class ServiceInactive(Exception):
    def __init__(self, name: str, reasons: Sequence[str]):
        detail = "; ".join(reasons) or "inactive"
        super().__init__(f"{name} is inactive: {detail}")
        self.name = name
        self.reasons = tuple(reasons)


class MalformedInput(Exception):
    pass


class Registry:
    def __init__(self, ontology: DomainOntology, database: Database,
                 clock: Optional[Clock] = None, id_base: str = DEFAULT_ID_BASE):
        self.ontology = ontology
        self.database = database
        self.clock = clock or SystemClock()
        self.id_base = id_base
        self._lock = threading.RLock()
        self._services: Dict[str, ExecutableService] = {}
        self._index: Dict[str, Tuple[str, ...]] = {}

    # -- mutations ----------------------------------------------------------

    def deploy(self, service: ExecutableService) -> ExecutableService:
        """Register or replace a service; replacing stamps time_of_rebuild."""
        with self._lock:
            previous = self._services.get(service.name)
            if previous is None:
                service.time_of_creation = self.clock.now()
                service.time_of_rebuild = None
            else:
                service.time_of_creation = previous.time_of_creation
                service.time_of_rebuild = self.clock.now()
            self._services[service.name] = service
            self._rebuild_index()
            return service

    def set_status(self, name: str, status: Status) -> None:
        with self._lock:
            self.get(name).status = status
            self._rebuild_index()

    def set_ontology(self, ontology: DomainOntology) -> None:
        with self._lock:
            self.ontology = ontology

    def _rebuild_index(self) -> None:
        index: Dict[str, List[str]] = {}
        for name, service in self._services.items():
            for prop in added_properties(service.description):
                index.setdefault(prop, []).append(name)
        self._index = {prop: tuple(sorted(names)) for prop, names in index.items()}

    # -- reads --------------------------------------------------------------

    def __len__(self) -> int:
        return len(self._services)

    def names(self) -> List[str]:
        with self._lock:
            return sorted(self._services)

    def get(self, name: str) -> ExecutableService:
        service = self._services.get(name)
        if service is None:
            raise NotFound(name)
        return service

    def predicate_index(self) -> Dict[str, Tuple[str, ...]]:
        with self._lock:
            return dict(self._index)

    def services(self) -> List[ExecutableService]:
        with self._lock:
            return [self._services[n] for n in sorted(self._services)]

    def root_services(self) -> List[ExecutableService]:
        return [s for s in self.services() if s.is_root]

    def discover(self, predicate: str, input_class: ClassDescription) -> List[str]:
        """Active services adding the predicate whose input accepts the class.

        Input matching is structural: equal descriptions, or an owl:Thing
        input which accepts anything. No hierarchy walk happens here.
        """
        with self._lock:
            out = []
            for name in self._index.get(predicate, ()):
                service = self._services[name]
                if not service.status.is_active:
                    continue
                if service.description.input == Named(OWL_THING) \
                        or service.description.input == input_class:
                    out.append(name)
            return sorted(out)

    # -- protocol operations -------------------------------------------------

    def describe(self, name: str) -> Graph:
        """Service description document: I/O descriptions, status, timestamps."""
        with self._lock:
            service = self.get(name)
            g = Graph(prefixes={
                "svc": SERVICE_NS,
                "owl": OWL_NS,
                "rdf": RDF_NS,
                "xsd": XSD_NS,
            })
            subject = Iri(service.description.iri)
            g.add(Triple(subject, Iri(RDF_TYPE), Iri(SVC_SERVICE)))
            if service.description.doc:
                g.add(Triple(subject, Iri(SVC_DESCRIPTION), Literal(service.description.doc)))
            g.add(Triple(subject, Iri(SVC_STATUS), Literal(service.status.state)))
            for reason in service.status.reasons:
                g.add(Triple(subject, Iri(SVC_STATUS_REASON), Literal(reason)))
            if service.time_of_creation:
                g.add(Triple(subject, Iri(SVC_TIME_OF_CREATION),
                             Literal(service.time_of_creation)))
            if service.time_of_rebuild:
                g.add(Triple(subject, Iri(SVC_TIME_OF_REBUILD),
                             Literal(service.time_of_rebuild)))
            g.add(Triple(subject, Iri(SVC_INPUT),
                         encode_description(service.description.input, g)))
            g.add(Triple(subject, Iri(SVC_OUTPUT),
                         encode_description(service.description.output, g)))
            return g

    def invoke(self, name: str, input_graph: Graph) -> Tuple[Graph, List[str]]:
        """Run a service over the instances in input_graph.

        The input is echoed; classified instances gain the output's new
        triples, unclassifiable or foreign instances are echoed untouched and
        reported in the warning list.
        """
        with self._lock:
            service = self.get(name)
            if not service.status.is_active:
                raise ServiceInactive(name, service.status.reasons)
            ontology = self.ontology
            database = self.database

        out = input_graph.copy()
        warnings: List[str] = []

        if service.is_root:
            for row in execute_plan(database, service.plan, []):
                subject = mint_iri(service.minting, row[0], self.id_base)
                apply_emitters(subject, row, service.emitters, out, self.id_base)
            return out, warnings

        for node in input_graph.subjects():
            if not classify(input_graph, node, service.description.input, ontology):
                warnings.append(f"{node!r} is not an instance of the input class")
                continue
            try:
                key = parse_iri(service.minting, node, self.id_base)
            except ParseFailure:
                warnings.append(f"{node!r} was not minted by this deployment")
                continue
            for row in execute_plan(database, service.plan, [key]):
                apply_emitters(node, row, service.emitters, out, self.id_base)
        return out, warnings
