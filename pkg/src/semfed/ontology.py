"""Versioned domain and service ontologies plus the diffable entity inventory.

Ontology files are Turtle documents in the package's subset dialect. A domain
ontology declares classes (owl:Class with rdfs:subClassOf and rdfs:label),
object/data properties, and simple typed individuals. A service ontology
declares service entries whose inputs and outputs are class descriptions.

The entity inventory flattens an ontology into (entity, kind, fingerprint)
entries; fingerprints hash an entity's axioms with its own IRI replaced by a
placeholder, which makes whole-ontology renames detectable by fingerprint
equality.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from .descriptions import (
    ClassDescription,
    DataHasValue,
    DataSomeValuesFrom,
    IntersectionOf,
    Named,
    ObjectHasValue,
    ObjectSomeValuesFrom,
    datatypes_of,
    decode_description,
    depth,
    intersection_members,
    named_classes_of,
    properties_of,
)
from .errors import ParseError
from .rdf import (
    Iri,
    Literal,
    OWL_CLASS,
    OWL_DATATYPE_PROPERTY,
    OWL_OBJECT_PROPERTY,
    OWL_THING,
    RDF_TYPE,
    RDFS_DOMAIN,
    RDFS_LABEL,
    RDFS_RANGE,
    RDFS_SUBCLASSOF,
    SUPPORTED_DATATYPES,
    local_name,
    parse_turtle,
)

SERVICE_NS = "http://fixture.local/vocab/service#"
SVC_SERVICE = SERVICE_NS + "Service"
SVC_INPUT = SERVICE_NS + "input"
SVC_OUTPUT = SERVICE_NS + "output"
SVC_DESCRIPTION = SERVICE_NS + "description"

KIND_CLASS = "class"
KIND_OBJECT_PROPERTY = "object-property"
KIND_DATA_PROPERTY = "data-property"
KIND_DATATYPE_USE = "datatype-use"
KIND_TABLE = "table"
KIND_COLUMN = "column"

KIND_ORDER = {KIND_CLASS: 0, KIND_OBJECT_PROPERTY: 1, KIND_DATA_PROPERTY: 2,
              KIND_DATATYPE_USE: 3, KIND_TABLE: 4, KIND_COLUMN: 5}

_PLACEHOLDER = "\x00self\x00"


class CycleError(Exception):
    """The subclass graph contains a cycle."""

    def __init__(self, path: List[str]):
        super().__init__(" -> ".join(local_name(c) for c in path))
        self.path = path


class DanglingReference(Exception):
    """An axiom references an entity that is not declared."""

    def __init__(self, iri: str):
        super().__init__(f"dangling reference: {iri}")
        self.iri = iri


@dataclass(frozen=True)
class ClassDecl:
    iri: str
    label: str
    superclasses: Tuple[str, ...]


@dataclass(frozen=True)
class PropertyDecl:
    iri: str
    label: str
    domain: Optional[str] = None
    range: Optional[str] = None


@dataclass
class DomainOntology:
    version: str
    classes: Dict[str, ClassDecl] = field(default_factory=dict)
    object_properties: Dict[str, PropertyDecl] = field(default_factory=dict)
    data_properties: Dict[str, PropertyDecl] = field(default_factory=dict)
    individuals: Dict[str, str] = field(default_factory=dict)

    def has_property(self, iri: str) -> bool:
        return iri in self.object_properties or iri in self.data_properties

    def has_class(self, iri: str) -> bool:
        return iri in self.classes or iri == OWL_THING

    def superclasses(self, iri: str) -> Tuple[str, ...]:
        decl = self.classes.get(iri)
        return decl.superclasses if decl else ()

    def is_subclass(self, sub: str, sup: str) -> bool:
        """True if sub is a proper declared descendant of sup."""
        seen = set()
        stack = list(self.superclasses(sub))
        while stack:
            cur = stack.pop()
            if cur == sup:
                return True
            if cur in seen:
                continue
            seen.add(cur)
            stack.extend(self.superclasses(cur))
        return False

    def subclasses_or_self(self, iri: str) -> List[str]:
        out = [iri]
        for c in self.classes:
            if self.is_subclass(c, iri):
                out.append(c)
        return sorted(set(out))

    def data_range(self, prop: str) -> Optional[str]:
        decl = self.data_properties.get(prop)
        return decl.range if decl else None


@dataclass(frozen=True)
class ServiceDescription:
    name: str
    iri: str
    doc: str
    input: ClassDescription
    output: ClassDescription


@dataclass
class ServiceOntology:
    version: str
    entries: Dict[str, ServiceDescription] = field(default_factory=dict)


def load_ontology(text: str, version: str = "unversioned") -> DomainOntology:
    """Parse a domain ontology file; checks acyclicity and reference closure."""
    graph = parse_turtle(text)
    ont = DomainOntology(version=version)
    type_iri = Iri(RDF_TYPE)

    def label_of(subject: Iri) -> str:
        value = graph.value(subject, Iri(RDFS_LABEL))
        return value.lexical if isinstance(value, Literal) else ""

    for t in graph.triples(None, type_iri, Iri(OWL_CLASS)):
        if not isinstance(t.subject, Iri):
            continue
        supers = tuple(sorted(
            o.value for o in graph.objects(t.subject, Iri(RDFS_SUBCLASSOF)) if isinstance(o, Iri)
        ))
        ont.classes[t.subject.value] = ClassDecl(t.subject.value, label_of(t.subject), supers)

    for t in graph.triples(None, type_iri, Iri(OWL_OBJECT_PROPERTY)):
        if not isinstance(t.subject, Iri):
            continue
        dom = graph.value(t.subject, Iri(RDFS_DOMAIN))
        rng = graph.value(t.subject, Iri(RDFS_RANGE))
        ont.object_properties[t.subject.value] = PropertyDecl(
            t.subject.value, label_of(t.subject),
            dom.value if isinstance(dom, Iri) else None,
            rng.value if isinstance(rng, Iri) else None,
        )

    for t in graph.triples(None, type_iri, Iri(OWL_DATATYPE_PROPERTY)):
        if not isinstance(t.subject, Iri):
            continue
        rng = graph.value(t.subject, Iri(RDFS_RANGE))
        if rng is not None and (not isinstance(rng, Iri) or rng.value not in SUPPORTED_DATATYPES):
            raise DanglingReference(rng.value if isinstance(rng, Iri) else str(rng))
        ont.data_properties[t.subject.value] = PropertyDecl(
            t.subject.value, label_of(t.subject), None,
            rng.value if isinstance(rng, Iri) else None,
        )

    declared_types = {OWL_CLASS, OWL_OBJECT_PROPERTY, OWL_DATATYPE_PROPERTY}
    for t in graph.triples(None, type_iri, None):
        if not isinstance(t.subject, Iri) or not isinstance(t.object, Iri):
            continue
        if t.object.value in declared_types:
            continue
        if t.object.value not in ont.classes:
            raise DanglingReference(t.object.value)
        ont.individuals[t.subject.value] = t.object.value

    for decl in ont.classes.values():
        for sup in decl.superclasses:
            if sup not in ont.classes:
                raise DanglingReference(sup)
    for decl in ont.object_properties.values():
        for ref in (decl.domain, decl.range):
            if ref is not None and ref not in ont.classes:
                raise DanglingReference(ref)

    _check_acyclic(ont)
    return ont


def _check_acyclic(ont: DomainOntology) -> None:
    state: Dict[str, int] = {}  # 1 = on stack, 2 = done

    def visit(iri: str, path: List[str]) -> None:
        mark = state.get(iri)
        if mark == 1:
            raise CycleError(path[path.index(iri):])
        if mark == 2:
            return
        state[iri] = 1
        for sup in ont.superclasses(iri):
            visit(sup, path + [sup])
        state[iri] = 2

    for iri in sorted(ont.classes):
        visit(iri, [iri])


def load_service_ontology(text: str, version: str = "unversioned") -> ServiceOntology:
    """Parse a service ontology file. Domain validation is a separate step."""
    graph = parse_turtle(text)
    ont = ServiceOntology(version=version)
    for t in graph.triples(None, Iri(RDF_TYPE), Iri(SVC_SERVICE)):
        if not isinstance(t.subject, Iri):
            raise ParseError("service subjects must be IRIs")
        name = local_name(t.subject.value)
        if name in ont.entries:
            raise ParseError(f"duplicate service name {name!r}")
        input_node = graph.value(t.subject, Iri(SVC_INPUT))
        output_node = graph.value(t.subject, Iri(SVC_OUTPUT))
        if input_node is None or output_node is None:
            raise ParseError(f"service {name!r} lacks an input or output description")
        doc = graph.value(t.subject, Iri(SVC_DESCRIPTION))
        entry = ServiceDescription(
            name=name,
            iri=t.subject.value,
            doc=doc.lexical if isinstance(doc, Literal) else "",
            input=decode_description(graph, input_node),
            output=decode_description(graph, output_node),
        )
        _check_entry_shape(entry)
        ont.entries[name] = entry
    return ont


_NAME_RE = re.compile(r"^(all[A-Z]\w*|get[A-Z]\w*By[A-Z]\w*)$")


def _check_entry_shape(entry: ServiceDescription) -> None:
    if not _NAME_RE.match(entry.name):
        raise ParseError(f"service name {entry.name!r} matches neither allX nor getYByZ")
    for d in (entry.input, entry.output):
        if depth(d) > 8:
            raise ParseError(f"service {entry.name!r}: description too deep")
    if entry.input == Named(OWL_THING):
        return
    input_members = set(intersection_members(entry.input))
    output_members = set(intersection_members(entry.output))
    if not input_members <= output_members or not output_members - input_members:
        raise ParseError(
            f"service {entry.name!r}: output must extend the input description"
        )


def validate_description(entry: ServiceDescription, domain: DomainOntology) -> None:
    """Every class/property a description references must be declared."""
    for d in (entry.input, entry.output):
        for prop in properties_of(d):
            if not domain.has_property(prop):
                raise DanglingReference(prop)
        for cls in named_classes_of(d):
            if not domain.has_class(cls):
                raise DanglingReference(cls)


def validate_service_ontology(svc: ServiceOntology, domain: DomainOntology) -> None:
    for entry in svc.entries.values():
        validate_description(entry, domain)


# ---------------------------------------------------------------------------
# Entity inventory
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class InventoryEntry:
    iri: str          # full IRI of the entity (or datatype)
    kind: str
    scope: str        # "" for domain entities; "service/property" for datatype uses
    fingerprint: str

    @property
    def key(self) -> Tuple[str, str, str]:
        return (self.iri, self.kind, self.scope)


@dataclass
class EntityInventory:
    entries: Dict[Tuple[str, str, str], InventoryEntry] = field(default_factory=dict)

    def add(self, entry: InventoryEntry) -> None:
        self.entries[entry.key] = entry

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(sorted(self.entries.values(),
                           key=lambda e: (KIND_ORDER[e.kind], e.iri, e.scope)))

    def has(self, iri: str, kind: str) -> bool:
        return any(e.iri == iri and e.kind == kind for e in self.entries.values())


def _fingerprint(axioms: List) -> str:
    canonical = json.dumps(sorted(json.dumps(a, sort_keys=True) for a in axioms))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]


def _mask(value: Optional[str], own: str) -> Optional[str]:
    return _PLACEHOLDER if value == own else value


def inventory_domain(ont: DomainOntology) -> EntityInventory:
    inv = EntityInventory()
    for decl in ont.classes.values():
        axioms = [["class", decl.label]]
        axioms += [["subClassOf", _mask(s, decl.iri)] for s in decl.superclasses]
        inv.add(InventoryEntry(decl.iri, KIND_CLASS, "", _fingerprint(axioms)))
    for decl in ont.object_properties.values():
        axioms = [["object-property", decl.label],
                  ["domain", _mask(decl.domain, decl.iri)],
                  ["range", _mask(decl.range, decl.iri)]]
        inv.add(InventoryEntry(decl.iri, KIND_OBJECT_PROPERTY, "", _fingerprint(axioms)))
    for decl in ont.data_properties.values():
        axioms = [["data-property", decl.label], ["range", decl.range]]
        inv.add(InventoryEntry(decl.iri, KIND_DATA_PROPERTY, "", _fingerprint(axioms)))
    return inv


def _description_shape(d: ClassDescription, own: str) -> object:
    """JSON-able structural shape of a description with `own` masked out."""
    if isinstance(d, Named):
        return ["named", _mask(d.iri, own)]
    if isinstance(d, IntersectionOf):
        return ["and"] + [_description_shape(m, own) for m in d.members]
    if isinstance(d, ObjectSomeValuesFrom):
        return ["osome", _mask(d.prop, own), _description_shape(d.inner, own)]
    if isinstance(d, ObjectHasValue):
        return ["ohas", _mask(d.prop, own), repr(d.value)]
    if isinstance(d, DataSomeValuesFrom):
        return ["dsome", _mask(d.prop, own), _mask(d.datatype, own)]
    if isinstance(d, DataHasValue):
        return ["dhas", _mask(d.prop, own), repr(d.literal)]
    raise ValueError(d)


def inventory_service(svc: ServiceOntology) -> EntityInventory:
    """One entry per referenced class/property; datatype uses are scoped to
    the (service, property) pair so that a new use is a new entity."""
    inv = EntityInventory()
    classes: Dict[str, List] = {}
    obj_props: Dict[str, List] = {}
    data_props: Dict[str, List] = {}
    uses: Dict[Tuple[str, str, str], List] = {}

    for entry in sorted(svc.entries.values(), key=lambda e: e.name):
        for role, d in (("input", entry.input), ("output", entry.output)):
            for cls in named_classes_of(d):
                if cls == OWL_THING:
                    continue
                classes.setdefault(cls, []).append(
                    [entry.name, role, _description_shape(d, cls)])
            for prop, kind_map in _property_uses(d):
                target = obj_props if kind_map == "object" else data_props
                target.setdefault(prop, []).append(
                    [entry.name, role, _description_shape(d, prop)])
            for prop, dt in datatypes_of(d):
                # The fingerprint omits the property so that renaming the
                # property pairs the old and new use instead of churning them.
                uses.setdefault((dt, entry.name, prop), []).append([entry.name, role])

    for iri, axioms in classes.items():
        inv.add(InventoryEntry(iri, KIND_CLASS, "", _fingerprint(axioms)))
    for iri, axioms in obj_props.items():
        inv.add(InventoryEntry(iri, KIND_OBJECT_PROPERTY, "", _fingerprint(axioms)))
    for iri, axioms in data_props.items():
        inv.add(InventoryEntry(iri, KIND_DATA_PROPERTY, "", _fingerprint(axioms)))
    for (dt, service, prop), axioms in uses.items():
        scope = f"{service}/{local_name(prop)}"
        inv.add(InventoryEntry(dt, KIND_DATATYPE_USE, scope, _fingerprint(axioms)))
    return inv


def _property_uses(d: ClassDescription):
    if isinstance(d, (ObjectSomeValuesFrom, ObjectHasValue)):
        yield (d.prop, "object")
    if isinstance(d, (DataSomeValuesFrom, DataHasValue)):
        yield (d.prop, "data")
    if isinstance(d, ObjectSomeValuesFrom):
        yield from _property_uses(d.inner)
    if isinstance(d, IntersectionOf):
        for m in d.members:
            yield from _property_uses(m)


def inventory_schema(schema) -> EntityInventory:
    """Source-schema inventory: tables and columns share the diff taxonomy.

    Column entries are named table.column; fingerprints mask the entity's own
    name, so renaming a column everywhere is detectable the same way ontology
    renames are. Index changes are out of scope.
    """
    inv = EntityInventory()
    for tdef in schema.tables.values():
        table_axioms = [["table"], ["columns", len(tdef.columns)]]
        inv.add(InventoryEntry(tdef.name, KIND_TABLE, "", _fingerprint(table_axioms)))
        for position, column in enumerate(tdef.columns):
            axioms = [["column", column.type, position],
                      ["pk", column.pk],
                      ["fk", list(column.fk) if column.fk else None]]
            inv.add(InventoryEntry(f"{tdef.name}.{column.name}", KIND_COLUMN,
                                   tdef.name, _fingerprint(axioms)))
    return inv


def inventory(ont) -> EntityInventory:
    """Inventory of any diffable flavor: ontologies or a relational schema."""
    from .relational import RelationalSchema

    if isinstance(ont, DomainOntology):
        return inventory_domain(ont)
    if isinstance(ont, ServiceOntology):
        return inventory_service(ont)
    if isinstance(ont, RelationalSchema):
        return inventory_schema(ont)
    raise TypeError(f"cannot inventory {type(ont).__name__}")
