"""Restricted class descriptions and closed-world instance classification.

A description is one of: a named class, an intersection, an existential
restriction on an object or data property, or a has-value restriction.
Descriptions type service inputs and outputs; classify() decides whether a
node in a graph structurally satisfies a description, using only explicit
rdf:type triples plus the declared subclass hierarchy (no inference).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Tuple, Union

from .errors import ParseError
from .rdf import (
    Blank,
    Graph,
    Iri,
    Literal,
    OWL_EQUIVALENT_CLASS,
    OWL_HAS_VALUE,
    OWL_INTERSECTION_OF,
    OWL_ON_PROPERTY,
    OWL_SOME_VALUES_FROM,
    OWL_THING,
    RDF_TYPE,
    SUPPORTED_DATATYPES,
    Term,
    Triple,
    term_key,
)

MAX_DEPTH = 8


class UnknownProperty(Exception):
    """A description references a property the ontology does not declare."""

    def __init__(self, iri: str):
        super().__init__(f"unknown property: {iri}")
        self.iri = iri


@dataclass(frozen=True)
class Named:
    iri: str


@dataclass(frozen=True)
class ObjectSomeValuesFrom:
    prop: str
    inner: "ClassDescription"


@dataclass(frozen=True)
class ObjectHasValue:
    prop: str
    value: Term


@dataclass(frozen=True)
class DataSomeValuesFrom:
    prop: str
    datatype: str


@dataclass(frozen=True)
class DataHasValue:
    prop: str
    literal: Literal


@dataclass(frozen=True)
class IntersectionOf:
    members: Tuple["ClassDescription", ...]

    def __post_init__(self):
        if len(self.members) < 2:
            raise ValueError("intersection needs at least 2 members")
        # Canonical member order: '; '-chained encoding is unordered anyway.
        object.__setattr__(self, "members", tuple(sorted(self.members, key=description_key)))


ClassDescription = Union[Named, IntersectionOf, ObjectSomeValuesFrom,
                         ObjectHasValue, DataSomeValuesFrom, DataHasValue]


def description_key(d: ClassDescription) -> str:
    """Stable textual form used for ordering and equality-friendly dumps."""
    if isinstance(d, Named):
        return f"named({d.iri})"
    if isinstance(d, ObjectSomeValuesFrom):
        return f"osome({d.prop},{description_key(d.inner)})"
    if isinstance(d, ObjectHasValue):
        return f"ohas({d.prop},{term_key(d.value)})"
    if isinstance(d, DataSomeValuesFrom):
        return f"dsome({d.prop},{d.datatype})"
    if isinstance(d, DataHasValue):
        return f"dhas({d.prop},{term_key(d.literal)})"
    return "and(" + ",".join(description_key(m) for m in d.members) + ")"


def intersection_members(d: ClassDescription) -> Tuple[ClassDescription, ...]:
    """Members of an intersection, or the description itself as a 1-tuple."""
    if isinstance(d, IntersectionOf):
        return d.members
    return (d,)


def depth(d: ClassDescription) -> int:
    if isinstance(d, (Named, ObjectHasValue, DataSomeValuesFrom, DataHasValue)):
        return 1
    if isinstance(d, ObjectSomeValuesFrom):
        return 1 + depth(d.inner)
    return 1 + max(depth(m) for m in d.members)


def properties_of(d: ClassDescription) -> Iterator[str]:
    """All property IRIs referenced anywhere in a description."""
    if isinstance(d, (ObjectSomeValuesFrom, ObjectHasValue, DataSomeValuesFrom, DataHasValue)):
        yield d.prop
    if isinstance(d, ObjectSomeValuesFrom):
        yield from properties_of(d.inner)
    if isinstance(d, IntersectionOf):
        for m in d.members:
            yield from properties_of(m)


def named_classes_of(d: ClassDescription) -> Iterator[str]:
    if isinstance(d, Named):
        yield d.iri
    elif isinstance(d, ObjectSomeValuesFrom):
        yield from named_classes_of(d.inner)
    elif isinstance(d, IntersectionOf):
        for m in d.members:
            yield from named_classes_of(m)


def datatypes_of(d: ClassDescription) -> Iterator[Tuple[str, str]]:
    """(property, datatype) pairs for every datatype use in a description."""
    if isinstance(d, DataSomeValuesFrom):
        yield (d.prop, d.datatype)
    elif isinstance(d, DataHasValue):
        yield (d.prop, d.literal.datatype)
    elif isinstance(d, ObjectSomeValuesFrom):
        yield from datatypes_of(d.inner)
    elif isinstance(d, IntersectionOf):
        for m in d.members:
            yield from datatypes_of(m)


def mentions(d: ClassDescription, iri: str) -> bool:
    """True if the description references the IRI as class, property or datatype."""
    if iri in properties_of(d):
        return True
    if iri in named_classes_of(d):
        return True
    return any(dt == iri for _, dt in datatypes_of(d))


# ---------------------------------------------------------------------------
# Graph encoding
#
# Convention: a structured description node carries owl:onProperty with
# owl:someValuesFrom / owl:hasValue, or one owl:intersectionOf triple per
# member ('; '-chained, not an RDF collection). A bare IRI with none of those
# is a named class.
# ---------------------------------------------------------------------------

_ON_PROPERTY = Iri(OWL_ON_PROPERTY)
_SOME = Iri(OWL_SOME_VALUES_FROM)
_HAS_VALUE = Iri(OWL_HAS_VALUE)
_INTERSECTION = Iri(OWL_INTERSECTION_OF)
_EQUIVALENT = Iri(OWL_EQUIVALENT_CLASS)


class _BlankAllocator:
    def __init__(self, graph: Graph):
        self.graph = graph
        self.counter = 0

    def fresh(self) -> Blank:
        while True:
            node = Blank(f"d{self.counter}")
            self.counter += 1
            if not any(True for _ in self.graph.triples(node, None, None)):
                return node


def encode_description(d: ClassDescription, graph: Graph, alloc: _BlankAllocator = None) -> Term:
    """Add the triples encoding d to graph; return the node denoting d."""
    alloc = alloc or _BlankAllocator(graph)
    if isinstance(d, Named):
        return Iri(d.iri)
    node = alloc.fresh()
    if isinstance(d, IntersectionOf):
        for m in d.members:
            graph.add(Triple(node, _INTERSECTION, encode_description(m, graph, alloc)))
    elif isinstance(d, ObjectSomeValuesFrom):
        graph.add(Triple(node, _ON_PROPERTY, Iri(d.prop)))
        graph.add(Triple(node, _SOME, encode_description(d.inner, graph, alloc)))
    elif isinstance(d, DataSomeValuesFrom):
        graph.add(Triple(node, _ON_PROPERTY, Iri(d.prop)))
        graph.add(Triple(node, _SOME, Iri(d.datatype)))
    elif isinstance(d, ObjectHasValue):
        graph.add(Triple(node, _ON_PROPERTY, Iri(d.prop)))
        graph.add(Triple(node, _HAS_VALUE, d.value))
    elif isinstance(d, DataHasValue):
        graph.add(Triple(node, _ON_PROPERTY, Iri(d.prop)))
        graph.add(Triple(node, _HAS_VALUE, d.literal))
    else:
        raise ValueError(f"cannot encode {d!r}")
    return node


def decode_description(graph: Graph, node: Term, _depth: int = 1) -> ClassDescription:
    """Reconstruct a description from its graph encoding rooted at node."""
    if _depth > MAX_DEPTH:
        raise ParseError(f"description nesting exceeds {MAX_DEPTH}")
    if isinstance(node, Literal):
        raise ParseError("a literal cannot denote a class description")
    members = graph.objects(node, _INTERSECTION)
    if members:
        if len(members) < 2:
            raise ParseError("intersection encoding needs at least 2 members")
        decoded = tuple(decode_description(graph, m, _depth + 1) for m in members)
        return IntersectionOf(decoded)
    prop = graph.value(node, _ON_PROPERTY)
    if prop is not None:
        if not isinstance(prop, Iri):
            raise ParseError("owl:onProperty value must be an IRI")
        some = graph.value(node, _SOME)
        if some is not None:
            if isinstance(some, Iri) and some.value in SUPPORTED_DATATYPES:
                return DataSomeValuesFrom(prop.value, some.value)
            return ObjectSomeValuesFrom(prop.value, decode_description(graph, some, _depth + 1))
        value = graph.value(node, _HAS_VALUE)
        if value is not None:
            if isinstance(value, Literal):
                return DataHasValue(prop.value, value)
            return ObjectHasValue(prop.value, value)
        raise ParseError("restriction node lacks someValuesFrom/hasValue")
    equivalent = graph.value(node, _EQUIVALENT)
    if equivalent is not None:
        return decode_description(graph, equivalent, _depth + 1)
    if isinstance(node, Iri):
        return Named(node.value)
    raise ParseError("blank description node has no recognized structure")


# ---------------------------------------------------------------------------
# Classification
# ---------------------------------------------------------------------------


def validate_properties(d: ClassDescription, ontology) -> None:
    for prop in properties_of(d):
        if not ontology.has_property(prop):
            raise UnknownProperty(prop)


def classify(graph: Graph, node: Term, d: ClassDescription, ontology) -> bool:
    """Closed-world satisfaction of d by node within graph.

    Named classes match explicit rdf:type triples for the class itself or any
    declared subclass; restrictions demand witnessing triples in the graph;
    intersections require every member. Raises UnknownProperty when d uses a
    property the ontology does not declare.
    """
    validate_properties(d, ontology)
    return _classify(graph, node, d, ontology)


def _classify(graph: Graph, node: Term, d: ClassDescription, ontology) -> bool:
    if isinstance(d, Named):
        if d.iri == OWL_THING:
            return True
        for t in graph.triples(node, Iri(RDF_TYPE), None):
            if isinstance(t.object, Iri):
                if t.object.value == d.iri or ontology.is_subclass(t.object.value, d.iri):
                    return True
        return False
    if isinstance(d, IntersectionOf):
        return all(_classify(graph, node, m, ontology) for m in d.members)
    if isinstance(d, ObjectSomeValuesFrom):
        return any(
            not isinstance(t.object, Literal) and _classify(graph, t.object, d.inner, ontology)
            for t in graph.triples(node, Iri(d.prop), None)
        )
    if isinstance(d, ObjectHasValue):
        return Triple(node, Iri(d.prop), d.value) in graph
    if isinstance(d, DataSomeValuesFrom):
        return any(
            isinstance(t.object, Literal) and t.object.datatype == d.datatype
            for t in graph.triples(node, Iri(d.prop), None)
        )
    if isinstance(d, DataHasValue):
        return Triple(node, Iri(d.prop), d.literal) in graph
    raise ValueError(f"unknown description {d!r}")
