from __future__ import annotations

import itertools
import random

import pytest

from oracles import classify_oracle

from semfed.descriptions import (
    DataHasValue,
    DataSomeValuesFrom,
    IntersectionOf,
    Named,
    ObjectHasValue,
    ObjectSomeValuesFrom,
    UnknownProperty,
    classify,
    decode_description,
    encode_description,
)
from semfed.ontology import load_ontology
from semfed.rdf import (
    Graph,
    Iri,
    Literal,
    OWL_THING,
    RDF_TYPE,
    Triple,
    XSD_INTEGER,
    XSD_STRING,
)

VSMO_SPRAYING = "http://purl.obolibrary.org/obo/VSMO_0001957"

ONT_TEXT = """
@prefix owl:  <http://www.w3.org/2002/07/owl#> .
@prefix rdfs: <http://www.w3.org/2000/01/rdf-schema#> .
@prefix ex:   <http://ex.org/> .
@prefix obo:  <http://purl.obolibrary.org/obo/> .

ex:C a owl:Class .
ex:D a owl:Class ; rdfs:subClassOf ex:C .
obo:VSMO_0001957 a owl:Class .
ex:p a owl:ObjectProperty .
ex:q a owl:DatatypeProperty .
"""

ONT = load_ontology(ONT_TEXT, version="test")

A = Iri("http://ex.org/a")
B = Iri("http://ex.org/b")
C = "http://ex.org/C"
D = "http://ex.org/D"
P = "http://ex.org/p"
Q = "http://ex.org/q"


def test_direct_type_matches_named_class():
    g = Graph()
    g.add(Triple(A, Iri(RDF_TYPE), Iri(VSMO_SPRAYING)))
    assert classify(g, A, Named(VSMO_SPRAYING), ONT) is True


def test_owl_thing_accepts_anything():
    assert classify(Graph(), A, Named(OWL_THING), ONT) is True


def test_missing_edge_fails_existential():
    # Five unrelated triples, none of them the required has-edge.
    g = Graph()
    g.add(Triple(A, Iri(RDF_TYPE), Iri(C)))
    g.add(Triple(B, Iri(RDF_TYPE), Iri(C)))
    g.add(Triple(B, Iri(P), A))
    g.add(Triple(A, Iri(Q), Literal("x")))
    g.add(Triple(B, Iri(Q), Literal("y")))
    desc = ObjectSomeValuesFrom(P, Named(C))
    assert classify(g, A, desc, ONT) is classify_oracle(g, A, desc, ONT) is False


def test_subclass_satisfies_superclass():
    g = Graph()
    g.add(Triple(A, Iri(RDF_TYPE), Iri(D)))
    assert classify(g, A, Named(C), ONT) is True
    assert classify(g, A, Named(D), ONT) is True


def test_unknown_property_raises():
    with pytest.raises(UnknownProperty):
        classify(Graph(), A, DataSomeValuesFrom("http://ex.org/nope", XSD_STRING), ONT)


def test_has_value_requires_exact_triple():
    g = Graph()
    g.add(Triple(A, Iri(P), B))
    assert classify(g, A, ObjectHasValue(P, B), ONT) is True
    assert classify(g, A, ObjectHasValue(P, A), ONT) is False
    g.add(Triple(A, Iri(Q), Literal("5", XSD_INTEGER)))
    assert classify(g, A, DataHasValue(Q, Literal("5", XSD_INTEGER)), ONT) is True
    assert classify(g, A, DataHasValue(Q, Literal("5", XSD_STRING)), ONT) is False


def test_intersection_order_independence():
    g = Graph()
    g.add(Triple(A, Iri(RDF_TYPE), Iri(C)))
    g.add(Triple(A, Iri(Q), Literal("x")))
    members = (Named(C), DataSomeValuesFrom(Q, XSD_STRING))
    assert IntersectionOf(members) == IntersectionOf(members[::-1])
    assert classify(g, A, IntersectionOf(members), ONT) is True


def test_monotonicity_under_graph_growth(rng):
    descs = _description_family()
    for _ in range(150):
        g = _random_graph(rng)
        bigger = g.copy()
        for _ in range(rng.randint(1, 3)):
            bigger.add(rng.choice(UNIVERSE))
        for desc in descs:
            for node in (A, B):
                if classify(g, node, desc, ONT):
                    assert classify(bigger, node, desc, ONT)


# -- exhaustive oracle corpus --------------------------------------------------
#
# Universe of 10 candidate triples over two nodes; every subset is a graph of
# at most 10 triples, so the corpus enumerates all of them.

UNIVERSE = [
    Triple(A, Iri(RDF_TYPE), Iri(C)),
    Triple(A, Iri(RDF_TYPE), Iri(D)),
    Triple(B, Iri(RDF_TYPE), Iri(C)),
    Triple(B, Iri(RDF_TYPE), Iri(D)),
    Triple(A, Iri(P), A),
    Triple(A, Iri(P), B),
    Triple(B, Iri(P), A),
    Triple(B, Iri(P), B),
    Triple(A, Iri(Q), Literal("v", XSD_STRING)),
    Triple(B, Iri(Q), Literal("1", XSD_INTEGER)),
]


def _random_graph(rnd: random.Random) -> Graph:
    return Graph(rnd.sample(UNIVERSE, rnd.randint(0, len(UNIVERSE))))


def _description_family():
    return [
        Named(C),
        Named(D),
        Named(OWL_THING),
        ObjectSomeValuesFrom(P, Named(C)),
        ObjectSomeValuesFrom(P, Named(D)),
        ObjectSomeValuesFrom(P, ObjectSomeValuesFrom(P, Named(D))),
        ObjectHasValue(P, B),
        DataSomeValuesFrom(Q, XSD_STRING),
        DataSomeValuesFrom(Q, XSD_INTEGER),
        DataHasValue(Q, Literal("v", XSD_STRING)),
        IntersectionOf((Named(C), ObjectSomeValuesFrom(P, Named(C)))),
        IntersectionOf((Named(D), DataSomeValuesFrom(Q, XSD_STRING),
                        ObjectHasValue(P, A))),
    ]


def test_exhaustive_corpus_matches_oracle():
    descs = _description_family()
    mismatches = 0
    for size in range(len(UNIVERSE) + 1):
        for subset in itertools.combinations(UNIVERSE, size):
            g = Graph(subset)
            for desc in descs:
                for node in (A, B):
                    if classify(g, node, desc, ONT) != classify_oracle(g, node, desc, ONT):
                        mismatches += 1
    assert mismatches == 0


# -- encoding round trip --------------------------------------------------------


def test_description_encoding_round_trip():
    for desc in _description_family():
        g = Graph()
        node = encode_description(desc, g)
        assert decode_description(g, node) == desc
