from __future__ import annotations

import pytest

from conftest import FIXTURES

from semfed.descriptions import Named
from semfed.ontology import (
    ClassDecl,
    CycleError,
    DanglingReference,
    DomainOntology,
    PropertyDecl,
    KIND_CLASS,
    KIND_DATA_PROPERTY,
    KIND_DATATYPE_USE,
    KIND_OBJECT_PROPERTY,
    inventory,
    load_ontology,
    load_service_ontology,
    validate_service_ontology,
)
from semfed.rdf import OWL_THING, XSD_STRING

MAL = "http://fixture.local/vocab/malaria#"

DOMAIN_V1 = (FIXTURES / "core" / "ontology" / "domain-v1.ttl").read_text()
SVC_V1 = (FIXTURES / "core" / "services" / "svc-v1.ttl").read_text()
SVC_V2 = (FIXTURES / "core" / "services" / "svc-v2.ttl").read_text()


def test_fixture_domain_ontology_contents():
    ont = load_ontology(DOMAIN_V1, version="v1")
    assert set(ont.classes) == {
        MAL + "PublicHealthActivity", MAL + "IndoorResidualSpraying",
        MAL + "Insecticide", MAL + "GeographicRegion",
    }
    assert set(ont.object_properties) == {MAL + "has_insecticide", MAL + "located_in"}
    assert set(ont.data_properties) == {MAL + "has_name"}
    assert ont.is_subclass(MAL + "IndoorResidualSpraying", MAL + "PublicHealthActivity")
    assert ont.data_range(MAL + "has_name") == XSD_STRING


def test_subclass_cycle_rejected():
    text = """
    @prefix owl:  <http://www.w3.org/2002/07/owl#> .
    @prefix rdfs: <http://www.w3.org/2000/01/rdf-schema#> .
    @prefix ex:   <http://ex.org/> .
    ex:A a owl:Class ; rdfs:subClassOf ex:B .
    ex:B a owl:Class ; rdfs:subClassOf ex:A .
    """
    with pytest.raises(CycleError):
        load_ontology(text)


def test_empty_file_gives_empty_unversioned_ontology():
    ont = load_ontology("")
    assert ont.version == "unversioned"
    assert not ont.classes and not ont.object_properties and not ont.data_properties
    assert len(inventory(ont)) == 0


def test_undeclared_superclass_rejected():
    text = """
    @prefix owl:  <http://www.w3.org/2002/07/owl#> .
    @prefix rdfs: <http://www.w3.org/2000/01/rdf-schema#> .
    @prefix ex:   <http://ex.org/> .
    ex:A a owl:Class ; rdfs:subClassOf ex:Missing .
    """
    with pytest.raises(DanglingReference):
        load_ontology(text)


def test_individuals_require_declared_class():
    ok = """
    @prefix owl: <http://www.w3.org/2002/07/owl#> .
    @prefix ex:  <http://ex.org/> .
    ex:A a owl:Class .
    ex:i a ex:A .
    """
    ont = load_ontology(ok)
    assert ont.individuals == {"http://ex.org/i": "http://ex.org/A"}
    with pytest.raises(DanglingReference):
        load_ontology("""
        @prefix ex: <http://ex.org/> .
        ex:i a ex:Missing .
        """)


def test_domain_inventory_contains_has_name():
    inv = inventory(load_ontology(DOMAIN_V1, version="v1"))
    assert inv.has(MAL + "has_name", KIND_DATA_PROPERTY)
    assert inv.has(MAL + "IndoorResidualSpraying", KIND_CLASS)
    assert inv.has(MAL + "located_in", KIND_OBJECT_PROPERTY)


def test_service_ontology_loads_and_validates():
    svc = load_service_ontology(SVC_V1, version="v1")
    assert set(svc.entries) == {
        "allPublicHealthActivities", "getNameByPublicHealthActivityId",
        "getInsecticideIdByIndoorResidualSprayingId", "getNameByInsecticideId",
    }
    assert svc.entries["allPublicHealthActivities"].input == Named(OWL_THING)
    validate_service_ontology(svc, load_ontology(DOMAIN_V1, version="v1"))


def test_v2_service_ontology_needs_extended_domain():
    svc2 = load_service_ontology(SVC_V2, version="v2")
    with pytest.raises(DanglingReference) as err:
        validate_service_ontology(svc2, load_ontology(DOMAIN_V1, version="v1"))
    assert "has_mode_of_action" in err.value.iri


def test_single_service_v2_inventory_contains_new_entities():
    only = """
    @prefix svc: <http://fixture.local/vocab/service#> .
    @prefix owl: <http://www.w3.org/2002/07/owl#> .
    @prefix xsd: <http://www.w3.org/2001/XMLSchema#> .
    @prefix mal: <http://fixture.local/vocab/malaria#> .
    svc:getNameByInsecticideId a svc:Service ;
        svc:description "Retrieves the name of an insecticide" ;
        svc:input mal:Insecticide ;
        svc:output svc:getNameByInsecticideId_output .
    svc:getNameByInsecticideId_output a owl:Class ;
        owl:intersectionOf mal:Insecticide ;
        owl:intersectionOf [ owl:onProperty mal:has_name ; owl:someValuesFrom xsd:string ] ;
        owl:intersectionOf [ owl:onProperty mal:has_mode_of_action ; owl:someValuesFrom xsd:string ] .
    """
    inv = inventory(load_service_ontology(only, version="v2"))
    assert inv.has(MAL + "has_mode_of_action", KIND_DATA_PROPERTY)
    assert inv.has(XSD_STRING, KIND_DATATYPE_USE)


def test_inventory_deterministic_under_declaration_order(rng):
    lines = [l for l in DOMAIN_V1.splitlines() if l.strip()]
    prefixes = [l for l in lines if l.startswith("@prefix")]
    blocks = "\n".join(l for l in lines if not l.startswith("@prefix")
                       and not l.startswith("#")).split(" .")
    blocks = [b.strip() + " ." for b in blocks if b.strip()]
    for _ in range(5):
        rng.shuffle(blocks)
        shuffled = "\n".join(prefixes) + "\n" + "\n".join(blocks)
        assert inventory(load_ontology(shuffled)).entries == \
            inventory(load_ontology(DOMAIN_V1)).entries


def rename_entity(ont: DomainOntology, old: str, new: str) -> DomainOntology:
    """Rename one IRI everywhere it occurs; the oracle for rename detection."""
    def swap(value):
        return new if value == old else value

    renamed = DomainOntology(version=ont.version + "-renamed")
    for decl in ont.classes.values():
        renamed.classes[swap(decl.iri)] = ClassDecl(
            swap(decl.iri), decl.label, tuple(swap(s) for s in decl.superclasses))
    for decl in ont.object_properties.values():
        renamed.object_properties[swap(decl.iri)] = PropertyDecl(
            swap(decl.iri), decl.label,
            swap(decl.domain) if decl.domain else None,
            swap(decl.range) if decl.range else None)
    for decl in ont.data_properties.values():
        renamed.data_properties[swap(decl.iri)] = PropertyDecl(
            swap(decl.iri), decl.label, None, decl.range)
    for iri, cls in ont.individuals.items():
        renamed.individuals[swap(iri)] = swap(cls)
    return renamed


def test_fingerprints_invariant_under_rename():
    ont = load_ontology(DOMAIN_V1, version="v1")
    base = inventory(ont)
    for iri in list(ont.classes) + list(ont.object_properties) + list(ont.data_properties):
        renamed = rename_entity(ont, iri, iri + "Renamed")
        inv = inventory(renamed)
        old_entry = next(e for e in base if e.iri == iri)
        new_entry = next(e for e in inv if e.iri == iri + "Renamed")
        assert old_entry.fingerprint == new_entry.fingerprint
        assert old_entry.kind == new_entry.kind
