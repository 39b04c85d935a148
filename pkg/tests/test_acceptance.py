"""Acceptance suite: one test per exit criterion, each printing a PASS line.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
lines. Everything here runs against the bundled fixture workspace with an
injected clock; expected values are either frozen from the independent
oracles in oracles.py or asserted by exact construction.
"""

from __future__ import annotations

import itertools
import json
import random
import urllib.error
import urllib.request

import pytest

from conftest import BOOT_TS, CORE_WORKSPACE, FIXTURES, boot_core
from oracles import classify_oracle, conjunctive_answers, rule_closure
from test_classify import UNIVERSE, ONT as CLASSIFY_ONT, _description_family, A, B
from test_ontology import rename_entity
from test_queries import Q1_TEXT, random_chain_query

from semfed.changes import RENAMED, diff
from semfed.descriptions import classify, decode_description
from semfed.forge import mint_iri
from semfed.httpd import AppServer
from semfed.ontology import SVC_INPUT, SVC_OUTPUT, inventory, load_ontology
from semfed.queries import UnresolvablePattern, execute, parse_query, plan
from semfed.rdf import Graph, Iri, RDF_TYPE, Triple, parse_turtle, serialize_turtle
from semfed.workspace import replay_scenario
from test_changes import _random_inventory
from test_turtle import random_graph

MAL = "http://fixture.local/vocab/malaria#"
CORE = FIXTURES / "core"

Q1_NAME = "Which indoor residual sprayings used permethrin as an insecticide?"
Q1_SERVICES = [
    "allPublicHealthActivities",
    "getNameByPublicHealthActivityId",
    "getInsecticideIdByIndoorResidualSprayingId",
    "getNameByInsecticideId",
]

EXPECTED_CHANGE_EVENTS = [
    {
        "timestamp": BOOT_TS,
        "description_of_change": "An entity is added to the output definition",
        "entity_added": "has_mode_of_action",
        "entity_deleted": None,
        "entity_renamed": None,
        "affected_service": ["getNameByInsecticideId"],
        "affected_query": [Q1_NAME],
    },
    {
        "timestamp": BOOT_TS,
        "description_of_change": "An entity is added to the output definition",
        "entity_added": "xsd:string",
        "entity_deleted": None,
        "entity_renamed": None,
        "affected_service": ["getNameByInsecticideId"],
        "affected_query": [Q1_NAME],
    },
]


def _report(criterion: str) -> None:
    print(f"PASS - {criterion}")


def test_q1_end_to_end():
    ws = boot_core()
    query = parse_query(Q1_TEXT)
    built = plan(query, ws.registry)
    assert built.services() == Q1_SERVICES

    table = execute(built, query, ws.registry)
    universe = rule_closure(ws.rules, ws.database, ws.domain_ontology)
    expected = conjunctive_answers(universe, query, ws.domain_ontology)
    assert set(table.rows) == set(expected)
    assert list(table.rows) == expected
    assert len(table.rows) == 3
    _report("Q1 end-to-end: four-service plan and oracle-equal rows")


def test_change_scenario_replay():
    ws = boot_core()
    events = ws.apply_ontology_version(
        "service", (CORE / "services" / "svc-v2.ttl").read_text(), "v2")
    got = [{k: v for k, v in e.to_json().items()
            if k not in ("entity_iri", "entity_kind")} for e in events]
    assert got == EXPECTED_CHANGE_EVENTS

    assert ws.registry.get("getNameByInsecticideId").status.state == "inactive"

    with pytest.raises(UnresolvablePattern) as err:
        ws.run_saved_query(Q1_NAME)
    assert err.value.predicate == MAL + "has_name"

    ws.apply_ontology_version(
        "domain", (CORE / "ontology" / "domain-v2.ttl").read_text(), "v2")
    ws.use_rules("v2")
    ws.clock.set("2018-01-23T09:03:15")
    ws.request_rebuild("getNameByInsecticideId")
    outcomes = ws.run_rebuild_queue()
    assert [(o.service, o.state) for o in outcomes] == \
        [("getNameByInsecticideId", "active")]
    service = ws.registry.get("getNameByInsecticideId")
    assert service.status.is_active
    assert service.time_of_rebuild == "2018-01-23T09:03:15"

    extended_name = ("Which indoor residual spraying used permethrin as an "
                     "insecticide and which kind of mosquitoes will be affected by it?")
    table = ws.run_saved_query(extended_name)
    universe = rule_closure(ws.rules, ws.database, ws.domain_ontology)
    extended_query = next(q for n, q in ws.parsed_queries() if n == extended_name)
    assert list(table.rows) == conjunctive_answers(universe, extended_query,
                                                   ws.domain_ontology)
    assert len(table.rows) == 3
    assert all(row[2].lexical == "contact & airborne" for row in table.rows)
    _report("Change-scenario replay: expected feed rows, inactivation, rebuild, "
            "extended query")


def test_rebuild_failure_path():
    ws = boot_core()
    ws.apply_ontology_version(
        "service", (CORE / "services" / "svc-v2.ttl").read_text(), "v2")
    ws.request_rebuild("getNameByInsecticideId")
    outcomes = ws.run_rebuild_queue()
    assert outcomes[0].state == "inactive"
    assert outcomes[0].detail == "MissingMapping(has_mode_of_action)"
    service = ws.registry.get("getNameByInsecticideId")
    assert not service.status.is_active
    assert service.status.reasons[-1] == "MissingMapping(has_mode_of_action)"
    _report("Rebuild-failure path: stale rules leave the service inactive with "
            "MissingMapping(has_mode_of_action)")


def test_diff_algebra_properties():
    rnd = random.Random(20180123)
    for _ in range(200):
        a = _random_inventory(rnd)
        b = _random_inventory(rnd)
        assert diff(a, a) == []
        forward, backward = diff(a, b), diff(b, a)
        key = lambda c: (c.entity_kind, c.iri, c.scope)
        assert {key(c) for c in forward if c.kind == "added"} == \
            {key(c) for c in backward if c.kind == "deleted"}
        assert {key(c) for c in forward if c.kind == "deleted"} == \
            {key(c) for c in backward if c.kind == "added"}
        assert {(c.entity_kind, c.renamed_from, c.iri)
                for c in forward if c.kind == RENAMED} == \
            {(c.entity_kind, c.iri, c.renamed_from)
             for c in backward if c.kind == RENAMED}

    ont = load_ontology((CORE / "ontology" / "domain-v1.ttl").read_text(), "v1")
    entities = list(ont.classes) + list(ont.object_properties) + list(ont.data_properties)
    reported = 0
    correct = 0
    for iri in entities:
        changes = diff(inventory(ont), inventory(rename_entity(ont, iri, iri + "X")))
        renames = [c for c in changes if c.kind == RENAMED]
        reported += len(renames)
        correct += sum(1 for c in renames
                       if c.renamed_from == iri and c.iri == iri + "X")
        assert len(changes) == 1, iri
    assert reported == correct == len(entities)  # 100% precision and recall
    _report("Diff algebra: identity, inverse symmetry over 200 random pairs, "
            "exact rename recovery")


def test_classification_oracle_equivalence():
    descriptions = _description_family()
    checked = 0
    mismatches = 0
    for size in range(len(UNIVERSE) + 1):
        for subset in itertools.combinations(UNIVERSE, size):
            graph = Graph(subset)
            for desc in descriptions:
                for node in (A, B):
                    checked += 1
                    if classify(graph, node, desc, CLASSIFY_ONT) != \
                            classify_oracle(graph, node, desc, CLASSIFY_ONT):
                        mismatches += 1
    assert mismatches == 0
    assert checked == (2 ** len(UNIVERSE)) * len(descriptions) * 2
    _report(f"Classification oracle equivalence: {checked} checks over the "
            "exhaustive corpus, zero mismatches")


def test_plan_execute_equivalence_on_random_queries():
    ws = boot_core()
    universe = rule_closure(ws.rules, ws.database, ws.domain_ontology)
    rnd = random.Random(20180115)
    for _ in range(100):
        query = random_chain_query(rnd)
        table = execute(plan(query, ws.registry), query, ws.registry)
        assert list(table.rows) == conjunctive_answers(universe, query,
                                                       ws.domain_ontology)
    _report("Plan/execute equivalence: 100 random queries equal the "
            "conjunctive-query oracle")


def test_service_protocol_conformance():
    app = AppServer(boot_core(), port=0).start()
    try:
        base = app.url
        registry = app.workspace.registry
        svc_ns = "http://fixture.local/vocab/service#"

        for name in registry.names():
            with urllib.request.urlopen(f"{base}/services/{name}") as response:
                assert response.status == 200
                graph = parse_turtle(response.read().decode("utf-8"))
            node = Iri(svc_ns + name)
            deployed = registry.get(name).description
            assert decode_description(graph, graph.value(node, Iri(SVC_INPUT))) \
                == deployed.input
            assert decode_description(graph, graph.value(node, Iri(SVC_OUTPUT))) \
                == deployed.output

        fn = app.workspace.rules.identity_functions["identityForInsecticide"]
        batch = Graph()
        for key in (1, 2):
            batch.add(Triple(mint_iri(fn, key), Iri(RDF_TYPE), Iri(MAL + "Insecticide")))
        request = urllib.request.Request(
            f"{base}/services/getNameByInsecticideId",
            data=serialize_turtle(batch).encode(),
            headers={"Content-Type": "text/turtle"})
        with urllib.request.urlopen(request) as response:
            out = parse_turtle(response.read().decode("utf-8"))
        assert len(out.subjects()) >= 2

        from semfed.forge import Status
        registry.set_status("getNameByInsecticideId", Status.inactive("changed"))
        request = urllib.request.Request(
            f"{base}/services/getNameByInsecticideId",
            data=serialize_turtle(batch).encode(),
            headers={"Content-Type": "text/turtle"})
        with pytest.raises(urllib.error.HTTPError) as err:
            urllib.request.urlopen(request)
        assert err.value.code == 409
    finally:
        app.shutdown()
    _report("Service protocol conformance: descriptions round-trip, batch echo "
            "holds, inactive POST is 409")


def test_turtle_round_trip_500_graphs():
    rnd = random.Random(20180614)
    for _ in range(500):
        graph = random_graph(rnd)
        assert parse_turtle(serialize_turtle(graph)) == graph
    _report("Turtle round trip: parse(serialize(g)) = g on 500 randomized graphs")


def test_full_replay_is_deterministic():
    first = replay_scenario(CORE_WORKSPACE)
    second = replay_scenario(CORE_WORKSPACE)
    assert first == second
    assert first["summary"] == \
        "rebuilt: getNameByInsecticideId; extended query rows: 3"
    _report("Scenario replay determinism: two runs produce identical transcripts")
