from __future__ import annotations

import json

from conftest import CORE_WORKSPACE, FIXTURES

from semfed.cli import main

CORE = FIXTURES / "core"
WS = ["--workspace", str(CORE_WORKSPACE)]


def run(capsys, *argv) -> tuple[int, str]:
    code = main(list(argv))
    return code, capsys.readouterr().out


def test_status_fresh_boot_all_active(capsys):
    code, out = run(capsys, "status", *WS, "--json")
    assert code == 0
    rows = json.loads(out)
    assert len(rows) == 4
    assert all(r["status"] == "active" for r in rows)


def test_status_human_output(capsys):
    code, out = run(capsys, "status", *WS)
    assert code == 0
    assert out.count("active") == 4


def test_query_by_file_and_by_saved_name(capsys):
    code, out = run(capsys, "query", str(CORE / "queries" / "q1.rq"), *WS, "--json")
    assert code == 0
    assert len(json.loads(out)["rows"]) == 3

    code, out = run(capsys, "query",
                    "Which indoor residual sprayings used permethrin as an insecticide?",
                    *WS, "--json")
    assert code == 0
    assert len(json.loads(out)["rows"]) == 3


def test_query_inline_text(capsys):
    text = ('PREFIX mal: <http://fixture.local/vocab/malaria#> '
            'SELECT ?x WHERE { ?x a mal:IndoorResidualSpraying }')
    code, out = run(capsys, "query", text, *WS, "--json")
    assert code == 0
    assert len(json.loads(out)["rows"]) == 5


def test_query_syntax_error_exits_2(capsys):
    code, out = run(capsys, "query", "SELECT WHERE oops", *WS, "--json")
    assert code == 2
    assert json.loads(out)["code"] == "ParseError"


def test_diff_service_ontologies(capsys):
    code, out = run(capsys, "diff",
                    str(CORE / "services" / "svc-v1.ttl"),
                    str(CORE / "services" / "svc-v2.ttl"),
                    *WS, "--json")
    assert code == 0
    events = json.loads(out)
    assert [e["entity_added"] for e in events] == ["has_mode_of_action", "xsd:string"]
    assert all(e["affected_service"] == ["getNameByInsecticideId"] for e in events)


def test_query_list_mirrors_saved_query_listing(capsys):
    code, out = run(capsys, "query", "--list", *WS, "--json")
    assert code == 0
    rows = {r["name"]: r["status"] for r in json.loads(out)}
    assert rows["Which indoor residual sprayings used permethrin as an insecticide?"] \
        == "plannable"
    assert "unanswerable" in rows.values()


def test_diff_schema_files(capsys, tmp_path):
    old = (CORE / "schema.txt").read_text()
    (tmp_path / "old.txt").write_text(old)
    (tmp_path / "new.txt").write_text(old.replace(", year int,", ", season int,"))
    code, out = run(capsys, "diff", str(tmp_path / "old.txt"),
                    str(tmp_path / "new.txt"), *WS, "--json")
    assert code == 0
    events = json.loads(out)
    assert len(events) == 1
    assert events[0]["entity_renamed"] == {"from": "spraying.year",
                                           "to": "spraying.season"}
    assert events[0]["affected_service"] == []


def test_rebuild_on_active_service_exits_2(capsys):
    code, out = run(capsys, "rebuild", "getNameByInsecticideId", *WS, "--json")
    assert code == 2
    assert json.loads(out)["code"] == "NotInactive"


def test_replay_scenario_transcript(capsys):
    code, out = run(capsys, "replay-scenario", *WS)
    assert code == 0
    assert out.strip().endswith(
        "rebuilt: getNameByInsecticideId; extended query rows: 3")

    code, out = run(capsys, "replay-scenario", *WS, "--json")
    assert code == 0
    transcript = json.loads(out)
    assert transcript["summary"] == \
        "rebuilt: getNameByInsecticideId; extended query rows: 3"
    assert transcript["time_of_rebuild"] == "2018-01-23T09:03:15"


def test_replay_scenario_is_deterministic(capsys):
    _, first = run(capsys, "replay-scenario", *WS, "--json")
    _, second = run(capsys, "replay-scenario", *WS, "--json")
    a, b = json.loads(first), json.loads(second)
    a.pop("workspace"), b.pop("workspace")
    assert a == b
