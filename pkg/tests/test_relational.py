from __future__ import annotations

import pytest

from conftest import FIXTURES
from oracles import nested_loop_plan, sort_rows

from semfed.relational import (
    FkViolation,
    MissingFile,
    Param,
    ParamArityError,
    PkViolation,
    SchemaError,
    TypeMismatch,
    execute_plan,
    join,
    load_csv,
    parse_schema,
    project,
    render_sql,
    scan,
    select_eq,
)

CORE = FIXTURES / "core"
SCHEMA = parse_schema((CORE / "schema.txt").read_text())


@pytest.fixture()
def db():
    return load_csv(SCHEMA, CORE / "data")


def test_schema_parses_tables_and_fks():
    spraying = SCHEMA.table("spraying")
    assert spraying.column_names() == ["id", "name", "location.id", "year", "insecticide.id"]
    assert spraying.pk_column.name == "id"
    fk = dict((c.name, c.fk) for c in spraying.columns if c.fk)
    assert fk["location.id"] == ("geographicregion", "id")
    assert fk["insecticide.id"] == ("insecticide", "id")


def test_fixture_loads_three_tables(db):
    assert len(db) == 3
    assert len(db.rows("spraying")) == 5
    assert len(db.rows("insecticide")) == 2


def test_fixture_mode_of_action_values(db):
    tdef = db.tables["insecticide"].definition
    idx = tdef.index_of("mode.of.action")
    assert {row[idx] for row in db.rows("insecticide")} <= {"contact", "contact & airborne"}


def test_missing_csv(tmp_path):
    with pytest.raises(MissingFile):
        load_csv(SCHEMA, tmp_path)


def _write_core_csvs(tmp_path, spraying_rows):
    (tmp_path / "insecticide.csv").write_text(
        'id,name,"mode.of.action"\n1,DDT,contact\n2,Permethrin,contact & airborne\n')
    (tmp_path / "geographicregion.csv").write_text("id,name\n1,Kampala\n")
    (tmp_path / "spraying.csv").write_text(
        'id,name,"location.id",year,"insecticide.id"\n' + spraying_rows)


def test_dangling_fk_rejected(tmp_path):
    _write_core_csvs(tmp_path, "1,IRS-X,1,2015,99\n")
    with pytest.raises(FkViolation) as err:
        load_csv(SCHEMA, tmp_path)
    assert err.value.fk == "insecticide.id"


def test_duplicate_pk_rejected(tmp_path):
    _write_core_csvs(tmp_path, "1,IRS-X,1,2015,1\n1,IRS-Y,1,2015,1\n")
    with pytest.raises(PkViolation):
        load_csv(SCHEMA, tmp_path)


def test_non_integer_value_rejected(tmp_path):
    _write_core_csvs(tmp_path, "one,IRS-X,1,2015,1\n")
    with pytest.raises(TypeMismatch) as err:
        load_csv(SCHEMA, tmp_path)
    assert err.value.column == "id"


def test_empty_csvs_load(tmp_path):
    (tmp_path / "insecticide.csv").write_text('id,name,"mode.of.action"\n')
    (tmp_path / "geographicregion.csv").write_text("id,name\n")
    (tmp_path / "spraying.csv").write_text('id,name,"location.id",year,"insecticide.id"\n')
    db = load_csv(SCHEMA, tmp_path)
    assert len(db) == 3
    assert db.rows("spraying") == []
    assert execute_plan(db, scan(SCHEMA, "insecticide")) == []


def test_select_project_example(db):
    plan = project(select_eq(scan(SCHEMA, "insecticide"), "id", Param(0)), ["name"])
    assert execute_plan(db, plan, [2]) == [("Permethrin",)]


def test_param_arity_checked(db):
    plan = select_eq(scan(SCHEMA, "insecticide"), "id", Param(0))
    with pytest.raises(ParamArityError):
        execute_plan(db, plan, [])
    with pytest.raises(ParamArityError):
        execute_plan(db, plan, [1, 2])


def test_unknown_column_rejected_at_construction():
    with pytest.raises(SchemaError):
        select_eq(scan(SCHEMA, "insecticide"), "nope", 1)


def _q1_join_plan():
    # Sprayings joined to their insecticide, filtered to Permethrin.
    plan = join(scan(SCHEMA, "spraying"), scan(SCHEMA, "insecticide"),
                "spraying.insecticide.id", "insecticide.id")
    plan = select_eq(plan, "insecticide.name", "Permethrin")
    return project(plan, ["spraying.id", "spraying.name"])


def test_three_way_join_against_nested_loop_oracle(db):
    plan = _q1_join_plan()
    rows = execute_plan(db, plan, [])
    assert rows == nested_loop_plan(db, plan)
    assert rows == [(1, "IRS-Kampala-2015"), (3, "IRS-Gulu-2016"), (5, "IRS-Mbale-2016")]


def test_join_commutes_up_to_column_order(db):
    left = join(scan(SCHEMA, "spraying"), scan(SCHEMA, "insecticide"),
                "spraying.insecticide.id", "insecticide.id")
    right = join(scan(SCHEMA, "insecticide"), scan(SCHEMA, "spraying"),
                 "insecticide.id", "spraying.insecticide.id")
    a = execute_plan(db, project(left, ["spraying.id", "insecticide.name"]), [])
    b = execute_plan(db, project(right, ["spraying.id", "insecticide.name"]), [])
    assert a == b


def test_plan_corpus_matches_oracle(db):
    plans = [
        (scan(SCHEMA, "spraying"), []),
        (select_eq(scan(SCHEMA, "spraying"), "year", 2015), []),
        (select_eq(scan(SCHEMA, "spraying"), "id", Param(0)), [3]),
        (project(scan(SCHEMA, "geographicregion"), ["name"]), []),
        (_q1_join_plan(), []),
        (project(join(scan(SCHEMA, "spraying"), scan(SCHEMA, "geographicregion"),
                      "spraying.location.id", "geographicregion.id"),
                 ["spraying.name", "geographicregion.name"]), []),
    ]
    for plan, params in plans:
        assert execute_plan(db, plan, params) == nested_loop_plan(db, plan, params)


def test_rows_sorted_canonically(db):
    rows = execute_plan(db, project(scan(SCHEMA, "spraying"), ["name"]), [])
    assert rows == sort_rows(rows)


def test_plan_repr_shows_structure():
    plan = project(select_eq(scan(SCHEMA, "insecticide"), "id", Param(0)), ["name"])
    assert repr(plan) == "Project[name](Select[id = param(0)](Scan(insecticide)))"


def test_sql_rendering():
    plan = project(select_eq(scan(SCHEMA, "insecticide"), "id", Param(0)), ["name"])
    assert render_sql(plan) == \
        'SELECT "insecticide"."name" FROM "insecticide" WHERE "insecticide"."id" = ?'
    joined = project(
        select_eq(join(scan(SCHEMA, "spraying"), scan(SCHEMA, "insecticide"),
                       "spraying.insecticide.id", "insecticide.id"),
                  "insecticide.name", "Permethrin"),
        ["spraying.name", "insecticide.mode.of.action"])
    sql = render_sql(joined)
    assert '"spraying"."insecticide.id" = "insecticide"."id"' in sql
    assert '"insecticide"."mode.of.action"' in sql
    assert "'Permethrin'" in sql
