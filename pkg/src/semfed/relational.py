"""In-memory relational backend: schema, CSV loading, and plan evaluation.

The schema file format is one table per line:

    table spraying(id int pk, name text, location.id int fk geographicregion.id, ...)

Column names may contain dots and are kept verbatim (quoted in SQL output).
Tables load from one CSV file per table (RFC 4180, header row required) with
primary-key and foreign-key integrity checked at load time. Query plans are
small operator trees (Scan/Select/Project/Join) evaluated with bag semantics
and a canonical row order; render_sql() prints the equivalent SELECT.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

from .errors import ParseError

Value = Union[int, str]


class SchemaError(Exception):
    pass


class MissingFile(Exception):
    def __init__(self, table: str, path: str):
        super().__init__(f"no CSV file for table {table!r} (expected {path})")
        self.table = table


class TypeMismatch(Exception):
    def __init__(self, table: str, row: int, column: str, value: str):
        super().__init__(f"{table} row {row}: column {column!r} got non-int value {value!r}")
        self.table = table
        self.row = row
        self.column = column


class PkViolation(Exception):
    def __init__(self, table: str, row: int, value: Value):
        super().__init__(f"{table} row {row}: duplicate primary key {value!r}")
        self.table = table


class FkViolation(Exception):
    def __init__(self, table: str, row: int, fk: str, value: Value):
        super().__init__(f"{table} row {row}: {fk} = {value!r} not present in referenced table")
        self.table = table
        self.row = row
        self.fk = fk


class ParamArityError(Exception):
    def __init__(self, expected: int, found: int):
        super().__init__(f"plan needs {expected} parameter(s), got {found}")
        self.expected = expected
        self.found = found


@dataclass(frozen=True)
class Column:
    name: str
    type: str  # "int" | "text"
    pk: bool = False
    fk: Optional[Tuple[str, str]] = None  # (table, column)


@dataclass(frozen=True)
class TableDef:
    name: str
    columns: Tuple[Column, ...]

    def column_names(self) -> List[str]:
        return [c.name for c in self.columns]

    def index_of(self, name: str) -> int:
        for i, c in enumerate(self.columns):
            if c.name == name:
                return i
        raise SchemaError(f"table {self.name!r} has no column {name!r}")

    @property
    def pk_column(self) -> Column:
        for c in self.columns:
            if c.pk:
                return c
        raise SchemaError(f"table {self.name!r} has no primary key")


@dataclass
class RelationalSchema:
    tables: Dict[str, TableDef] = field(default_factory=dict)

    def table(self, name: str) -> TableDef:
        if name not in self.tables:
            raise SchemaError(f"unknown table {name!r}")
        return self.tables[name]

    def fk_between(self, src: str, dst: str) -> Optional[str]:
        """Name of the column in src that references dst's primary key."""
        for col in self.table(src).columns:
            if col.fk and col.fk[0] == dst:
                return col.name
        return None


def parse_schema(text: str) -> RelationalSchema:
    schema = RelationalSchema()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if not line.startswith("table ") or "(" not in line or not line.endswith(")"):
            raise ParseError("expected: table name(col type [pk|fk tbl.col], ...)", lineno, 1)
        name, _, rest = line[len("table "):].partition("(")
        name = name.strip()
        if not name:
            raise ParseError("missing table name", lineno, 1)
        columns: List[Column] = []
        for part in rest[:-1].split(","):
            tokens = part.strip().split()
            if len(tokens) < 2:
                raise ParseError(f"bad column definition {part.strip()!r}", lineno, 1)
            col_name, col_type = tokens[0], tokens[1]
            if col_type not in ("int", "text"):
                raise ParseError(f"unknown column type {col_type!r}", lineno, 1)
            pk = False
            fk: Optional[Tuple[str, str]] = None
            if len(tokens) == 3 and tokens[2] == "pk":
                pk = True
            elif len(tokens) == 4 and tokens[2] == "fk":
                fk = ("", tokens[3])  # resolved below once all tables are known
            elif len(tokens) > 2:
                raise ParseError(f"bad column qualifier in {part.strip()!r}", lineno, 1)
            columns.append(Column(col_name, col_type, pk, fk))
        if name in schema.tables:
            raise ParseError(f"duplicate table {name!r}", lineno, 1)
        schema.tables[name] = TableDef(name, tuple(columns))

    resolved: Dict[str, TableDef] = {}
    for tdef in schema.tables.values():
        pk_cols = [c for c in tdef.columns if c.pk]
        if len(pk_cols) != 1:
            raise SchemaError(f"table {tdef.name!r} needs exactly one pk column")
        if pk_cols[0].type != "int":
            raise SchemaError(f"table {tdef.name!r}: primary key must be int")
        cols: List[Column] = []
        for c in tdef.columns:
            if c.fk is None:
                cols.append(c)
                continue
            target = _resolve_fk_target(schema, c.fk[1])
            cols.append(Column(c.name, c.type, c.pk, target))
        resolved[tdef.name] = TableDef(tdef.name, tuple(cols))
    schema.tables = resolved
    return schema


def _resolve_fk_target(schema: RelationalSchema, spec: str) -> Tuple[str, str]:
    # Column names contain dots, so match the longest declared table prefix.
    candidates = [
        (t, spec[len(t) + 1:]) for t in schema.tables
        if spec.startswith(t + ".") and spec[len(t) + 1:]
    ]
    for table, column in sorted(candidates, key=lambda p: -len(p[0])):
        if any(c.name == column for c in schema.tables[table].columns):
            return (table, column)
    raise SchemaError(f"cannot resolve foreign key target {spec!r}")


@dataclass
class Table:
    definition: TableDef
    rows: List[Tuple[Value, ...]]


@dataclass
class Database:
    schema: RelationalSchema
    tables: Dict[str, Table] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.tables)

    def rows(self, table: str) -> List[Tuple[Value, ...]]:
        return self.tables[table].rows


def load_csv(schema: RelationalSchema, directory: Union[str, Path]) -> Database:
    """Load one <table>.csv per schema table and check all integrity rules."""
    directory = Path(directory)
    db = Database(schema=schema)
    for name, tdef in schema.tables.items():
        path = directory / f"{name}.csv"
        if not path.is_file():
            raise MissingFile(name, str(path))
        with path.open(newline="", encoding="utf-8") as handle:
            reader = csv.reader(handle)
            try:
                header = next(reader)
            except StopIteration:
                raise ParseError(f"{path}: missing header row")
            if header != tdef.column_names():
                raise ParseError(
                    f"{path}: header {header!r} does not match schema columns "
                    f"{tdef.column_names()!r}")
            rows: List[Tuple[Value, ...]] = []
            for rowno, record in enumerate(reader, start=1):
                if len(record) != len(tdef.columns):
                    raise ParseError(f"{path} row {rowno}: expected "
                                     f"{len(tdef.columns)} fields, got {len(record)}")
                values: List[Value] = []
                for col, raw in zip(tdef.columns, record):
                    if col.type == "int":
                        try:
                            values.append(int(raw))
                        except ValueError:
                            raise TypeMismatch(name, rowno, col.name, raw)
                    else:
                        values.append(raw)
                rows.append(tuple(values))
        db.tables[name] = Table(tdef, rows)

    for name, table in db.tables.items():
        tdef = table.definition
        pk_idx = tdef.index_of(tdef.pk_column.name)
        seen: set = set()
        for rowno, row in enumerate(table.rows, start=1):
            if row[pk_idx] in seen:
                raise PkViolation(name, rowno, row[pk_idx])
            seen.add(row[pk_idx])
        for i, col in enumerate(tdef.columns):
            if col.fk is None:
                continue
            target_table, target_col = col.fk
            target_idx = db.tables[target_table].definition.index_of(target_col)
            present = {r[target_idx] for r in db.tables[target_table].rows}
            for rowno, row in enumerate(table.rows, start=1):
                if row[i] not in present:
                    raise FkViolation(name, rowno, col.name, row[i])
    return db


# ---------------------------------------------------------------------------
# Query plans
#
# Operators resolve column references to positions at construction time, so
# evaluation is unambiguous even when joined tables repeat column names.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Param:
    index: int

    def __repr__(self) -> str:
        return f"param({self.index})"


@dataclass(frozen=True)
class OutputColumn:
    table: str
    name: str
    position: int

    @property
    def qualified(self) -> str:
        return f"{self.table}.{self.name}"


class PlanNode:
    columns: Tuple[OutputColumn, ...] = ()

    def resolve(self, name: str) -> int:
        """Position of a column by table-qualified or bare name.

        Qualified references win: dotted column names make a bare name like
        'insecticide.id' collide with the qualified form of another table's
        column, and the explicit reading is the intended one.
        """
        qualified = [c.position for c in self.columns if c.qualified == name]
        if len(qualified) == 1:
            return qualified[0]
        exact = [c.position for c in self.columns if c.name == name]
        if len(exact) == 1:
            return exact[0]
        if len(exact) > 1 or len(qualified) > 1:
            raise SchemaError(f"ambiguous column reference {name!r}")
        raise SchemaError(f"no column {name!r} in {[c.qualified for c in self.columns]}")


@dataclass(frozen=True, repr=False)
class Scan(PlanNode):
    table: str
    columns: Tuple[OutputColumn, ...] = ()

    def __repr__(self) -> str:
        return f"Scan({self.table})"


@dataclass(frozen=True, repr=False)
class Select(PlanNode):
    child: PlanNode
    column: str
    value: Union[Param, Value]
    position: int = -1
    columns: Tuple[OutputColumn, ...] = ()

    def __repr__(self) -> str:
        return f"Select[{self.column} = {self.value!r}]({self.child!r})"


@dataclass(frozen=True, repr=False)
class Project(PlanNode):
    child: PlanNode
    names: Tuple[str, ...]
    positions: Tuple[int, ...] = ()
    columns: Tuple[OutputColumn, ...] = ()

    def __repr__(self) -> str:
        return f"Project[{', '.join(self.names)}]({self.child!r})"


@dataclass(frozen=True, repr=False)
class Join(PlanNode):
    left: PlanNode
    right: PlanNode
    left_col: str
    right_col: str
    left_pos: int = -1
    right_pos: int = -1
    columns: Tuple[OutputColumn, ...] = ()

    def __repr__(self) -> str:
        return (f"Join({self.left!r}, {self.right!r}, "
                f"on {self.left_col} = {self.right_col})")


QueryPlan = PlanNode


def scan(schema: RelationalSchema, table: str) -> Scan:
    tdef = schema.table(table)
    cols = tuple(OutputColumn(table, c.name, i) for i, c in enumerate(tdef.columns))
    return Scan(table, cols)


def select_eq(child: PlanNode, column: str, value: Union[Param, Value]) -> Select:
    pos = child.resolve(column)
    return Select(child, column, value, pos, child.columns)


def project(child: PlanNode, names: Sequence[str]) -> Project:
    positions = tuple(child.resolve(n) for n in names)
    cols = tuple(
        OutputColumn(child.columns[p].table, child.columns[p].name, i)
        for i, p in enumerate(positions)
    )
    return Project(child, tuple(names), positions, cols)


def join(left: PlanNode, right: PlanNode, left_col: str, right_col: str) -> Join:
    lp = left.resolve(left_col)
    rp = right.resolve(right_col)
    offset = len(left.columns)
    cols = tuple(left.columns) + tuple(
        OutputColumn(c.table, c.name, offset + i) for i, c in enumerate(right.columns)
    )
    return Join(left, right, left_col, right_col, lp, rp, cols)


def _max_param(plan: PlanNode) -> int:
    if isinstance(plan, Select):
        own = plan.value.index if isinstance(plan.value, Param) else -1
        return max(own, _max_param(plan.child))
    if isinstance(plan, Project):
        return _max_param(plan.child)
    if isinstance(plan, Join):
        return max(_max_param(plan.left), _max_param(plan.right))
    return -1


def _row_key(row: Tuple[Value, ...]) -> Tuple:
    return tuple((0, v, "") if isinstance(v, int) else (1, 0, v) for v in row)


def execute_plan(db: Database, plan: PlanNode, params: Sequence[Value] = ()) -> List[Tuple[Value, ...]]:
    """Evaluate a plan. Bag semantics; rows come back sorted on all columns."""
    needed = _max_param(plan) + 1
    if len(params) != needed:
        raise ParamArityError(needed, len(params))
    rows = _execute(db, plan, list(params))
    return sorted(rows, key=_row_key)


def _execute(db: Database, plan: PlanNode, params: List[Value]) -> List[Tuple[Value, ...]]:
    if isinstance(plan, Scan):
        return list(db.rows(plan.table))
    if isinstance(plan, Select):
        wanted = params[plan.value.index] if isinstance(plan.value, Param) else plan.value
        return [r for r in _execute(db, plan.child, params) if r[plan.position] == wanted]
    if isinstance(plan, Project):
        return [tuple(r[p] for p in plan.positions) for r in _execute(db, plan.child, params)]
    if isinstance(plan, Join):
        left_rows = _execute(db, plan.left, params)
        right_rows = _execute(db, plan.right, params)
        by_key: Dict[Value, List[Tuple[Value, ...]]] = {}
        for rr in right_rows:
            by_key.setdefault(rr[plan.right_pos], []).append(rr)
        out: List[Tuple[Value, ...]] = []
        for lr in left_rows:
            for rr in by_key.get(lr[plan.left_pos], ()):
                out.append(lr + rr)
        return out
    raise TypeError(f"unknown plan node {plan!r}")


# ---------------------------------------------------------------------------
# SQL rendering (documentation only; nothing executes this text)
# ---------------------------------------------------------------------------


def plan_references(plan: PlanNode) -> set:
    """Table names plus the qualified columns a plan actually selects,
    projects, or joins on; used by impact scans."""
    out: set = set()
    if isinstance(plan, Scan):
        out.add(plan.table)
    elif isinstance(plan, Select):
        out.update(plan_references(plan.child))
        out.add(plan.child.columns[plan.position].qualified)
    elif isinstance(plan, Project):
        out.update(plan_references(plan.child))
        out.update(plan.child.columns[p].qualified for p in plan.positions)
    elif isinstance(plan, Join):
        out.update(plan_references(plan.left))
        out.update(plan_references(plan.right))
    return out


def _quote(identifier: str) -> str:
    return '"%s"' % identifier.replace('"', '""')


def _sql_parts(plan: PlanNode) -> Tuple[List[str], List[str], List[str]]:
    """(from clauses, join conditions, where conditions) for a plan tree."""
    if isinstance(plan, Scan):
        return [_quote(plan.table)], [], []
    if isinstance(plan, Select):
        tables, joins, where = _sql_parts(plan.child)
        col = plan.child.columns[plan.position]
        if isinstance(plan.value, Param):
            rhs = "?"
        elif isinstance(plan.value, int):
            rhs = str(plan.value)
        else:
            rhs = "'%s'" % plan.value.replace("'", "''")
        where.append(f"{_quote(col.table)}.{_quote(col.name)} = {rhs}")
        return tables, joins, where
    if isinstance(plan, Project):
        return _sql_parts(plan.child)
    if isinstance(plan, Join):
        lt, lj, lw = _sql_parts(plan.left)
        rt, rj, rw = _sql_parts(plan.right)
        lcol = plan.left.columns[plan.left_pos]
        rcol = plan.right.columns[plan.right_pos]
        cond = (f"{_quote(lcol.table)}.{_quote(lcol.name)} = "
                f"{_quote(rcol.table)}.{_quote(rcol.name)}")
        return lt + rt, lj + rj + [cond], lw + rw
    raise TypeError(f"unknown plan node {plan!r}")


def render_sql(plan: PlanNode) -> str:
    """Render a plan as the SELECT statement it implements."""
    if isinstance(plan, Project):
        selected = ", ".join(
            f"{_quote(plan.child.columns[p].table)}.{_quote(plan.child.columns[p].name)}"
            for p in plan.positions
        )
        inner = plan.child
    else:
        selected = "*"
        inner = plan
    tables, joins, where = _sql_parts(inner)
    sql = f"SELECT {selected} FROM {', '.join(dict.fromkeys(tables))}"
    conditions = joins + where
    if conditions:
        sql += " WHERE " + " AND ".join(conditions)
    return sql
