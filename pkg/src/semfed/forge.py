"""Service synthesis: unfold a service description through mapping rules
into an executable relational plan plus decoration emitters.

A built service answers one question per input instance: which rows does the
instance's key select, and which triples do those rows contribute. allX
services scan their backing table with no parameters and mint fresh subject
instances; getYByZ services key the plan on the input instance's parsed id.
Output properties resolve to rules anchored at the input's identity function;
rules on other tables join in along the subject or value columns, and a rule
gap surfaces as MissingMapping, never as a silently absent column.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

from .descriptions import (
    ClassDescription,
    DataHasValue,
    DataSomeValuesFrom,
    IntersectionOf,
    Named,
    ObjectHasValue,
    ObjectSomeValuesFrom,
    intersection_members,
)
from .ontology import DomainOntology, ServiceDescription, validate_description
from .rdf import Iri, Literal, OWL_THING, RDF_TYPE, Term, Triple, local_name
from .relational import (
    Param,
    PlanNode,
    RelationalSchema,
    join,
    project,
    scan,
    select_eq,
)
from .rules import IdentityFunction, RuleRecord, RuleSet, coverage_check

DEFAULT_ID_BASE = "http://fixture.local/id/"


class MissingMappingError(Exception):
    """The rules cannot populate one or more required terms."""

    def __init__(self, iris: Sequence[str]):
        self.iris = tuple(iris)
        super().__init__(self.reason)

    @property
    def reason(self) -> str:
        return "MissingMapping(%s)" % ", ".join(local_name(i) for i in self.iris)


class AmbiguousMapping(Exception):
    """More than one rule populates the same term; refusing to pick one."""

    def __init__(self, iri: str, tables: Sequence[str]):
        super().__init__(f"{local_name(iri)} is populated from {sorted(tables)}")
        self.iri = iri


class ParseFailure(Exception):
    """An IRI was not minted by the given identity function."""

    def __init__(self, iri: str):
        super().__init__(f"not a minted instance IRI: {iri}")
        self.iri = iri


def mint_iri(fn: IdentityFunction, key: int, base: str = DEFAULT_ID_BASE) -> Iri:
    if key < 0:
        raise ValueError("instance keys are non-negative")
    return Iri(f"{base}{fn.table}/{key}")


def parse_iri(fn: IdentityFunction, iri: Term, base: str = DEFAULT_ID_BASE) -> int:
    if not isinstance(iri, Iri):
        raise ParseFailure(str(iri))
    prefix = f"{base}{fn.table}/"
    if not iri.value.startswith(prefix):
        raise ParseFailure(iri.value)
    suffix = iri.value[len(prefix):]
    if not suffix.isdigit():
        raise ParseFailure(iri.value)
    return int(suffix)


# ---------------------------------------------------------------------------
# Decoration emitters: how one result row becomes triples on a subject.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TypeEmit:
    class_iri: str


@dataclass(frozen=True)
class DataEmit:
    prop: str
    index: int          # projection index of the value column
    datatype: str


@dataclass(frozen=True)
class ConstEmit:
    prop: str
    term: Term


@dataclass(frozen=True)
class ObjectEmit:
    prop: str
    index: int          # projection index of the object's key column
    fn: IdentityFunction
    type_iri: Optional[str]
    children: Tuple["Emitter", ...] = ()


Emitter = object  # TypeEmit | DataEmit | ConstEmit | ObjectEmit


def apply_emitters(subject: Term, row: Tuple, emitters: Sequence[Emitter],
                   out, id_base: str = DEFAULT_ID_BASE) -> None:
    for e in emitters:
        if isinstance(e, TypeEmit):
            out.add(Triple(subject, Iri(RDF_TYPE), Iri(e.class_iri)))
        elif isinstance(e, DataEmit):
            out.add(Triple(subject, Iri(e.prop), Literal(str(row[e.index]), e.datatype)))
        elif isinstance(e, ConstEmit):
            out.add(Triple(subject, Iri(e.prop), e.term))
        elif isinstance(e, ObjectEmit):
            obj = mint_iri(e.fn, row[e.index], id_base)
            out.add(Triple(subject, Iri(e.prop), obj))
            if e.type_iri:
                out.add(Triple(obj, Iri(RDF_TYPE), Iri(e.type_iri)))
            apply_emitters(obj, row, e.children, out, id_base)
        else:
            raise TypeError(f"unknown emitter {e!r}")


@dataclass(frozen=True)
class Status:
    state: str                     # "active" | "inactive"
    reasons: Tuple[str, ...] = ()

    @classmethod
    def active(cls) -> "Status":
        return cls("active")

    @classmethod
    def inactive(cls, *reasons: str) -> "Status":
        return cls("inactive", tuple(reasons))

    @property
    def is_active(self) -> bool:
        return self.state == "active"


@dataclass
class ExecutableService:
    description: ServiceDescription
    plan: PlanNode
    minting: IdentityFunction
    emitters: Tuple[Emitter, ...]
    status: Status
    time_of_creation: Optional[str] = None
    time_of_rebuild: Optional[str] = None

    @property
    def name(self) -> str:
        return self.description.name

    @property
    def is_root(self) -> bool:
        return self.description.input == Named(OWL_THING)


def new_restrictions(description: ServiceDescription) -> Tuple[ClassDescription, ...]:
    """Output members beyond the input's constraints (the decorations)."""
    inputs = set(intersection_members(description.input))
    if description.input == Named(OWL_THING):
        inputs = {m for m in intersection_members(description.output) if isinstance(m, Named)}
    return tuple(m for m in intersection_members(description.output) if m not in inputs)


def added_properties(description: ServiceDescription) -> Tuple[str, ...]:
    props = []
    for member in new_restrictions(description):
        if isinstance(member, (ObjectSomeValuesFrom, ObjectHasValue,
                               DataSomeValuesFrom, DataHasValue)):
            if member.prop not in props:
                props.append(member.prop)
    return tuple(props)


def added_object_class(description: ServiceDescription, prop: str) -> Optional[str]:
    """Named inner class of the object restriction a service adds for prop."""
    for member in new_restrictions(description):
        if isinstance(member, ObjectSomeValuesFrom) and member.prop == prop:
            for inner in intersection_members(member.inner):
                if isinstance(inner, Named):
                    return inner.iri
    return None


# ---------------------------------------------------------------------------
# Synthesis
# ---------------------------------------------------------------------------


class _Builder:
    def __init__(self, rs: RuleSet, schema: RelationalSchema, ont: DomainOntology):
        self.rs = rs
        self.schema = schema
        self.ont = ont
        self.plan: PlanNode = None
        self.projection: List[str] = []   # qualified column names, in order
        self.joined: List[str] = []       # tables already in the plan

    def anchor(self, table: str, keyed: bool) -> None:
        self.plan = scan(self.schema, table)
        if keyed:
            pk = self.schema.table(table).pk_column.name
            self.plan = select_eq(self.plan, f"{table}.{pk}", Param(0))
        self.joined = [table]

    def ensure_joined(self, table: str, left_qualified: str, right_qualified: str) -> None:
        if table in self.joined:
            return
        self.plan = join(self.plan, scan(self.schema, table),
                         left_qualified, right_qualified)
        self.joined.append(table)

    def col(self, table: str, column: str) -> int:
        """Projection index for a column, adding it if new."""
        qualified = f"{table}.{column}"
        if qualified not in self.projection:
            self.projection.append(qualified)
        return self.projection.index(qualified)

    def membership_rule(self, class_iri: str) -> RuleRecord:
        wanted = self.ont.subclasses_or_self(class_iri) if self.ont else [class_iri]
        rules = sorted(set(self.rs.membership_for(wanted)),
                       key=lambda r: (r.table, r.head_iri))
        if not rules:
            raise MissingMappingError([class_iri])
        if len(rules) > 1:
            raise AmbiguousMapping(class_iri, [r.table for r in rules])
        return rules[0]

    def property_rule(self, prop: str, fn: IdentityFunction, minted: bool) -> RuleRecord:
        rules = sorted(
            {r for r in self.rs.property_rules(prop)
             if r.fn == fn.name and (r.value_fn is not None) == minted},
            key=lambda r: (r.table, r.subject_position))
        if not rules:
            raise MissingMappingError([prop])
        if len(rules) > 1:
            raise AmbiguousMapping(prop, [r.table for r in rules])
        return rules[0]

    def subject_column(self, rule: RuleRecord) -> str:
        return self.schema.table(rule.table).columns[rule.subject_position].name

    def attach_rule_table(self, rule: RuleRecord, fn: IdentityFunction) -> None:
        """Make the rule's body table reachable from the anchor of fn."""
        if rule.table in self.joined:
            return
        # The rule's subject column carries fn's key (its pk or an fk to it).
        self.ensure_joined(
            rule.table,
            f"{fn.table}.{fn.key_column}",
            f"{rule.table}.{self.subject_column(rule)}",
        )

    def compile_member(self, member: ClassDescription, fn: IdentityFunction) -> List[Emitter]:
        if isinstance(member, Named):
            rule = self.membership_rule(member.iri)
            if rule.fn != fn.name:
                raise MissingMappingError([member.iri])
            return [TypeEmit(rule.head_iri)]
        if isinstance(member, IntersectionOf):
            out: List[Emitter] = []
            for m in member.members:
                out.extend(self.compile_member(m, fn))
            return out
        if isinstance(member, DataSomeValuesFrom):
            rule = self.property_rule(member.prop, fn, minted=False)
            self.attach_rule_table(rule, fn)
            column = self.schema.table(rule.table).columns[rule.value_position].name
            return [DataEmit(member.prop, self.col(rule.table, column), member.datatype)]
        if isinstance(member, DataHasValue):
            rule = self.property_rule(member.prop, fn, minted=False)
            self.attach_rule_table(rule, fn)
            column = self.schema.table(rule.table).columns[rule.value_position]
            wanted = int(member.literal.lexical) if column.type == "int" else member.literal.lexical
            self.plan = select_eq(self.plan, f"{rule.table}.{column.name}", wanted)
            return [ConstEmit(member.prop, member.literal)]
        if isinstance(member, ObjectSomeValuesFrom):
            rule = self.property_rule(member.prop, fn, minted=True)
            self.attach_rule_table(rule, fn)
            obj_fn = self.rs.identity_functions[rule.value_fn]
            column = self.schema.table(rule.table).columns[rule.value_position].name
            key_index = self.col(rule.table, column)
            type_iri, children = self.compile_inner(member.inner, obj_fn, rule)
            return [ObjectEmit(member.prop, key_index, obj_fn, type_iri, tuple(children))]
        if isinstance(member, ObjectHasValue):
            rule = self.property_rule(member.prop, fn, minted=True)
            self.attach_rule_table(rule, fn)
            obj_fn = self.rs.identity_functions[rule.value_fn]
            key = parse_iri(obj_fn, member.value)
            column = self.schema.table(rule.table).columns[rule.value_position].name
            self.plan = select_eq(self.plan, f"{rule.table}.{column}", key)
            return [ConstEmit(member.prop, member.value)]
        raise TypeError(f"cannot compile {member!r}")

    def compile_inner(self, inner: ClassDescription, obj_fn: IdentityFunction,
                      via_rule: RuleRecord):
        """Type decoration and nested emitters for an object restriction."""
        type_iri: Optional[str] = None
        children: List[Emitter] = []
        members = intersection_members(inner)
        named = [m for m in members if isinstance(m, Named)]
        rest = [m for m in members if not isinstance(m, Named)]
        for m in named:
            if m.iri == OWL_THING:
                continue
            rule = self.membership_rule(m.iri)
            if rule.fn != obj_fn.name:
                raise MissingMappingError([m.iri])
            type_iri = rule.head_iri
        if rest:
            # Nested restrictions read the object's own table.
            self.ensure_joined(
                obj_fn.table,
                f"{via_rule.table}.{self.schema.table(via_rule.table).columns[via_rule.value_position].name}",
                f"{obj_fn.table}.{obj_fn.key_column}",
            )
            for m in rest:
                children.extend(self.compile_member(m, obj_fn))
        return type_iri, children


def synthesize(description: ServiceDescription, rs: RuleSet,
               schema: RelationalSchema, ont: DomainOntology) -> ExecutableService:
    """Build an executable service or raise MissingMapping/AmbiguousMapping.

    Coverage gaps are reported before ontology validation so that a stale
    rule file is always diagnosed as the missing mapping it is.
    """
    gaps = coverage_check(rs, description.output, ont)
    if gaps:
        raise MissingMappingError([g.iri for g in gaps])
    validate_description(description, ont)

    builder = _Builder(rs, schema, ont)
    if description.input == Named(OWL_THING):
        root_named = [m for m in intersection_members(description.output)
                      if isinstance(m, Named) and m.iri != OWL_THING]
        if len(root_named) != 1:
            raise MissingMappingError(
                [m.iri for m in root_named] or [OWL_THING])
        rule = builder.membership_rule(root_named[0].iri)
        fn = rs.identity_functions[rule.fn]
        builder.anchor(fn.table, keyed=False)
        # Root plans project the key first: minting reads row[0].
        builder.col(fn.table, fn.key_column)
        emitters: List[Emitter] = [TypeEmit(rule.head_iri)]
        for member in new_restrictions(description):
            emitters.extend(builder.compile_member(member, fn))
    else:
        input_named = [m for m in intersection_members(description.input)
                       if isinstance(m, Named) and m.iri != OWL_THING]
        if len(input_named) != 1:
            raise MissingMappingError([description.name])
        input_rule = builder.membership_rule(input_named[0].iri)
        fn = rs.identity_functions[input_rule.fn]
        builder.anchor(fn.table, keyed=True)
        emitters = []
        for member in new_restrictions(description):
            emitters.extend(builder.compile_member(member, fn))

    plan = project(builder.plan, builder.projection)
    return ExecutableService(
        description=description,
        plan=plan,
        minting=fn,
        emitters=tuple(emitters),
        status=Status.active(),
    )
