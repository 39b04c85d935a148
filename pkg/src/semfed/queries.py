"""Graph queries: parsing, planning against the registry, and orchestration.

A query is a connected basic graph pattern with equality filters and a
projection. The planner resolves each property pattern to exactly one
deployed service by predicate + input class and orders service calls so that
every step's input variable is produced earlier; the executor invokes the
services, joins the returned bindings, applies filters, and returns a
canonical, duplicate-free binding table.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Set, Tuple, Union

from .descriptions import ClassDescription, Named, classify, intersection_members
from .errors import ParseError
from .forge import added_object_class
from .rdf import (
    Graph,
    Iri,
    Literal,
    OWL_THING,
    RDF_TYPE,
    SUPPORTED_DATATYPES,
    Term,
    Triple,
    term_key,
)
from .registry import Registry, ServiceInactive


@dataclass(frozen=True)
class Var:
    name: str

    def __repr__(self) -> str:
        return f"?{self.name}"


PatternTerm = Union[Var, Term]


@dataclass(frozen=True)
class TriplePattern:
    subject: PatternTerm
    predicate: str          # property IRI, or rdf:type
    object: PatternTerm

    def __repr__(self) -> str:
        return f"({self.subject!r} {self.predicate} {self.object!r})"


@dataclass(frozen=True)
class Filter:
    var: str
    literal: Literal


@dataclass(frozen=True)
class GraphQuery:
    patterns: Tuple[TriplePattern, ...]
    filters: Tuple[Filter, ...]
    projection: Tuple[str, ...]
    name: Optional[str] = None


class DisconnectedQuery(Exception):
    pass


class UnresolvablePattern(Exception):
    """No active service covers the pattern; carries the predicate IRI."""

    def __init__(self, pattern: TriplePattern, detail: str = ""):
        self.pattern = pattern
        self.predicate = pattern.predicate
        message = f"no active service resolves {pattern!r}"
        if detail:
            message += f" ({detail})"
        super().__init__(message)


class AmbiguousPattern(Exception):
    def __init__(self, pattern: TriplePattern, candidates: Sequence[str]):
        super().__init__(f"{pattern!r} is answerable by {sorted(candidates)}")
        self.pattern = pattern
        self.candidates = tuple(sorted(candidates))


class QueryAborted(Exception):
    def __init__(self, step: "PlanStep", cause: Exception):
        super().__init__(f"aborted at {step.service}: {cause}")
        self.step = step
        self.cause = cause


# ---------------------------------------------------------------------------
# Text form
# ---------------------------------------------------------------------------


def _tokenize_query(text: str):
    i = 0
    line, col = 1, 1
    tokens = []
    symbols = {"{": "LBRACE", "}": "RBRACE", ".": "DOT", ";": "SEMI", ",": "COMMA",
               "(": "LPAREN", ")": "RPAREN", "=": "EQUALS"}
    while i < len(text):
        ch = text[i]
        if ch == "#":
            while i < len(text) and text[i] != "\n":
                i += 1
            continue
        if ch == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        start_line, start_col = line, col
        if ch in symbols:
            tokens.append((symbols[ch], ch, start_line, start_col))
            i += 1
            col += 1
            continue
        if ch == "<":
            end = text.find(">", i)
            if end == -1:
                raise ParseError("unterminated IRI", start_line, start_col)
            tokens.append(("IRIREF", text[i + 1:end], start_line, start_col))
            col += end - i + 1
            i = end + 1
            continue
        if ch == "?":
            j = i + 1
            while j < len(text) and (text[j].isalnum() or text[j] == "_"):
                j += 1
            if j == i + 1:
                raise ParseError("empty variable name", start_line, start_col)
            tokens.append(("VAR", text[i + 1:j], start_line, start_col))
            col += j - i
            i = j
            continue
        if ch == '"':
            j = i + 1
            out = []
            while j < len(text) and text[j] != '"':
                if text[j] == "\\" and j + 1 < len(text):
                    out.append({"n": "\n", "t": "\t", "r": "\r",
                                '"': '"', "\\": "\\"}.get(text[j + 1], text[j + 1]))
                    j += 2
                    continue
                out.append(text[j])
                j += 1
            if j >= len(text):
                raise ParseError("unterminated string", start_line, start_col)
            tokens.append(("STRING", "".join(out), start_line, start_col))
            col += j - i + 1
            i = j + 1
            continue
        if text.startswith("^^", i):
            tokens.append(("DCARET", "^^", start_line, start_col))
            i += 2
            col += 2
            continue
        if ch.isalpha() or ch == "_" or ch == ":":
            j = i
            while j < len(text) and (text[j].isalnum() or text[j] in "_-:"):
                j += 1
            tokens.append(("NAME", text[i:j], start_line, start_col))
            col += j - i
            i = j
            continue
        raise ParseError(f"unexpected character {ch!r}", start_line, start_col)
    tokens.append(("EOF", "", line, col))
    return tokens


class _QueryParser:
    """SELECT/WHERE/FILTER subset with 'a', ';', ',' and '.' pattern syntax."""

    def __init__(self, text: str):
        self.tokens = _tokenize_query(text)
        self.i = 0
        self.prefixes: Dict[str, str] = {}

    def _peek(self):
        return self.tokens[self.i]

    def _next(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def _error(self, message, tok=None):
        tok = tok or self._peek()
        return ParseError(message, tok[2], tok[3])

    def _expect(self, kind):
        tok = self._next()
        if tok[0] != kind:
            raise self._error(f"expected {kind}, found {tok[1]!r}", tok)
        return tok

    def _keyword(self, word):
        tok = self._next()
        if tok[0] != "NAME" or tok[1].upper() != word:
            raise self._error(f"expected {word}", tok)

    def parse(self, name: Optional[str] = None) -> GraphQuery:
        while self._peek()[0] == "NAME" and self._peek()[1].upper() == "PREFIX":
            self._next()
            label_tok = self._expect("NAME")
            if not label_tok[1].endswith(":"):
                raise self._error("prefix label must end with ':'", label_tok)
            iri_tok = self._expect("IRIREF")
            self.prefixes[label_tok[1][:-1]] = iri_tok[1]
        self._keyword("SELECT")
        projection: List[str] = []
        while self._peek()[0] == "VAR":
            projection.append(self._next()[1])
        if not projection:
            raise self._error("SELECT needs at least one variable")
        self._keyword("WHERE")
        self._expect("LBRACE")
        patterns: List[TriplePattern] = []
        filters: List[Filter] = []
        while True:
            tok = self._peek()
            if tok[0] == "RBRACE":
                self._next()
                break
            if tok[0] == "NAME" and tok[1].upper() == "FILTER":
                self._next()
                filters.append(self._parse_filter())
                continue
            patterns.extend(self._parse_pattern_block())
        self._expect("EOF")
        return build_query(patterns, filters, projection, name)

    def _resolve(self, tok) -> str:
        prefix, _, local = tok[1].partition(":")
        if prefix not in self.prefixes:
            raise self._error(f"undeclared prefix {prefix!r}", tok)
        return self.prefixes[prefix] + local

    def _parse_term(self, *, as_predicate: bool = False) -> Union[Var, Term, str]:
        tok = self._next()
        if tok[0] == "VAR":
            if as_predicate:
                raise self._error("predicate variables are not supported", tok)
            return Var(tok[1])
        if tok[0] == "NAME":
            if tok[1] == "a":
                if not as_predicate:
                    raise self._error("'a' is only valid as a predicate", tok)
                return RDF_TYPE
            if ":" not in tok[1]:
                raise self._error(f"expected a prefixed name, found {tok[1]!r}", tok)
            iri = self._resolve(tok)
            return iri if as_predicate else Iri(iri)
        if tok[0] == "IRIREF":
            return tok[1] if as_predicate else Iri(tok[1])
        if tok[0] == "STRING":
            if as_predicate:
                raise self._error("a literal cannot be a predicate", tok)
            return self._literal_rest(tok)
        raise self._error(f"unexpected token {tok[1]!r}", tok)

    def _literal_rest(self, tok) -> Literal:
        if self._peek()[0] == "DCARET":
            self._next()
            dt_tok = self._next()
            if dt_tok[0] == "IRIREF":
                dt = dt_tok[1]
            elif dt_tok[0] == "NAME" and ":" in dt_tok[1]:
                dt = self._resolve(dt_tok)
            else:
                raise self._error("expected datatype IRI", dt_tok)
            if dt not in SUPPORTED_DATATYPES:
                raise self._error(f"unsupported datatype {dt!r}", dt_tok)
            return Literal(tok[1], dt)
        return Literal(tok[1])

    def _parse_pattern_block(self) -> List[TriplePattern]:
        patterns: List[TriplePattern] = []
        subject = self._parse_term()
        if isinstance(subject, Literal):
            raise self._error("a literal cannot be a subject")
        while True:
            predicate = self._parse_term(as_predicate=True)
            while True:
                obj = self._parse_term()
                patterns.append(TriplePattern(subject, predicate, obj))
                if self._peek()[0] == "COMMA":
                    self._next()
                    continue
                break
            if self._peek()[0] == "SEMI":
                self._next()
                continue
            break
        if self._peek()[0] == "DOT":
            self._next()
        return patterns

    def _parse_filter(self) -> Filter:
        self._expect("LPAREN")
        var_tok = self._expect("VAR")
        self._expect("EQUALS")
        value_tok = self._next()
        if value_tok[0] != "STRING":
            raise self._error("FILTER supports ?var = \"literal\" only", value_tok)
        literal = self._literal_rest(value_tok)
        self._expect("RPAREN")
        return Filter(var_tok[1], literal)


def build_query(patterns: Sequence[TriplePattern], filters: Sequence[Filter],
                projection: Sequence[str], name: Optional[str] = None) -> GraphQuery:
    """Assemble and validate a query from parts (shared by text and JSON)."""
    if not patterns:
        raise ParseError("a query needs at least one pattern")
    pattern_vars: Set[str] = set()
    for p in patterns:
        for term in (p.subject, p.object):
            if isinstance(term, Var):
                pattern_vars.add(term.name)
    for v in projection:
        if v not in pattern_vars:
            raise ParseError(f"projected variable ?{v} occurs in no pattern")
    for f in filters:
        if f.var not in pattern_vars:
            raise ParseError(f"filtered variable ?{f.var} occurs in no pattern")
    _check_connected(patterns)
    return GraphQuery(tuple(patterns), tuple(filters), tuple(projection), name)


def _check_connected(patterns: Sequence[TriplePattern]) -> None:
    index = {i: i for i in range(len(patterns))}

    def find(x: int) -> int:
        while index[x] != x:
            index[x] = index[index[x]]
            x = index[x]
        return x

    def union(a: int, b: int) -> None:
        index[find(a)] = find(b)

    by_node: Dict[str, int] = {}
    for i, p in enumerate(patterns):
        for term in (p.subject, p.object):
            if isinstance(term, Literal):
                continue
            key = repr(term)
            if key in by_node:
                union(i, by_node[key])
            else:
                by_node[key] = i
    roots = {find(i) for i in range(len(patterns))}
    if len(roots) > 1:
        raise DisconnectedQuery(f"{len(roots)} unconnected pattern groups")


def parse_query(text: str, name: Optional[str] = None) -> GraphQuery:
    return _QueryParser(text).parse(name)


def query_from_json(payload: dict, name: Optional[str] = None) -> GraphQuery:
    """Node/edge JSON form: {nodes: [...], edges: [...], filters, projection}.

    Nodes: {id, kind: variable|iri|literal, value?, datatype?, class?}.
    Edges: {source, target, predicate}. A node's class adds an rdf:type
    pattern; literal nodes become equality constraints via their edge.
    """
    nodes: Dict[str, dict] = {}
    for node in payload.get("nodes", ()):
        nodes[str(node["id"])] = node

    def as_term(node_id: str) -> PatternTerm:
        node = nodes.get(node_id)
        if node is None:
            raise ParseError(f"edge references unknown node {node_id!r}")
        kind = node.get("kind", "variable")
        if kind == "variable":
            return Var(node.get("value") or node["id"])
        if kind == "iri":
            return Iri(node["value"])
        if kind == "literal":
            dt = node.get("datatype", SUPPORTED_DATATYPES[0])
            if dt not in SUPPORTED_DATATYPES:
                raise ParseError(f"unsupported datatype {dt!r}")
            return Literal(str(node["value"]), dt)
        raise ParseError(f"unknown node kind {kind!r}")

    patterns: List[TriplePattern] = []
    for node_id, node in nodes.items():
        cls = node.get("class")
        if cls:
            patterns.append(TriplePattern(as_term(node_id), RDF_TYPE, Iri(cls)))
    for edge in payload.get("edges", ()):
        subject = as_term(str(edge["source"]))
        if isinstance(subject, Literal):
            raise ParseError("a literal cannot be an edge source")
        patterns.append(TriplePattern(subject, edge["predicate"], as_term(str(edge["target"]))))
    filters = [Filter(f["var"], Literal(str(f["value"]), f.get("datatype", SUPPORTED_DATATYPES[0])))
               for f in payload.get("filters", ())]
    projection = list(payload.get("projection", ()))
    return build_query(patterns, filters, projection, name or payload.get("name"))


# ---------------------------------------------------------------------------
# Planning
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PlanStep:
    service: str
    binds: str                      # variable the step produces
    source: Optional[str]           # input variable, None for a root step
    pattern: TriplePattern
    object_constant: Optional[Term] = None
    root_class: Optional[str] = None


@dataclass(frozen=True)
class Plan:
    steps: Tuple[PlanStep, ...]

    def services(self) -> List[str]:
        return [s.service for s in self.steps]

    def is_topological(self) -> bool:
        bound: Set[str] = set()
        for step in self.steps:
            if step.source is not None and step.source not in bound:
                return False
            bound.add(step.binds)
        return True


def plan(query: GraphQuery, registry: Registry, *,
         ambiguous_tie_break: bool = False) -> Plan:
    """Resolve every pattern to a service call in dependency order.

    rdf:type patterns on otherwise-unproduced variables select a root allX
    service (subclass aware); property patterns resolve through the registry
    index by predicate and the classes known for their subject variable.
    """
    ontology = registry.ontology
    type_classes: Dict[str, List[str]] = {}
    property_patterns: List[TriplePattern] = []
    for p in query.patterns:
        if p.predicate == RDF_TYPE:
            if not isinstance(p.subject, Var) or not isinstance(p.object, Iri):
                raise UnresolvablePattern(p, "type patterns need ?var a <class>")
            type_classes.setdefault(p.subject.name, []).append(p.object.value)
        else:
            property_patterns.append(p)

    produced_as_object: Set[str] = {
        p.object.name for p in property_patterns if isinstance(p.object, Var)
    }

    steps: List[PlanStep] = []
    known_classes: Dict[str, List[str]] = {}
    bound: Set[str] = set()
    fresh = 0

    def add_known(var: str, cls: Optional[str]) -> None:
        if cls and cls not in known_classes.setdefault(var, []):
            known_classes[var].append(cls)

    # Root steps, in first-mention order.
    for p in query.patterns:
        if p.predicate != RDF_TYPE or not isinstance(p.subject, Var):
            continue
        var = p.subject.name
        if var in bound or var in produced_as_object:
            continue
        service_name, output_class = _select_root(p, registry, ontology)
        steps.append(PlanStep(service_name, var, None, p, root_class=p.object.value))
        bound.add(var)
        for cls in type_classes.get(var, []):
            add_known(var, cls)
        add_known(var, output_class)

    remaining = list(property_patterns)
    while remaining:
        progressed = False
        for p in list(remaining):
            subject_classes: List[str]
            if isinstance(p.subject, Var):
                if p.subject.name not in bound:
                    continue
                subject_classes = known_classes.get(p.subject.name, [])
                source: Optional[str] = p.subject.name
            else:
                subject_classes = type_classes.get(repr(p.subject), []) or [OWL_THING]
                source = None
            candidates: List[str] = []
            for cls in subject_classes or [OWL_THING]:
                for name in registry.discover(p.predicate, Named(cls)):
                    if name not in candidates:
                        candidates.append(name)
            if not candidates:
                raise UnresolvablePattern(p)
            if len(candidates) > 1 and not ambiguous_tie_break:
                raise AmbiguousPattern(p, candidates)
            service_name = sorted(candidates)[0]
            if isinstance(p.object, Var):
                binds, constant = p.object.name, None
            else:
                nonlocal_name = f"_const{fresh}"
                fresh += 1
                binds, constant = nonlocal_name, p.object
            if isinstance(p.subject, Var):
                step = PlanStep(service_name, binds, p.subject.name, p, constant)
            else:
                step = PlanStep(service_name, binds, None, p, constant,
                                root_class=None)
            steps.append(step)
            bound.add(binds)
            add_known(binds, added_object_class(
                registry.get(service_name).description, p.predicate))
            remaining.remove(p)
            progressed = True
        if not progressed:
            raise UnresolvablePattern(remaining[0], "subject variable is never produced")

    # Type patterns on produced variables become runtime checks; nothing to plan.
    built = Plan(tuple(steps))
    if not built.is_topological():
        raise UnresolvablePattern(query.patterns[0], "no topological order")
    return built


def _select_root(pattern: TriplePattern, registry: Registry, ontology) -> Tuple[str, str]:
    """allX service whose output class covers the pattern's class."""
    wanted = pattern.object.value
    candidates: List[Tuple[int, str, str]] = []
    for service in registry.root_services():
        if not service.status.is_active:
            continue
        named = [m.iri for m in intersection_members(service.description.output)
                 if isinstance(m, Named) and m.iri != OWL_THING]
        if len(named) != 1:
            continue
        out_class = named[0]
        if out_class == wanted:
            depth = 0
        elif ontology.is_subclass(wanted, out_class):
            # The service returns a superset; the executor filters by type.
            depth = 1
        else:
            continue
        candidates.append((depth, service.name, out_class))
    if not candidates:
        raise UnresolvablePattern(pattern)
    candidates.sort()
    return candidates[0][1], candidates[0][2]


# ---------------------------------------------------------------------------
# Execution
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BindingTable:
    columns: Tuple[str, ...]
    rows: Tuple[Tuple[Term, ...], ...]

    def as_json(self) -> dict:
        def cell(term: Term):
            if isinstance(term, Iri):
                return {"type": "iri", "value": term.value}
            if isinstance(term, Literal):
                return {"type": "literal", "value": term.lexical,
                        "datatype": term.datatype}
            return {"type": "blank", "value": term.label}
        return {"columns": list(self.columns),
                "rows": [[cell(t) for t in row] for row in self.rows]}


def execute(built: Plan, query: GraphQuery, registry: Registry) -> BindingTable:
    """Invoke the plan's services and assemble the projected bindings."""
    ontology = registry.ontology
    rows: List[Dict[str, Term]] = [{}]
    union = Graph()

    for step in built.steps:
        out, pairs = _invoke_step(step, rows, registry)
        union.update(out)
        if step.source is None and step.root_class is not None:
            instances = [
                node for node in out.subjects()
                if classify(out, node, Named(step.root_class), ontology)
            ]
            rows = [dict(row, **{step.binds: inst})
                    for row in rows for inst in instances]
        else:
            joined: List[Dict[str, Term]] = []
            for row in rows:
                anchor = row.get(step.source) if step.source else None
                for source_value, produced in pairs:
                    if anchor is not None and source_value != anchor:
                        continue
                    if step.binds in row:
                        if row[step.binds] == produced:
                            joined.append(row)
                        continue
                    joined.append(dict(row, **{step.binds: produced}))
            rows = joined
        if step.object_constant is not None:
            rows = [r for r in rows if r[step.binds] == step.object_constant]
        if not rows:
            break

    # rdf:type patterns not consumed by a root step act as final checks.
    for p in query.patterns:
        if p.predicate != RDF_TYPE or not isinstance(p.subject, Var):
            continue
        if any(s.pattern == p for s in built.steps):
            continue
        if not isinstance(p.object, Iri):
            continue
        rows = [r for r in rows
                if p.subject.name in r
                and classify(union, r[p.subject.name], Named(p.object.value), ontology)]

    for f in query.filters:
        rows = [r for r in rows if r.get(f.var) == f.literal]

    projected = {
        tuple(row[v] for v in query.projection)
        for row in rows
        if all(v in row for v in query.projection)
    }
    ordered = sorted(projected, key=lambda r: tuple(term_key(t) for t in r))
    return BindingTable(tuple(query.projection), tuple(ordered))


def _invoke_step(step: PlanStep, rows: List[Dict[str, Term]], registry: Registry):
    """Invoke one service; returns (output graph, (input, produced) pairs)."""
    service = registry.get(step.service)
    input_graph = Graph()
    if step.source is not None:
        values = sorted({row[step.source] for row in rows if step.source in row},
                        key=term_key)
        input_desc = service.description.input
        for value in values:
            _type_for_input(input_graph, value, input_desc)
    elif step.root_class is None and not isinstance(step.pattern.subject, Var):
        _type_for_input(input_graph, step.pattern.subject, service.description.input)
    try:
        out, _warnings = registry.invoke(step.service, input_graph)
    except ServiceInactive as exc:
        raise QueryAborted(step, exc)
    pairs = []
    if step.source is not None or step.root_class is None:
        prop = Iri(step.pattern.predicate)
        for t in out.triples(None, prop, None):
            pairs.append((t.subject, t.object))
    return out, pairs


def _type_for_input(graph: Graph, node: Term, desc: ClassDescription) -> None:
    """Assert the typing triples an input description demands of a node."""
    if isinstance(node, Literal):
        return  # literals cannot carry properties; the join drops them
    for member in intersection_members(desc):
        if isinstance(member, Named) and member.iri != OWL_THING:
            graph.add(Triple(node, Iri(RDF_TYPE), Iri(member.iri)))
