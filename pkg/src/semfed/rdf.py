"""RDF data model and a deliberately small Turtle reader/writer.

Terms are immutable; a Graph is a set of triples plus a prefix map.
The accepted Turtle dialect covers prefix declarations, statements with ';'
predicate lists and ',' object lists, IRIs, prefixed names, string/integer/
gYear literals, labeled blank nodes, and one level of '[ ... ]' property
lists. Anything outside that dialect is a ParseError.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Dict, Iterable, Iterator, List, Optional, Set, Tuple, Union

from .errors import ParseError

RDF_NS = "http://www.w3.org/1999/02/22-rdf-syntax-ns#"
RDFS_NS = "http://www.w3.org/2000/01/rdf-schema#"
OWL_NS = "http://www.w3.org/2002/07/owl#"
XSD_NS = "http://www.w3.org/2001/XMLSchema#"

RDF_TYPE = RDF_NS + "type"
RDFS_LABEL = RDFS_NS + "label"
RDFS_SUBCLASSOF = RDFS_NS + "subClassOf"
RDFS_RANGE = RDFS_NS + "range"
RDFS_DOMAIN = RDFS_NS + "domain"
OWL_THING = OWL_NS + "Thing"
OWL_CLASS = OWL_NS + "Class"
OWL_OBJECT_PROPERTY = OWL_NS + "ObjectProperty"
OWL_DATATYPE_PROPERTY = OWL_NS + "DatatypeProperty"
OWL_EQUIVALENT_CLASS = OWL_NS + "equivalentClass"
OWL_INTERSECTION_OF = OWL_NS + "intersectionOf"
OWL_ON_PROPERTY = OWL_NS + "onProperty"
OWL_SOME_VALUES_FROM = OWL_NS + "someValuesFrom"
OWL_HAS_VALUE = OWL_NS + "hasValue"

XSD_STRING = XSD_NS + "string"
XSD_INTEGER = XSD_NS + "integer"
XSD_GYEAR = XSD_NS + "gYear"

SUPPORTED_DATATYPES = (XSD_STRING, XSD_INTEGER, XSD_GYEAR)

_SCHEME_RE = re.compile(r"^[A-Za-z][A-Za-z0-9+.\-]*:")


@dataclass(frozen=True)
class Iri:
    value: str

    def __repr__(self) -> str:
        return f"<{self.value}>"


@dataclass(frozen=True)
class Blank:
    label: str

    def __repr__(self) -> str:
        return f"_:{self.label}"


@dataclass(frozen=True)
class Literal:
    lexical: str
    datatype: str = XSD_STRING

    def __repr__(self) -> str:
        if self.datatype == XSD_STRING:
            return '"%s"' % self.lexical
        return '"%s"^^<%s>' % (self.lexical, self.datatype)


Term = Union[Iri, Blank, Literal]


@dataclass(frozen=True)
class Triple:
    subject: Term
    predicate: Term
    object: Term

    def __post_init__(self):
        if not isinstance(self.predicate, Iri):
            raise ValueError("triple predicate must be an IRI")
        if isinstance(self.subject, Literal):
            raise ValueError("triple subject cannot be a literal")


def local_name(iri: str) -> str:
    """Fragment or last path segment of an IRI, used for display."""
    for sep in ("#", "/"):
        if sep in iri:
            return iri.rsplit(sep, 1)[1]
    return iri


def _escape(lexical: str) -> str:
    return (
        lexical.replace("\\", "\\\\")
        .replace('"', '\\"')
        .replace("\n", "\\n")
        .replace("\r", "\\r")
        .replace("\t", "\\t")
    )


_PN_LOCAL_RE = re.compile(r"^[A-Za-z0-9_][A-Za-z0-9_\-]*$")


def n3(term: Term, prefixes: Optional[Dict[str, str]] = None) -> str:
    """Render a term in Turtle syntax, compacting IRIs when a prefix fits."""
    if isinstance(term, Iri):
        if prefixes:
            best = None
            for prefix, ns in prefixes.items():
                if term.value.startswith(ns) and len(ns) < len(term.value):
                    local = term.value[len(ns):]
                    if _PN_LOCAL_RE.match(local):
                        if best is None or len(ns) > len(prefixes[best[0]]):
                            best = (prefix, local)
            if best is not None:
                return f"{best[0]}:{best[1]}"
        return f"<{term.value}>"
    if isinstance(term, Blank):
        return f"_:{term.label}"
    if term.datatype == XSD_STRING:
        return '"%s"' % _escape(term.lexical)
    dt = Iri(term.datatype)
    return '"%s"^^%s' % (_escape(term.lexical), n3(dt, prefixes))


def triple_key(t: Triple) -> Tuple[str, str, str]:
    """Canonical sort key: lexicographic on serialized (p, s, o)."""
    return (n3(t.predicate), n3(t.subject), n3(t.object))


def term_key(term: Term) -> str:
    return n3(term)


class Graph:
    """A set of triples with prefix bindings.

    Adding a duplicate triple is a no-op, and iteration is always in
    canonical order, so graphs with equal triple sets compare equal and
    serialize identically. Equality ignores the prefix map.
    """

    def __init__(self, triples: Iterable[Triple] = (), prefixes: Optional[Dict[str, str]] = None):
        self._triples: Set[Triple] = set(triples)
        self.prefixes: Dict[str, str] = dict(prefixes or {})

    def add(self, triple: Triple) -> None:
        self._triples.add(triple)

    def bind(self, prefix: str, namespace: str) -> None:
        self.prefixes[prefix] = namespace

    def __len__(self) -> int:
        return len(self._triples)

    def __contains__(self, triple: Triple) -> bool:
        return triple in self._triples

    def __eq__(self, other) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return self._triples == other._triples

    def __hash__(self):
        return hash(frozenset(self._triples))

    def __iter__(self) -> Iterator[Triple]:
        return iter(sorted(self._triples, key=triple_key))

    def __repr__(self) -> str:
        return f"Graph({len(self._triples)} triples)"

    def triples(self, s: Optional[Term] = None, p: Optional[Term] = None,
                o: Optional[Term] = None) -> Iterator[Triple]:
        for t in self:
            if s is not None and t.subject != s:
                continue
            if p is not None and t.predicate != p:
                continue
            if o is not None and t.object != o:
                continue
            yield t

    def subjects(self) -> List[Term]:
        seen = []
        for t in self:
            if t.subject not in seen:
                seen.append(t.subject)
        return seen

    def objects(self, s: Term, p: Term) -> List[Term]:
        return [t.object for t in self.triples(s, p)]

    def value(self, s: Term, p: Term) -> Optional[Term]:
        for t in self.triples(s, p):
            return t.object
        return None

    def copy(self) -> "Graph":
        return Graph(self._triples, self.prefixes)

    def update(self, other: "Graph") -> None:
        self._triples.update(other._triples)
        for prefix, ns in other.prefixes.items():
            self.prefixes.setdefault(prefix, ns)


# ---------------------------------------------------------------------------
# Lexer
# ---------------------------------------------------------------------------

_TOKEN_DOT = "DOT"
_TOKEN_SEMI = "SEMI"
_TOKEN_COMMA = "COMMA"
_TOKEN_LBRACKET = "LBRACKET"
_TOKEN_RBRACKET = "RBRACKET"
_TOKEN_IRIREF = "IRIREF"
_TOKEN_PNAME = "PNAME"
_TOKEN_PNAME_NS = "PNAME_NS"
_TOKEN_BLANK = "BLANK"
_TOKEN_STRING = "STRING"
_TOKEN_DCARET = "DCARET"
_TOKEN_PREFIX = "PREFIX"
_TOKEN_A = "A"
_TOKEN_EOF = "EOF"

_PNAME_RE = re.compile(r"([A-Za-z][A-Za-z0-9_\-]*)?:([A-Za-z0-9_][A-Za-z0-9_\-]*)?")
_BLANK_RE = re.compile(r"_:([A-Za-z0-9][A-Za-z0-9_\-]*)")


class _Lexer:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0
        self.line = 1
        self.col = 1

    def error(self, message: str) -> ParseError:
        return ParseError(message, self.line, self.col)

    def _advance(self, n: int) -> None:
        for ch in self.text[self.pos:self.pos + n]:
            if ch == "\n":
                self.line += 1
                self.col = 1
            else:
                self.col += 1
        self.pos += n

    def tokens(self) -> Iterator[Tuple[str, str, int, int]]:
        text = self.text
        while self.pos < len(text):
            ch = text[self.pos]
            if ch in " \t\r\n":
                self._advance(1)
                continue
            if ch == "#":
                end = text.find("\n", self.pos)
                self._advance((end if end != -1 else len(text)) - self.pos)
                continue
            line, col = self.line, self.col
            if ch == ".":
                self._advance(1)
                yield (_TOKEN_DOT, ".", line, col)
                continue
            if ch == ";":
                self._advance(1)
                yield (_TOKEN_SEMI, ";", line, col)
                continue
            if ch == ",":
                self._advance(1)
                yield (_TOKEN_COMMA, ",", line, col)
                continue
            if ch == "[":
                self._advance(1)
                yield (_TOKEN_LBRACKET, "[", line, col)
                continue
            if ch == "]":
                self._advance(1)
                yield (_TOKEN_RBRACKET, "]", line, col)
                continue
            if ch == "(" or ch == ")":
                raise self.error("collections are not supported")
            if ch == "<":
                end = text.find(">", self.pos)
                if end == -1:
                    raise self.error("unterminated IRI")
                value = text[self.pos + 1:end]
                if any(c in value for c in " \t\n<"):
                    raise self.error("invalid character in IRI")
                self._advance(end - self.pos + 1)
                yield (_TOKEN_IRIREF, value, line, col)
                continue
            if ch == '"':
                value, consumed = self._lex_string()
                self._advance(consumed)
                yield (_TOKEN_STRING, value, line, col)
                continue
            if text.startswith("^^", self.pos):
                self._advance(2)
                yield (_TOKEN_DCARET, "^^", line, col)
                continue
            if text.startswith("@prefix", self.pos):
                self._advance(len("@prefix"))
                yield (_TOKEN_PREFIX, "@prefix", line, col)
                continue
            if text.startswith("_:", self.pos):
                m = _BLANK_RE.match(text, self.pos)
                if not m:
                    raise self.error("invalid blank node label")
                self._advance(m.end() - self.pos)
                yield (_TOKEN_BLANK, m.group(1), line, col)
                continue
            if ch == "a" and not _is_name_char(text[self.pos + 1] if self.pos + 1 < len(text) else " ") \
                    and (self.pos + 1 >= len(text) or text[self.pos + 1] != ":"):
                self._advance(1)
                yield (_TOKEN_A, "a", line, col)
                continue
            m = _PNAME_RE.match(text, self.pos)
            if m:
                prefix = m.group(1) or ""
                local = m.group(2)
                self._advance(m.end() - self.pos)
                if local is None:
                    yield (_TOKEN_PNAME_NS, prefix, line, col)
                else:
                    yield (_TOKEN_PNAME, f"{prefix}|{local}", line, col)
                continue
            raise self.error(f"unexpected character {ch!r}")
        yield (_TOKEN_EOF, "", self.line, self.col)

    def _lex_string(self) -> Tuple[str, int]:
        text = self.text
        i = self.pos + 1
        out: List[str] = []
        while i < len(text):
            ch = text[i]
            if ch == '"':
                return "".join(out), i - self.pos + 1
            if ch == "\n":
                raise self.error("unterminated string literal")
            if ch == "\\":
                if i + 1 >= len(text):
                    raise self.error("dangling escape in string literal")
                esc = text[i + 1]
                mapped = {"\\": "\\", '"': '"', "n": "\n", "r": "\r", "t": "\t"}.get(esc)
                if mapped is None:
                    raise self.error(f"unsupported escape \\{esc}")
                out.append(mapped)
                i += 2
                continue
            out.append(ch)
            i += 1
        raise self.error("unterminated string literal")


def _is_name_char(ch: str) -> bool:
    return ch.isalnum() or ch in "_-"


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


class _Parser:
    def __init__(self, text: str):
        self._tokens = list(_Lexer(text).tokens())
        self._i = 0
        self._graph = Graph()
        self._blank_counter = 0
        self._used_labels = {tok[1] for tok in self._tokens if tok[0] == _TOKEN_BLANK}

    def _peek(self):
        return self._tokens[self._i]

    def _next(self):
        tok = self._tokens[self._i]
        self._i += 1
        return tok

    def _error(self, message: str, tok=None) -> ParseError:
        tok = tok or self._peek()
        return ParseError(message, tok[2], tok[3])

    def _expect(self, kind: str):
        tok = self._next()
        if tok[0] != kind:
            raise self._error(f"expected {kind}, found {tok[1]!r}", tok)
        return tok

    def parse(self) -> Graph:
        while True:
            kind = self._peek()[0]
            if kind == _TOKEN_EOF:
                break
            if kind == _TOKEN_PREFIX:
                self._parse_prefix()
            else:
                self._parse_statement()
        return self._graph

    def _parse_prefix(self) -> None:
        self._expect(_TOKEN_PREFIX)
        ns_tok = self._next()
        if ns_tok[0] != _TOKEN_PNAME_NS:
            raise self._error("expected prefix label", ns_tok)
        iri_tok = self._expect(_TOKEN_IRIREF)
        self._expect(_TOKEN_DOT)
        self._graph.bind(ns_tok[1], iri_tok[1])

    def _expand(self, tok) -> Iri:
        prefix, _, local = tok[1].partition("|")
        if prefix not in self._graph.prefixes:
            raise self._error(f"undeclared prefix {prefix!r}", tok)
        iri = self._graph.prefixes[prefix] + local
        return Iri(iri)

    def _check_absolute(self, iri: Iri, tok) -> Iri:
        if not _SCHEME_RE.match(iri.value):
            raise self._error(f"IRI is not absolute: {iri.value!r}", tok)
        return iri

    def _parse_statement(self) -> None:
        subject = self._parse_subject()
        self._parse_predicate_object_list(subject, depth=0)
        self._expect(_TOKEN_DOT)

    def _parse_subject(self) -> Term:
        tok = self._next()
        if tok[0] == _TOKEN_IRIREF:
            return self._check_absolute(Iri(tok[1]), tok)
        if tok[0] == _TOKEN_PNAME:
            return self._check_absolute(self._expand(tok), tok)
        if tok[0] == _TOKEN_BLANK:
            return Blank(tok[1])
        if tok[0] == _TOKEN_LBRACKET:
            raise self._error("blank-node property list is not allowed as subject", tok)
        raise self._error(f"expected subject, found {tok[1]!r}", tok)

    def _parse_predicate(self) -> Iri:
        tok = self._next()
        if tok[0] == _TOKEN_A:
            return Iri(RDF_TYPE)
        if tok[0] == _TOKEN_IRIREF:
            return self._check_absolute(Iri(tok[1]), tok)
        if tok[0] == _TOKEN_PNAME:
            return self._check_absolute(self._expand(tok), tok)
        raise self._error(f"expected predicate, found {tok[1]!r}", tok)

    def _parse_predicate_object_list(self, subject: Term, depth: int) -> None:
        while True:
            predicate = self._parse_predicate()
            while True:
                obj = self._parse_object(depth)
                self._graph.add(Triple(subject, predicate, obj))
                if self._peek()[0] == _TOKEN_COMMA:
                    self._next()
                    continue
                break
            if self._peek()[0] == _TOKEN_SEMI:
                self._next()
                continue
            break

    def _fresh_blank(self) -> Blank:
        while True:
            label = f"b{self._blank_counter}"
            self._blank_counter += 1
            if label not in self._used_labels:
                self._used_labels.add(label)
                return Blank(label)

    def _parse_object(self, depth: int) -> Term:
        tok = self._next()
        if tok[0] == _TOKEN_IRIREF:
            return self._check_absolute(Iri(tok[1]), tok)
        if tok[0] == _TOKEN_PNAME:
            return self._check_absolute(self._expand(tok), tok)
        if tok[0] == _TOKEN_BLANK:
            return Blank(tok[1])
        if tok[0] == _TOKEN_STRING:
            return self._parse_literal_rest(tok)
        if tok[0] == _TOKEN_LBRACKET:
            if depth >= 1:
                raise self._error("blank-node property lists may not nest", tok)
            node = self._fresh_blank()
            self._parse_predicate_object_list(node, depth + 1)
            self._expect(_TOKEN_RBRACKET)
            return node
        raise self._error(f"expected object, found {tok[1]!r}", tok)

    def _parse_literal_rest(self, string_tok) -> Literal:
        if self._peek()[0] == _TOKEN_DCARET:
            self._next()
            dt_tok = self._next()
            if dt_tok[0] == _TOKEN_IRIREF:
                dt = Iri(dt_tok[1])
            elif dt_tok[0] == _TOKEN_PNAME:
                dt = self._expand(dt_tok)
            else:
                raise self._error("expected datatype IRI", dt_tok)
            if dt.value not in SUPPORTED_DATATYPES:
                raise self._error(f"unsupported datatype {dt.value!r}", dt_tok)
            return Literal(string_tok[1], dt.value)
        return Literal(string_tok[1], XSD_STRING)


def parse_turtle(text: str) -> Graph:
    """Parse a Turtle document (subset dialect) into a Graph."""
    return _Parser(text).parse()


def serialize_turtle(graph: Graph) -> str:
    """Render a graph deterministically; parse_turtle round-trips it."""
    lines: List[str] = []
    for prefix in sorted(graph.prefixes):
        lines.append(f"@prefix {prefix}: <{graph.prefixes[prefix]}> .")
    if lines and len(graph):
        lines.append("")
    for t in graph:
        p = "a" if t.predicate.value == RDF_TYPE else n3(t.predicate, graph.prefixes)
        lines.append(f"{n3(t.subject, graph.prefixes)} {p} {n3(t.object, graph.prefixes)} .")
    return "\n".join(lines) + ("\n" if lines else "")
