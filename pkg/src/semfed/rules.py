"""Parser and model for the mapping-rule language tying tables to vocabulary.

The accepted language is a small Horn-rule subset:

    Prefix(: <http://example.org/vocab#>)
    Group (
      Forall ?insecticideID (identityForInsecticideToInsecticideID(
          identityForInsecticide(?insecticideID)) = ?insecticideID)
      Forall ?P (identityForInsecticide(identityForInsecticideToInsecticideID(?P)) = ?P)
      Forall ?id ?name (
          Insecticide(identityForInsecticide(?id)) :- db_insecticide(?id ?name))
      Forall ?id ?name (
          has_name(identityForInsecticide(?id) ?name) :- db_insecticide(?id ?name))
    )

Heads are unary (class membership) or binary (property) with the subject
always a single identity-function application; bodies are one db_<table>
predicate whose variables bind positionally to the table's columns. Each
identity function must come with its paired inverse equations. '%' starts a
line comment. The Group wrapper is accepted and ignored.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from .descriptions import (
    ClassDescription,
    DataHasValue,
    DataSomeValuesFrom,
    IntersectionOf,
    Named,
    ObjectHasValue,
    ObjectSomeValuesFrom,
)
from .errors import ParseError
from .rdf import OWL_THING, local_name
from .relational import RelationalSchema

MEMBERSHIP = "membership"
PROPERTY = "property"


class UnknownTable(Exception):
    def __init__(self, name: str):
        super().__init__(f"no table {name!r} in the schema")
        self.name = name


class ArityMismatch(Exception):
    def __init__(self, predicate: str, expected: int, found: int):
        super().__init__(f"{predicate} has arity {found}, schema expects {expected}")
        self.predicate = predicate
        self.expected = expected
        self.found = found


@dataclass(frozen=True)
class MissingMapping:
    """A description term no rule can populate. Data, not an error."""
    iri: str

    def __repr__(self) -> str:
        return f"MissingMapping({local_name(self.iri)})"


@dataclass(frozen=True)
class IdentityFunction:
    name: str
    table: str
    key_column: str
    inverse: str


@dataclass(frozen=True)
class RuleRecord:
    kind: str                     # MEMBERSHIP | PROPERTY
    head_iri: str                 # resolved class or property IRI
    head_symbol: str              # symbol as written in the source
    fn: str                       # subject identity function
    subject_position: int         # column position the subject key binds
    table: str
    body_vars: Tuple[str, ...]
    quantified: Tuple[str, ...]
    value_position: Optional[int] = None   # property rules only
    value_fn: Optional[str] = None         # set when the value is minted


@dataclass
class RuleSet:
    identity_functions: Dict[str, IdentityFunction] = field(default_factory=dict)
    rules: List[RuleRecord] = field(default_factory=list)
    arities: Dict[str, int] = field(default_factory=dict)
    prefixes: Dict[str, str] = field(default_factory=dict)
    warnings: List[str] = field(default_factory=list)

    def membership_rules(self) -> List[RuleRecord]:
        return [r for r in self.rules if r.kind == MEMBERSHIP]

    def property_rules(self, iri: Optional[str] = None) -> List[RuleRecord]:
        return [r for r in self.rules
                if r.kind == PROPERTY and (iri is None or r.head_iri == iri)]

    def membership_for(self, class_iris: Sequence[str]) -> List[RuleRecord]:
        wanted = set(class_iris)
        return [r for r in self.membership_rules() if r.head_iri in wanted]

    def function_for_table(self, table: str) -> Optional[IdentityFunction]:
        for fn in self.identity_functions.values():
            if fn.table == table:
                return fn
        return None


# ---------------------------------------------------------------------------
# Tokenizer
# ---------------------------------------------------------------------------

_T_NAME = "NAME"
_T_VAR = "VAR"
_T_LPAREN = "LPAREN"
_T_RPAREN = "RPAREN"
_T_EQUALS = "EQUALS"
_T_IMPLIES = "IMPLIES"
_T_IRI = "IRI"
_T_EOF = "EOF"


def _tokenize(text: str):
    tokens = []
    line_no = 0
    for raw in text.splitlines():
        line_no += 1
        line = raw.split("%", 1)[0]
        col = 0
        i = 0
        while i < len(line):
            ch = line[i]
            col = i + 1
            if ch.isspace():
                i += 1
                continue
            if ch == "(":
                tokens.append((_T_LPAREN, "(", line_no, col))
                i += 1
                continue
            if ch == ")":
                tokens.append((_T_RPAREN, ")", line_no, col))
                i += 1
                continue
            if ch == "=":
                tokens.append((_T_EQUALS, "=", line_no, col))
                i += 1
                continue
            if line.startswith(":-", i):
                tokens.append((_T_IMPLIES, ":-", line_no, col))
                i += 2
                continue
            if ch == "<":
                end = line.find(">", i)
                if end == -1:
                    raise ParseError("unterminated IRI", line_no, col)
                tokens.append((_T_IRI, line[i + 1:end], line_no, col))
                i = end + 1
                continue
            if ch == "?":
                j = i + 1
                while j < len(line) and (line[j].isalnum() or line[j] in "_."):
                    j += 1
                if j == i + 1:
                    raise ParseError("empty variable name", line_no, col)
                tokens.append((_T_VAR, line[i + 1:j], line_no, col))
                i = j
                continue
            if ch.isalnum() or ch == "_":
                j = i
                while j < len(line) and (line[j].isalnum() or line[j] in "_."):
                    j += 1
                name = line[i:j]
                # 'p:' marks a prefix label; 'p:local' is a qualified symbol.
                if j < len(line) and line[j] == ":" and not line.startswith(":-", j):
                    j += 1
                    k = j
                    while k < len(line) and (line[k].isalnum() or line[k] in "_."):
                        k += 1
                    name = name + ":" + line[j:k]
                    j = k
                tokens.append((_T_NAME, name, line_no, col))
                i = j
                continue
            if ch == ":" and not line.startswith(":-", i):
                tokens.append((_T_NAME, ":", line_no, col))
                i += 1
                continue
            raise ParseError(f"unexpected character {ch!r}", line_no, col)
    tokens.append((_T_EOF, "", line_no + 1, 1))
    return tokens


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


@dataclass
class _Equation:
    outer: str
    inner: str
    direction: str  # "inv-of" when outer(inner(?v)) = ?v


class _RuleParser:
    def __init__(self, text: str, schema: RelationalSchema, base: Optional[str]):
        self.tokens = _tokenize(text)
        self.i = 0
        self.schema = schema
        self.prefixes: Dict[str, str] = {}
        if base:
            self.prefixes.setdefault("", base)
        self.equations: List[_Equation] = []
        self.raw_rules: List[Tuple] = []

    def _peek(self):
        return self.tokens[self.i]

    def _next(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def _error(self, message, tok=None) -> ParseError:
        tok = tok or self._peek()
        return ParseError(message, tok[2], tok[3])

    def _expect(self, kind):
        tok = self._next()
        if tok[0] != kind:
            raise self._error(f"expected {kind}, found {tok[1]!r}", tok)
        return tok

    def parse(self) -> RuleSet:
        depth = 0
        while True:
            tok = self._peek()
            if tok[0] == _T_EOF:
                break
            if tok[0] == _T_RPAREN and depth > 0:
                self._next()
                depth -= 1
                continue
            if tok[0] != _T_NAME:
                raise self._error(f"expected declaration, found {tok[1]!r}")
            if tok[1] == "Prefix":
                self._parse_prefix()
            elif tok[1] == "Group":
                self._next()
                self._expect(_T_LPAREN)
                depth += 1
            elif tok[1] == "Forall":
                self._parse_forall()
            else:
                raise self._error(f"expected Prefix/Group/Forall, found {tok[1]!r}")
        if depth != 0:
            raise self._error("unclosed Group")
        return self._build()

    def _parse_prefix(self) -> None:
        self._next()
        self._expect(_T_LPAREN)
        label_tok = self._expect(_T_NAME)
        label = label_tok[1]
        if not label.endswith(":"):
            raise self._error("prefix label must end with ':'", label_tok)
        iri_tok = self._expect(_T_IRI)
        self._expect(_T_RPAREN)
        self.prefixes[label[:-1]] = iri_tok[1]

    def _parse_forall(self) -> None:
        self._next()
        quantified: List[str] = []
        while self._peek()[0] == _T_VAR:
            quantified.append(self._next()[1])
        if not quantified:
            raise self._error("Forall needs at least one variable")
        self._expect(_T_LPAREN)
        first = self._expect(_T_NAME)
        self._expect(_T_LPAREN)
        nested = self._parse_term_args()
        # Equation form: outer(inner(?v)) = ?v
        if self._peek()[0] == _T_EQUALS:
            self._next()
            rhs = self._expect(_T_VAR)
            self._expect(_T_RPAREN)
            if len(nested) != 1 or not isinstance(nested[0], tuple):
                raise self._error("equation left side must be fn(fn(?var))")
            inner_name, inner_args = nested[0]
            if len(inner_args) != 1 or not isinstance(inner_args[0], str) \
                    or inner_args[0] != rhs[1]:
                raise self._error("equation must be outer(inner(?v)) = ?v")
            self.equations.append(_Equation(first[1], inner_name, "inv-of"))
            return
        # Rule form: Head(args) :- db_table(vars)
        head_args = nested
        self._expect(_T_IMPLIES)
        body_tok = self._expect(_T_NAME)
        self._expect(_T_LPAREN)
        body_args = self._parse_term_args()  # consumes the body's ')'
        self._expect(_T_RPAREN)              # closes the Forall formula
        self.raw_rules.append((first, head_args, body_tok, body_args, tuple(quantified)))

    def _parse_term_args(self) -> List:
        """Arguments up to the matching ')': variables or fn(?var) calls."""
        args: List = []
        while True:
            tok = self._peek()
            if tok[0] == _T_RPAREN:
                self._next()
                return args
            if tok[0] == _T_VAR:
                self._next()
                args.append(tok[1])
                continue
            if tok[0] == _T_NAME:
                self._next()
                self._expect(_T_LPAREN)
                inner = self._parse_term_args()
                args.append((tok[1], inner))
                continue
            raise self._error(f"unexpected token {tok[1]!r} in argument list")

    # -- assembly -----------------------------------------------------------

    def _resolve(self, symbol: str, tok) -> str:
        if ":" in symbol:
            prefix, _, local = symbol.partition(":")
            if prefix not in self.prefixes:
                raise self._error(f"undeclared prefix {prefix!r}", tok)
            return self.prefixes[prefix] + local
        if "" in self.prefixes:
            return self.prefixes[""] + symbol
        raise self._error(
            f"cannot resolve symbol {symbol!r}: declare Prefix(: <iri>) or pass a base", tok)

    def _build(self) -> RuleSet:
        rs = RuleSet(prefixes=dict(self.prefixes))
        # outer(inner(?v)) = ?v declares that outer undoes inner; a pair is
        # complete only when both directions are present.
        forward: Dict[str, set] = {}
        for eq in self.equations:
            forward.setdefault(eq.inner, set()).add(eq.outer)

        fn_home: Dict[str, Tuple[str, str]] = {}  # fn -> (table, key column)

        def bind(fn_name: str, table: str, position: int, tok) -> None:
            tdef = self.schema.table(table)
            column = tdef.columns[position]
            if column.pk:
                home = (table, column.name)
            elif column.fk is not None:
                home = column.fk
            else:
                raise self._error(
                    f"identity function {fn_name!r} applied to non-key column "
                    f"{column.name!r}", tok)
            existing = fn_home.get(fn_name)
            if existing is not None and existing != home:
                raise self._error(
                    f"identity function {fn_name!r} bound to both "
                    f"{existing[0]!r} and {home[0]!r}", tok)
            fn_home[fn_name] = home

        for head_tok, head_args, body_tok, body_args, quantified in self.raw_rules:
            body_name = body_tok[1]
            if not body_name.startswith("db_"):
                raise self._error(f"rule body must be a db_<table> predicate", body_tok)
            table = body_name[len("db_"):]
            if table not in self.schema.tables:
                raise UnknownTable(table)
            expected = len(self.schema.table(table).columns)
            if any(not isinstance(a, str) for a in body_args):
                raise self._error("body arguments must be plain variables", body_tok)
            if len(body_args) != expected:
                raise ArityMismatch(body_name, expected, len(body_args))
            if len(set(body_args)) != len(body_args):
                raise self._error("body variables must be distinct", body_tok)
            positions = {v: i for i, v in enumerate(body_args)}
            for var in body_args:
                if var not in quantified:
                    raise self._error(f"body variable ?{var} is not quantified", body_tok)
            for var in quantified:
                if var not in body_args:
                    rs.warnings.append(
                        f"?{var} is quantified but unused in db_{table} rule "
                        f"for {head_tok[1]}")
            rs.arities[body_name] = expected

            if not head_args:
                raise self._error("rule head needs arguments", head_tok)
            subject = head_args[0]
            if not (isinstance(subject, tuple) and len(subject[1]) == 1
                    and isinstance(subject[1][0], str)):
                raise self._error("rule head subject must be fn(?var)", head_tok)
            subject_fn, subject_var = subject[0], subject[1][0]
            if subject_var not in positions:
                raise self._error(f"?{subject_var} does not occur in the body", head_tok)
            bind(subject_fn, table, positions[subject_var], head_tok)

            if len(head_args) == 1:
                rs.rules.append(RuleRecord(
                    kind=MEMBERSHIP,
                    head_iri=self._resolve(head_tok[1], head_tok),
                    head_symbol=head_tok[1],
                    fn=subject_fn,
                    subject_position=positions[subject_var],
                    table=table,
                    body_vars=tuple(body_args),
                    quantified=quantified,
                ))
            elif len(head_args) == 2:
                value = head_args[1]
                if isinstance(value, str):
                    if value not in positions:
                        raise self._error(f"?{value} does not occur in the body", head_tok)
                    value_pos, value_fn = positions[value], None
                elif isinstance(value, tuple) and len(value[1]) == 1 \
                        and isinstance(value[1][0], str):
                    fn_name, var = value[0], value[1][0]
                    if var not in positions:
                        raise self._error(f"?{var} does not occur in the body", head_tok)
                    value_pos, value_fn = positions[var], fn_name
                    bind(fn_name, table, positions[var], head_tok)
                else:
                    raise self._error("rule value must be ?var or fn(?var)", head_tok)
                rs.rules.append(RuleRecord(
                    kind=PROPERTY,
                    head_iri=self._resolve(head_tok[1], head_tok),
                    head_symbol=head_tok[1],
                    fn=subject_fn,
                    subject_position=positions[subject_var],
                    table=table,
                    body_vars=tuple(body_args),
                    quantified=quantified,
                    value_position=value_pos,
                    value_fn=value_fn,
                ))
            else:
                raise self._error("rule heads are unary or binary", head_tok)

        for fn_name, (table, key_column) in sorted(fn_home.items()):
            inverses = forward.get(fn_name, set())
            paired = {inv for inv in inverses if fn_name in forward.get(inv, set())}
            if len(paired) != 1:
                raise ParseError(
                    f"identity function {fn_name!r} needs exactly one paired "
                    f"inverse declaration, found {sorted(inverses)}")
            rs.identity_functions[fn_name] = IdentityFunction(
                fn_name, table, key_column, paired.pop())
        return rs


def parse_rules(text: str, schema: RelationalSchema, base: Optional[str] = None) -> RuleSet:
    """Parse mapping rules against a schema; arities bind at parse time."""
    return _RuleParser(text, schema, base).parse()


def serialize_rules(rs: RuleSet) -> str:
    """Render a RuleSet back to source; parse_rules() re-reads it equal."""
    lines: List[str] = []
    for prefix in sorted(rs.prefixes):
        lines.append(f"Prefix({prefix}: <{rs.prefixes[prefix]}>)")
    if lines:
        lines.append("")
    for fn in sorted(rs.identity_functions.values(), key=lambda f: f.name):
        lines.append(f"Forall ?x ({fn.inverse}({fn.name}(?x)) = ?x)")
        lines.append(f"Forall ?P ({fn.name}({fn.inverse}(?P)) = ?P)")
    for rule in rs.rules:
        quantified = " ".join(f"?{v}" for v in rule.quantified)
        body = f"db_{rule.table}(" + " ".join(f"?{v}" for v in rule.body_vars) + ")"
        subject = f"{rule.fn}(?{rule.body_vars[rule.subject_position]})"
        if rule.kind == MEMBERSHIP:
            head = f"{rule.head_symbol}({subject})"
        else:
            value = f"?{rule.body_vars[rule.value_position]}"
            if rule.value_fn:
                value = f"{rule.value_fn}({value})"
            head = f"{rule.head_symbol}({subject} {value})"
        lines.append(f"Forall {quantified} ({head} :- {body})")
    return "\n".join(lines) + "\n"


def coverage_check(rs: RuleSet, d: ClassDescription, ontology) -> List[MissingMapping]:
    """Terms in d that no rule can populate; empty means a build can proceed."""
    missing: List[MissingMapping] = []
    seen: set = set()

    def note(iri: str) -> None:
        if iri not in seen:
            seen.add(iri)
            missing.append(MissingMapping(iri))

    def walk(desc: ClassDescription) -> None:
        if isinstance(desc, Named):
            if desc.iri == OWL_THING:
                return
            wanted = ontology.subclasses_or_self(desc.iri) if ontology else [desc.iri]
            if not rs.membership_for(wanted):
                note(desc.iri)
        elif isinstance(desc, IntersectionOf):
            for m in desc.members:
                walk(m)
        elif isinstance(desc, (ObjectSomeValuesFrom, ObjectHasValue,
                               DataSomeValuesFrom, DataHasValue)):
            if not rs.property_rules(desc.prop):
                note(desc.prop)
            if isinstance(desc, ObjectSomeValuesFrom):
                walk(desc.inner)

    walk(d)
    return missing
