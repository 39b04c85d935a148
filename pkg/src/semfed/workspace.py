"""Workspace: configuration, boot, and the operator-facing operations.

A workspace config (JSON) names the schema file, CSV directory, the versioned
domain/service ontology files, the rule files, the saved-query files, and a
listen address. Booting loads everything, synthesizes the service-ontology
entries, and deploys them. All mutating operations (ontology uploads, rule
switches, rebuild requests) go through one lock, matching the registry's
single-writer discipline.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Tuple

from .changes import (
    ChangeEvent,
    ChangeLog,
    RebuildOutcome,
    RebuildQueue,
    apply_changes,
    diff,
    impact,
)
from .errors import ParseError
from .forge import synthesize
from .ontology import (
    DomainOntology,
    ServiceOntology,
    inventory,
    load_ontology,
    load_service_ontology,
    validate_service_ontology,
)
from .queries import (
    AmbiguousPattern,
    BindingTable,
    DisconnectedQuery,
    GraphQuery,
    UnresolvablePattern,
    execute,
    parse_query,
    plan,
    query_from_json,
)
from .registry import Clock, FixedClock, Registry, SystemClock
from .relational import Database, load_csv, parse_schema
from .rules import RuleSet, parse_rules

DEFAULT_VOCAB = "http://fixture.local/vocab/malaria#"


class WorkspaceError(Exception):
    pass


@dataclass
class SavedQuery:
    name: str
    text: str
    unanswerable: bool = False

    def parse(self) -> GraphQuery:
        return parse_query(self.text, name=self.name)


@dataclass
class WorkspaceConfig:
    root: Path
    schema: Path
    csv_dir: Path
    domain_ontologies: Dict[str, Path]
    service_ontologies: Dict[str, Path]
    rules: Dict[str, Path]
    queries: List[Path]
    boot: Dict[str, str]
    listen: str = "127.0.0.1:8099"
    vocabulary: str = DEFAULT_VOCAB

    @classmethod
    def load(cls, path) -> "WorkspaceConfig":
        path = Path(path)
        raw = json.loads(path.read_text(encoding="utf-8"))
        root = path.parent

        def resolve(rel: str) -> Path:
            candidate = root / rel
            if not candidate.exists():
                raise WorkspaceError(f"configured path does not exist: {candidate}")
            return candidate

        return cls(
            root=root,
            schema=resolve(raw["schema"]),
            csv_dir=resolve(raw["csv_dir"]),
            domain_ontologies={k: resolve(v) for k, v in raw["domain_ontologies"].items()},
            service_ontologies={k: resolve(v) for k, v in raw["service_ontologies"].items()},
            rules={k: resolve(v) for k, v in raw["rules"].items()},
            queries=[resolve(q) for q in raw.get("queries", [])],
            boot=raw["boot"],
            listen=raw.get("listen", "127.0.0.1:8099"),
            vocabulary=raw.get("vocabulary", DEFAULT_VOCAB),
        )


def _load_saved_query(path: Path) -> SavedQuery:
    """Query files: '# name: ...' header lines, then the query text.

    A file containing only headers (no SELECT) is an unanswerable stub.
    """
    text = path.read_text(encoding="utf-8")
    name = path.stem
    body_lines: List[str] = []
    for line in text.splitlines():
        if line.startswith("# name:"):
            name = line[len("# name:"):].strip()
        else:
            body_lines.append(line)
    body = "\n".join(body_lines).strip()
    has_content = any(l.strip() and not l.lstrip().startswith("#") for l in body_lines)
    return SavedQuery(name=name, text=body, unanswerable=not has_content)


class Workspace:
    def __init__(self, config: WorkspaceConfig, clock: Optional[Clock] = None):
        self.config = config
        self.clock = clock or SystemClock()
        self.lock = threading.RLock()
        self.log = ChangeLog()
        self.rebuild_queue = RebuildQueue()
        self.saved_queries: List[SavedQuery] = []
        self.schema = None
        self.database: Optional[Database] = None
        self.domain_ontology: Optional[DomainOntology] = None
        self.service_ontology: Optional[ServiceOntology] = None
        self.rules: Optional[RuleSet] = None
        self.registry: Optional[Registry] = None

    # -- boot ----------------------------------------------------------------

    def boot(self) -> "Workspace":
        cfg = self.config
        self.schema = parse_schema(cfg.schema.read_text(encoding="utf-8"))
        self.database = load_csv(self.schema, cfg.csv_dir)
        self.domain_ontology = self._read_domain(cfg.boot["domain"])
        self.service_ontology = self._read_service(cfg.boot["service"])
        validate_service_ontology(self.service_ontology, self.domain_ontology)
        self.rules = self._read_rules(cfg.boot["rules"])
        self.registry = Registry(self.domain_ontology, self.database, self.clock)
        for name in sorted(self.service_ontology.entries):
            entry = self.service_ontology.entries[name]
            service = synthesize(entry, self.rules, self.schema, self.domain_ontology)
            self.registry.deploy(service)
        self.saved_queries = [_load_saved_query(p) for p in cfg.queries]
        return self

    def _read_domain(self, version: str) -> DomainOntology:
        path = self.config.domain_ontologies.get(version)
        if path is None:
            raise WorkspaceError(f"no domain ontology version {version!r}")
        return load_ontology(path.read_text(encoding="utf-8"), version=version)

    def _read_service(self, version: str) -> ServiceOntology:
        path = self.config.service_ontologies.get(version)
        if path is None:
            raise WorkspaceError(f"no service ontology version {version!r}")
        return load_service_ontology(path.read_text(encoding="utf-8"), version=version)

    def _read_rules(self, version: str) -> RuleSet:
        path = self.config.rules.get(version)
        if path is None:
            raise WorkspaceError(f"no rules version {version!r}")
        return parse_rules(path.read_text(encoding="utf-8"), self.schema,
                           base=self.config.vocabulary)

    # -- saved queries ---------------------------------------------------------

    def parsed_queries(self) -> List[Tuple[str, GraphQuery]]:
        out = []
        for sq in self.saved_queries:
            if sq.unanswerable:
                continue
            try:
                out.append((sq.name, sq.parse()))
            except (ParseError, DisconnectedQuery):
                continue
        return out

    def query_listing(self) -> List[dict]:
        listing = []
        for sq in self.saved_queries:
            row = {"name": sq.name, "text": sq.text}
            if sq.unanswerable:
                row["status"] = "unanswerable"
                listing.append(row)
                continue
            try:
                built = plan(sq.parse(), self.registry)
                row["status"] = "plannable"
                row["services"] = built.services()
            except UnresolvablePattern as exc:
                row["status"] = "unresolvable"
                row["pattern"] = repr(exc.pattern)
                row["predicate"] = exc.predicate
            except (ParseError, DisconnectedQuery, AmbiguousPattern) as exc:
                row["status"] = "unresolvable"
                row["pattern"] = str(exc)
                row["predicate"] = getattr(exc, "predicate", None)
            listing.append(row)
        return listing

    # -- query execution -------------------------------------------------------

    def run_query_text(self, text: str) -> BindingTable:
        query = parse_query(text)
        return execute(plan(query, self.registry), query, self.registry)

    def run_query_json(self, payload: dict) -> BindingTable:
        query = query_from_json(payload)
        return execute(plan(query, self.registry), query, self.registry)

    def run_saved_query(self, name: str) -> BindingTable:
        for sq in self.saved_queries:
            if sq.name == name:
                if sq.unanswerable:
                    raise WorkspaceError(f"{name!r} is an unanswerable stub")
                query = sq.parse()
                return execute(plan(query, self.registry), query, self.registry)
        raise WorkspaceError(f"no saved query named {name!r}")

    # -- change pipeline --------------------------------------------------------

    def apply_ontology_version(self, slot: str, text: str, version: str) -> List[ChangeEvent]:
        """Load a new ontology snapshot: diff -> impact -> apply."""
        with self.lock:
            if slot == "service":
                old, new = self.service_ontology, load_service_ontology(text, version)
                events = impact(
                    diff(inventory(old), inventory(new)),
                    registry=self.registry, clock=self.clock, slot=slot,
                    old_service_ontology=old, new_service_ontology=new,
                    saved_queries=self.parsed_queries(),
                )
                apply_changes(events, self.registry, self.log)
                self.service_ontology = new
            elif slot == "domain":
                old_d, new_d = self.domain_ontology, load_ontology(text, version)
                events = impact(
                    diff(inventory(old_d), inventory(new_d)),
                    registry=self.registry, clock=self.clock, slot=slot,
                    saved_queries=self.parsed_queries(),
                )
                apply_changes(events, self.registry, self.log)
                self.domain_ontology = new_d
                self.registry.set_ontology(new_d)
            else:
                raise WorkspaceError(f"unknown ontology slot {slot!r}")
            return events

    def apply_ontology_file(self, slot: str, version: str) -> List[ChangeEvent]:
        paths = self.config.service_ontologies if slot == "service" \
            else self.config.domain_ontologies
        path = paths.get(version)
        if path is None:
            raise WorkspaceError(f"no {slot} ontology version {version!r}")
        return self.apply_ontology_version(slot, path.read_text(encoding="utf-8"), version)

    def use_rules(self, version: str) -> RuleSet:
        with self.lock:
            self.rules = self._read_rules(version)
            return self.rules

    def use_rules_text(self, text: str, version: str) -> RuleSet:
        with self.lock:
            self.rules = parse_rules(text, self.schema, base=self.config.vocabulary)
            return self.rules

    def request_rebuild(self, name: str) -> int:
        with self.lock:
            return self.rebuild_queue.request(name, self.registry)

    def run_rebuild_queue(self) -> List[RebuildOutcome]:
        with self.lock:
            return self.rebuild_queue.run(
                self.registry, self.service_ontology, self.rules,
                self.schema, self.domain_ontology)

    # -- views -------------------------------------------------------------------

    def service_rows(self) -> List[dict]:
        rows = []
        for service in self.registry.services():
            rows.append({
                "name": service.name,
                "service_uri": f"http://{self.config.listen}/services/{service.name}",
                "description": service.description.doc,
                "status": service.status.state,
                "status_reasons": list(service.status.reasons),
                "time_of_creation": service.time_of_creation,
                "time_of_rebuild": service.time_of_rebuild,
            })
        return rows

    def change_rows(self) -> List[dict]:
        return [e.to_json() for e in reversed(self.log.events())]

    def vocabulary_rows(self) -> dict:
        """Active domain ontology's terms, as the query workbench's pickers."""
        ont = self.domain_ontology
        return {
            "version": ont.version,
            "classes": [{"iri": c.iri, "label": c.label}
                        for c in sorted(ont.classes.values(), key=lambda c: c.iri)],
            "object_properties": [{"iri": p.iri, "label": p.label}
                                  for p in sorted(ont.object_properties.values(),
                                                  key=lambda p: p.iri)],
            "data_properties": [{"iri": p.iri, "label": p.label, "range": p.range}
                                for p in sorted(ont.data_properties.values(),
                                                key=lambda p: p.iri)],
        }


def boot_workspace(config_path, clock: Optional[Clock] = None) -> Workspace:
    return Workspace(WorkspaceConfig.load(config_path), clock=clock).boot()


# ---------------------------------------------------------------------------
# Scenario replay: the end-to-end change-management walkthrough.
# ---------------------------------------------------------------------------

SCENARIO_BOOT_TS = "2018-01-21T14:33:08"
SCENARIO_REBUILD_TS = "2018-01-23T09:03:15"


def replay_scenario(config_path) -> dict:
    """Deterministic end-to-end run: deploy, answer, break, diagnose, rebuild.

    Returns a transcript dict; repeated runs produce identical output because
    every timestamp comes from a scripted clock.
    """
    clock = FixedClock(SCENARIO_BOOT_TS)
    ws = boot_workspace(config_path, clock=clock)
    transcript: dict = {"steps": []}

    def step(name: str, **detail) -> None:
        transcript["steps"].append({"step": name, **detail})

    step("boot", services=[r["name"] for r in ws.service_rows()],
         status=sorted({r["status"] for r in ws.service_rows()}))

    q1 = ws.run_saved_query("Which indoor residual sprayings used permethrin as an insecticide?")
    step("q1", rows=len(q1.rows), bindings=q1.as_json())

    events = ws.apply_ontology_file("service", "v2")
    step("service_ontology_v2", events=[e.to_json() for e in events])

    try:
        ws.run_saved_query("Which indoor residual sprayings used permethrin as an insecticide?")
        step("q1_after_change", error=None)
    except UnresolvablePattern as exc:
        step("q1_after_change", error="UnresolvablePattern",
             pattern=repr(exc.pattern), predicate=exc.predicate)

    ws.request_rebuild("getNameByInsecticideId")
    stale = ws.run_rebuild_queue()
    step("rebuild_with_stale_rules",
         outcomes=[{"service": o.service, "state": o.state, "detail": o.detail}
                   for o in stale])

    domain_events = ws.apply_ontology_file("domain", "v2")
    step("domain_ontology_v2", events=[e.to_json() for e in domain_events])
    ws.use_rules("v2")
    step("rules_v2", rules="v2")

    clock.set(SCENARIO_REBUILD_TS)
    ws.request_rebuild("getNameByInsecticideId")
    outcomes = ws.run_rebuild_queue()
    step("rebuild", outcomes=[{"service": o.service, "state": o.state,
                               "detail": o.detail} for o in outcomes])

    q1_again = ws.run_saved_query(
        "Which indoor residual sprayings used permethrin as an insecticide?")
    extended = ws.run_saved_query(
        "Which indoor residual spraying used permethrin as an insecticide "
        "and which kind of mosquitoes will be affected by it?")
    step("queries_after_rebuild", q1_rows=len(q1_again.rows),
         extended_rows=len(extended.rows), extended=extended.as_json())

    rebuilt = [r for r in ws.service_rows() if r["name"] == "getNameByInsecticideId"][0]
    transcript["summary"] = (
        f"rebuilt: getNameByInsecticideId; extended query rows: {len(extended.rows)}")
    transcript["time_of_rebuild"] = rebuilt["time_of_rebuild"]
    transcript["workspace"] = str(config_path)
    return transcript
