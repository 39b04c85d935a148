/** Typed client for the control-plane HTTP API. No interpretation happens
 * here: status, affectedness, and plan failures all come from the server. */

export interface ServiceRow {
  name: string;
  service_uri: string;
  description: string;
  status: "active" | "inactive";
  status_reasons: string[];
  time_of_creation: string | null;
  time_of_rebuild: string | null;
}

export interface RenamedEntity {
  from: string;
  to: string;
}

export interface ChangeRow {
  timestamp: string;
  description_of_change: string;
  entity_added: string | null;
  entity_deleted: string | null;
  entity_renamed: RenamedEntity | null;
  affected_service: string[];
  affected_query: string[];
  entity_iri: string;
  entity_kind: string;
}

export interface SavedQueryRow {
  name: string;
  text: string;
  status: "plannable" | "unresolvable" | "unanswerable";
  services?: string[];
  pattern?: string;
  predicate?: string | null;
}

export interface BindingCell {
  type: "iri" | "literal" | "blank";
  value: string;
  datatype?: string;
}

export interface BindingTable {
  columns: string[];
  rows: BindingCell[][];
}

export interface ErrorDetail {
  pattern?: string;
  predicate?: string;
  candidates?: string[];
}

export interface ErrorEnvelope {
  code: string;
  message: string;
  detail: ErrorDetail | null;
}

export interface VocabularyTerm {
  iri: string;
  label: string;
  range?: string | null;
}

export interface Vocabulary {
  version: string;
  classes: VocabularyTerm[];
  object_properties: VocabularyTerm[];
  data_properties: VocabularyTerm[];
}

export interface GraphQueryPayload {
  nodes: object[];
  edges: object[];
  filters: object[];
  projection: string[];
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly envelope: ErrorEnvelope,
  ) {
    super(`${envelope.code}: ${envelope.message}`);
  }
}

async function asJson<T>(response: Response): Promise<T> {
  if (!response.ok) {
    let envelope: ErrorEnvelope;
    try {
      envelope = (await response.json()) as ErrorEnvelope;
    } catch {
      envelope = { code: `HTTP${response.status}`, message: response.statusText, detail: null };
    }
    throw new ApiError(response.status, envelope);
  }
  return (await response.json()) as T;
}

export class ApiClient {
  constructor(readonly base: string = "") {}

  private url(path: string): string {
    return this.base + path;
  }

  services(): Promise<ServiceRow[]> {
    return fetch(this.url("/api/services")).then((r) => asJson<ServiceRow[]>(r));
  }

  changes(): Promise<ChangeRow[]> {
    return fetch(this.url("/api/changes")).then((r) => asJson<ChangeRow[]>(r));
  }

  queries(): Promise<SavedQueryRow[]> {
    return fetch(this.url("/api/queries")).then((r) => asJson<SavedQueryRow[]>(r));
  }

  vocabulary(): Promise<Vocabulary> {
    return fetch(this.url("/api/vocabulary")).then((r) => asJson<Vocabulary>(r));
  }

  requestRebuild(name: string): Promise<{ queued: string; position: number }> {
    return fetch(this.url(`/api/services/${name}/rebuild`), { method: "POST" }).then((r) =>
      asJson<{ queued: string; position: number }>(r),
    );
  }

  runQueryText(text: string): Promise<BindingTable> {
    return this.runQuery({ text });
  }

  runQueryGraph(graph: GraphQueryPayload): Promise<BindingTable> {
    return this.runQuery({ graph });
  }

  runSavedQuery(name: string): Promise<BindingTable> {
    return this.runQuery({ name });
  }

  private runQuery(body: object): Promise<BindingTable> {
    return fetch(this.url("/api/query"), {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    }).then((r) => asJson<BindingTable>(r));
  }
}

/** Poll the service table until `name` reports active with a rebuild time.
 * Resolves with the final row, or rejects after timeoutMs. */
export async function pollUntilRebuilt(
  client: ApiClient,
  name: string,
  timeoutMs = 10_000,
  intervalMs = 250,
): Promise<ServiceRow> {
  const deadline = Date.now() + timeoutMs;
  for (;;) {
    const rows = await client.services();
    const row = rows.find((r) => r.name === name);
    if (row && row.status === "active" && row.time_of_rebuild) {
      return row;
    }
    if (Date.now() > deadline) {
      throw new Error(`rebuild of ${name} did not complete within ${timeoutMs}ms`);
    }
    await new Promise((resolve) => setTimeout(resolve, intervalMs));
  }
}
