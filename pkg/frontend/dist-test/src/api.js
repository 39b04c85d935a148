/** Typed client for the control-plane HTTP API. No interpretation happens
 * here: status, affectedness, and plan failures all come from the server. */
export class ApiError extends Error {
    status;
    envelope;
    constructor(status, envelope) {
        super(`${envelope.code}: ${envelope.message}`);
        this.status = status;
        this.envelope = envelope;
    }
}
async function asJson(response) {
    if (!response.ok) {
        let envelope;
        try {
            envelope = (await response.json());
        }
        catch {
            envelope = { code: `HTTP${response.status}`, message: response.statusText, detail: null };
        }
        throw new ApiError(response.status, envelope);
    }
    return (await response.json());
}
export class ApiClient {
    base;
    constructor(base = "") {
        this.base = base;
    }
    url(path) {
        return this.base + path;
    }
    services() {
        return fetch(this.url("/api/services")).then((r) => asJson(r));
    }
    changes() {
        return fetch(this.url("/api/changes")).then((r) => asJson(r));
    }
    queries() {
        return fetch(this.url("/api/queries")).then((r) => asJson(r));
    }
    vocabulary() {
        return fetch(this.url("/api/vocabulary")).then((r) => asJson(r));
    }
    requestRebuild(name) {
        return fetch(this.url(`/api/services/${name}/rebuild`), { method: "POST" }).then((r) => asJson(r));
    }
    runQueryText(text) {
        return this.runQuery({ text });
    }
    runQueryGraph(graph) {
        return this.runQuery({ graph });
    }
    runSavedQuery(name) {
        return this.runQuery({ name });
    }
    runQuery(body) {
        return fetch(this.url("/api/query"), {
            method: "POST",
            headers: { "Content-Type": "application/json" },
            body: JSON.stringify(body),
        }).then((r) => asJson(r));
    }
}
/** Poll the service table until `name` reports active with a rebuild time.
 * Resolves with the final row, or rejects after timeoutMs. */
export async function pollUntilRebuilt(client, name, timeoutMs = 10_000, intervalMs = 250) {
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
