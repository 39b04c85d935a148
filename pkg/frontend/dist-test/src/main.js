/** Wiring: tabs, the 2-second poll, rebuild round trips, and the workbench. */
import { ApiClient, ApiError } from "./api.js";
import { changeViewRows, serviceViewRows, settlePending } from "./model.js";
import { renderBindings, renderCanvas, renderChangesTable, renderQueriesTable, renderQueryError, renderServicesTable, } from "./views.js";
import { emptyQuery, localName, problems, toGraphJson, toQueryText, } from "./workbench.js";
const POLL_MS = 2000;
const client = new ApiClient("");
const pendingRebuilds = new Set();
let pollTimer = null;
let activeTab = "services";
let vocabulary = null;
const query = emptyQuery();
let highlightPredicate = null;
let nodeCounter = 0;
function byId(id) {
    const node = document.getElementById(id);
    if (!node)
        throw new Error(`missing #${id}`);
    return node;
}
function setStatusLine(text) {
    byId("status-line").textContent = text;
}
// -- services -----------------------------------------------------------------
async function refreshServices() {
    const rows = await client.services();
    const settled = settlePending(pendingRebuilds, rows);
    for (const done of settled.completed) {
        pendingRebuilds.delete(done);
        setStatusLine(`${done} rebuilt`);
    }
    const view = serviceViewRows(rows, pendingRebuilds);
    const host = byId("services-view");
    host.replaceChildren(renderServicesTable(view, requestRebuild));
}
function requestRebuild(name) {
    if (pendingRebuilds.has(name))
        return; // one in-flight mutation per row
    pendingRebuilds.add(name);
    client
        .requestRebuild(name)
        .then((r) => setStatusLine(`${name} queued at position ${r.position}`))
        .catch((err) => {
        pendingRebuilds.delete(name);
        setStatusLine(String(err));
    })
        .finally(() => void refreshServices());
}
// -- changes --------------------------------------------------------------------
async function refreshChanges() {
    const rows = await client.changes();
    byId("changes-view").replaceChildren(renderChangesTable(changeViewRows(rows), (name) => {
        switchTab("services");
        void refreshServices().then(() => {
            document
                .querySelector(`tr[data-service="${name}"]`)
                ?.scrollIntoView({ block: "center" });
        });
    }));
}
// -- saved queries ----------------------------------------------------------------
async function refreshQueries() {
    const rows = await client.queries();
    byId("saved-view").replaceChildren(renderQueriesTable(rows, (name) => {
        client
            .runSavedQuery(name)
            .then((table) => byId("saved-results").replaceChildren(renderBindings(table)))
            .catch((err) => showError("saved-results", err));
    }));
}
function showError(hostId, err) {
    if (err instanceof ApiError) {
        byId(hostId).replaceChildren(renderQueryError(err.envelope));
    }
    else {
        byId(hostId).replaceChildren(String(err));
    }
}
// -- workbench ---------------------------------------------------------------------
function redrawWorkbench() {
    byId("canvas-host").replaceChildren(renderCanvas(query, highlightPredicate));
    const issues = problems(query);
    byId("run-canvas").disabled = issues.length > 0;
    byId("canvas-problems").textContent = issues.join("; ");
    byId("query-text").value = toQueryText(query);
    const nodeSelects = [byId("edge-source"), byId("edge-target"), byId("filter-var"),
        byId("class-node")];
    for (const select of nodeSelects) {
        const wantVarsOnly = select.id === "filter-var" || select.id === "class-node";
        select.replaceChildren(...query.nodes
            .filter((n) => !wantVarsOnly || n.kind === "variable")
            .map((n) => {
            const option = document.createElement("option");
            option.value = n.id;
            option.textContent = n.kind === "variable" ? `?${n.id}` : (n.value ?? n.id);
            return option;
        }));
    }
}
function setupWorkbench() {
    byId("add-variable").addEventListener("click", () => {
        const id = prompt("variable name", `v${nodeCounter}`);
        if (!id)
            return;
        nodeCounter += 1;
        query.nodes.push({ id, kind: "variable", projected: true });
        highlightPredicate = null;
        redrawWorkbench();
    });
    byId("add-constant").addEventListener("click", () => {
        const value = prompt("literal value");
        if (value === null)
            return;
        const id = `c${nodeCounter}`;
        nodeCounter += 1;
        query.nodes.push({ id, kind: "literal", value });
        highlightPredicate = null;
        redrawWorkbench();
    });
    byId("set-class").addEventListener("click", () => {
        const node = byId("class-node").value;
        const classIri = byId("class-pick").value;
        const target = query.nodes.find((n) => n.id === node);
        if (target) {
            target.classIri = classIri || undefined;
            redrawWorkbench();
        }
    });
    byId("add-edge").addEventListener("click", () => {
        const source = byId("edge-source").value;
        const target = byId("edge-target").value;
        const predicate = byId("edge-predicate").value;
        if (!source || !target || !predicate || source === target)
            return;
        query.edges.push({ source, target, predicate });
        highlightPredicate = null;
        redrawWorkbench();
    });
    byId("add-filter").addEventListener("click", () => {
        const variable = byId("filter-var").value;
        const value = byId("filter-value").value;
        if (!variable || !value)
            return;
        query.filters.push({ variable, value });
        redrawWorkbench();
    });
    byId("clear-canvas").addEventListener("click", () => {
        query.nodes.length = 0;
        query.edges.length = 0;
        query.filters.length = 0;
        highlightPredicate = null;
        byId("workbench-results").replaceChildren();
        redrawWorkbench();
    });
    byId("run-canvas").addEventListener("click", () => {
        highlightPredicate = null;
        client
            .runQueryGraph(toGraphJson(query))
            .then((table) => {
            byId("workbench-results").replaceChildren(renderBindings(table));
            redrawWorkbench();
        })
            .catch((err) => {
            if (err instanceof ApiError && err.envelope.detail?.predicate) {
                highlightPredicate = err.envelope.detail.predicate;
            }
            showError("workbench-results", err);
            redrawWorkbench();
        });
    });
    byId("run-text").addEventListener("click", () => {
        const text = byId("query-text").value;
        client
            .runQueryText(text)
            .then((table) => byId("workbench-results").replaceChildren(renderBindings(table)))
            .catch((err) => showError("workbench-results", err));
    });
}
async function loadVocabulary() {
    vocabulary = await client.vocabulary();
    const classPick = byId("class-pick");
    classPick.replaceChildren(document.createElement("option"), ...vocabulary.classes.map((c) => {
        const option = document.createElement("option");
        option.value = c.iri;
        option.textContent = localName(c.iri);
        return option;
    }));
    const predicatePick = byId("edge-predicate");
    predicatePick.replaceChildren(...[...vocabulary.object_properties, ...vocabulary.data_properties].map((p) => {
        const option = document.createElement("option");
        option.value = p.iri;
        option.textContent = localName(p.iri);
        return option;
    }));
}
// -- tabs and polling ----------------------------------------------------------------
function refreshActive() {
    if (activeTab === "services")
        void refreshServices().catch(() => undefined);
    if (activeTab === "changes")
        void refreshChanges().catch(() => undefined);
    if (activeTab === "saved")
        void refreshQueries().catch(() => undefined);
}
function switchTab(tab) {
    activeTab = tab;
    for (const section of document.querySelectorAll("[data-tab]")) {
        section.hidden = section.dataset.tab !== tab;
    }
    for (const button of document.querySelectorAll("[data-tab-button]")) {
        button.classList.toggle("active", button.dataset.tabButton === tab);
    }
    // cancel-on-navigate: one live poll loop, always for the visible tab
    if (pollTimer !== null)
        window.clearInterval(pollTimer);
    refreshActive();
    pollTimer = window.setInterval(refreshActive, POLL_MS);
}
function init() {
    for (const button of document.querySelectorAll("[data-tab-button]")) {
        button.addEventListener("click", () => switchTab(button.dataset.tabButton ?? "services"));
    }
    setupWorkbench();
    redrawWorkbench();
    void loadVocabulary().catch((err) => setStatusLine(String(err)));
    switchTab("services");
}
document.addEventListener("DOMContentLoaded", init);
