/** DOM rendering. Everything here consumes view models verbatim; no status
 * or plan logic lives on this side of the API. */

import type { BindingTable, ErrorEnvelope, SavedQueryRow } from "./api.js";
import type { ChangeViewRow, ServiceViewRow } from "./model.js";
import { layout, localName, type QueryEdge, type WorkbenchQuery } from "./workbench.js";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  ...children: (Node | string)[]
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) {
    node.setAttribute(key, value);
  }
  node.append(...children);
  return node;
}

export function renderServicesTable(
  rows: ServiceViewRow[],
  onRebuild: (name: string) => void,
): HTMLTableElement {
  const table = el("table", { class: "grid", id: "services-table" });
  table.append(
    el(
      "thead",
      {},
      el(
        "tr",
        {},
        ...["Service URI", "Description", "Time of Creation", "Time of Rebuild",
            "Request Rebuild"].map((h) => el("th", {}, h)),
      ),
    ),
  );
  const body = el("tbody");
  for (const row of rows) {
    const checkbox = el("input", { type: "checkbox" }) as HTMLInputElement;
    checkbox.disabled = !row.rebuildEnabled;
    checkbox.checked = row.rebuildPending;
    checkbox.addEventListener("change", () => {
      if (checkbox.checked && confirm(`Queue a rebuild of ${row.name}?`)) {
        onRebuild(row.name);
      } else {
        checkbox.checked = false;
      }
    });
    const uri = el("td", { class: "uri" }, row.serviceUri);
    uri.title = row.reasons.join("\n");
    const tr = el(
      "tr",
      { class: `accent-${row.accent}`, "data-service": row.name },
      uri,
      el("td", {}, row.description),
      el("td", {}, row.timeOfCreation),
      el("td", {}, row.timeOfRebuild),
      el("td", { class: "center" }, checkbox),
    );
    if (row.rebuildPending) {
      tr.classList.add("pending");
    }
    body.append(tr);
  }
  table.append(body);
  return table;
}

export function renderChangesTable(
  rows: ChangeViewRow[],
  onServiceClick: (name: string) => void,
): HTMLTableElement {
  const table = el("table", { class: "grid", id: "changes-table" });
  table.append(
    el(
      "thead",
      {},
      el(
        "tr",
        {},
        ...["Timestamp", "Description of change", "Entity added", "Entity deleted",
            "Entity renamed", "Affected service", "Affected query"].map((h) =>
          el("th", {}, h),
        ),
      ),
    ),
  );
  const body = el("tbody");
  for (const row of rows) {
    const services = el("td", {});
    row.affectedService.forEach((name, i) => {
      if (i > 0) services.append(", ");
      const link = el("a", { href: "#services", class: "service-link" }, name);
      link.addEventListener("click", (event) => {
        event.preventDefault();
        onServiceClick(name);
      });
      services.append(link);
    });
    if (!row.affectedService.length) services.append("N/A");
    body.append(
      el(
        "tr",
        {},
        el("td", {}, row.timestamp),
        el("td", {}, row.descriptionOfChange),
        el("td", { class: "entity" }, row.entityAdded),
        el("td", { class: "entity" }, row.entityDeleted),
        el("td", { class: "entity" }, row.entityRenamed),
        services,
        el("td", {}, row.affectedQuery.join("; ") || "N/A"),
      ),
    );
  }
  table.append(body);
  return table;
}

export function renderQueriesTable(
  rows: SavedQueryRow[],
  onRun: (name: string) => void,
): HTMLTableElement {
  const table = el("table", { class: "grid", id: "queries-table" });
  table.append(
    el("thead", {}, el("tr", {},
      el("th", {}, "Saved query"), el("th", {}, "Plan status"), el("th", {}, ""))),
  );
  const body = el("tbody");
  for (const row of rows) {
    const run = el("button", {}, "Run") as HTMLButtonElement;
    run.disabled = row.status !== "plannable";
    run.addEventListener("click", () => onRun(row.name));
    const status = el("td", { class: `plan-${row.status}` }, row.status);
    if (row.predicate) {
      status.title = `unresolvable predicate: ${row.predicate}`;
    }
    body.append(el("tr", {}, el("td", {}, row.name), status, el("td", {}, run)));
  }
  table.append(body);
  return table;
}

export function renderBindings(table: BindingTable): HTMLElement {
  if (!table.rows.length) {
    return el("p", { class: "empty" }, "no rows");
  }
  const grid = el("table", { class: "grid", id: "bindings" });
  grid.append(
    el("thead", {}, el("tr", {}, ...table.columns.map((c) => el("th", {}, `?${c}`)))),
  );
  const body = el("tbody");
  for (const row of table.rows) {
    body.append(el("tr", {}, ...row.map((cell) => el("td", { class: cell.type }, cell.value))));
  }
  grid.append(body);
  return grid;
}

export function renderQueryError(envelope: ErrorEnvelope): HTMLElement {
  const box = el("div", { class: "error-box" });
  box.append(el("strong", {}, envelope.code), " ", envelope.message);
  if (envelope.detail?.pattern) {
    box.append(el("div", { class: "pattern" }, envelope.detail.pattern));
  }
  return box;
}

/** SVG canvas: a pure function of the AST plus an optional predicate to
 * paint red (the planner's unresolvable edge). */
export function renderCanvas(
  query: WorkbenchQuery,
  highlightPredicate: string | null,
): SVGSVGElement {
  const width = 760;
  const height = 420;
  const svg = document.createElementNS("http://www.w3.org/2000/svg", "svg");
  svg.setAttribute("viewBox", `0 0 ${width} ${height}`);
  svg.setAttribute("id", "canvas");
  const positions = layout(query, width, height);

  const svgEl = (name: string, attrs: Record<string, string>): SVGElement => {
    const node = document.createElementNS("http://www.w3.org/2000/svg", name);
    for (const [key, value] of Object.entries(attrs)) {
      node.setAttribute(key, value);
    }
    return node;
  };

  const offending = (edge: QueryEdge): boolean =>
    highlightPredicate !== null && edge.predicate === highlightPredicate;

  for (const edge of query.edges) {
    const a = positions.get(edge.source);
    const b = positions.get(edge.target);
    if (!a || !b) continue;
    const line = svgEl("line", {
      x1: String(a.x), y1: String(a.y), x2: String(b.x), y2: String(b.y),
      class: offending(edge) ? "edge offending" : "edge",
    });
    svg.append(line);
    const label = svgEl("text", {
      x: String((a.x + b.x) / 2),
      y: String((a.y + b.y) / 2 - 6),
      class: offending(edge) ? "edge-label offending" : "edge-label",
      "text-anchor": "middle",
    });
    label.textContent = localName(edge.predicate);
    svg.append(label);
  }

  for (const node of query.nodes) {
    const pos = positions.get(node.id);
    if (!pos) continue;
    const group = svgEl("g", { class: `node kind-${node.kind}` });
    group.append(
      svgEl(node.kind === "variable" ? "circle" : "rect",
        node.kind === "variable"
          ? { cx: String(pos.x), cy: String(pos.y), r: "26" }
          : { x: String(pos.x - 34), y: String(pos.y - 16),
              width: "68", height: "32", rx: "6" }),
    );
    const text = svgEl("text", {
      x: String(pos.x), y: String(pos.y + 4), "text-anchor": "middle",
    });
    text.textContent = node.kind === "variable" ? `?${node.id}` : (node.value ?? "");
    group.append(text);
    if (node.kind === "variable" && node.classIri) {
      const cls = svgEl("text", {
        x: String(pos.x), y: String(pos.y + 42), "text-anchor": "middle",
        class: "node-class",
      });
      cls.textContent = localName(node.classIri);
      group.append(cls);
    }
    svg.append(group);
  }
  return svg;
}
