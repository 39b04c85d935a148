/** The query workbench's AST: one structure, two views (canvas and text).
 * The canvas edits this AST directly; the text tab renders it; Run ships it
 * as the control plane's node/edge JSON. */
export function emptyQuery() {
    return { nodes: [], edges: [], filters: [] };
}
export function localName(iri) {
    const cut = Math.max(iri.lastIndexOf("#"), iri.lastIndexOf("/"));
    return cut >= 0 ? iri.slice(cut + 1) : iri;
}
/** Reasons the query cannot run; an empty list means Run is enabled. */
export function problems(query) {
    const out = [];
    if (query.nodes.length === 0) {
        out.push("the canvas is empty");
    }
    const hasPattern = query.edges.length > 0 || query.nodes.some((n) => n.kind === "variable" && n.classIri);
    if (query.nodes.length > 0 && !hasPattern) {
        out.push("add an edge or give a variable a class");
    }
    if (projection(query).length === 0 && query.nodes.length > 0) {
        out.push("no variable is projected");
    }
    const ids = new Set(query.nodes.map((n) => n.id));
    for (const edge of query.edges) {
        if (!ids.has(edge.source) || !ids.has(edge.target)) {
            out.push(`edge ${localName(edge.predicate)} references a missing node`);
        }
    }
    return out;
}
export function projection(query) {
    const projected = query.nodes.filter((n) => n.kind === "variable" && n.projected);
    const pool = projected.length
        ? projected
        : query.nodes.filter((n) => n.kind === "variable");
    return pool.map((n) => n.id);
}
export function toGraphJson(query) {
    return {
        nodes: query.nodes.map((n) => ({
            id: n.id,
            kind: n.kind,
            value: n.value,
            datatype: n.datatype,
            class: n.classIri,
        })),
        edges: query.edges.map((e) => ({
            source: e.source,
            target: e.target,
            predicate: e.predicate,
        })),
        filters: query.filters.map((f) => ({
            var: f.variable,
            value: f.value,
            datatype: f.datatype,
        })),
        projection: projection(query),
    };
}
/** Render the AST as query text; the text tab shows this for the canvas. */
export function toQueryText(query) {
    const lines = [];
    const vars = projection(query)
        .map((v) => `?${v}`)
        .join(" ");
    lines.push(`SELECT ${vars}`);
    lines.push("WHERE {");
    for (const node of query.nodes) {
        if (node.kind === "variable" && node.classIri) {
            lines.push(`  ?${node.id} a <${node.classIri}> .`);
        }
    }
    const term = (id) => {
        const node = query.nodes.find((n) => n.id === id);
        if (!node || node.kind === "variable") {
            return `?${id}`;
        }
        if (node.kind === "iri") {
            return `<${node.value ?? ""}>`;
        }
        return JSON.stringify(node.value ?? "");
    };
    for (const edge of query.edges) {
        lines.push(`  ${term(edge.source)} <${edge.predicate}> ${term(edge.target)} .`);
    }
    for (const filter of query.filters) {
        lines.push(`  FILTER(?${filter.variable} = ${JSON.stringify(filter.value)})`);
    }
    lines.push("}");
    return lines.join("\n");
}
/** Edges to highlight when the planner reports an unresolvable predicate. */
export function edgesForPredicate(query, predicate) {
    return query.edges.filter((e) => e.predicate === predicate);
}
/** Deterministic ring layout: the canvas is a pure function of the AST. */
export function layout(query, width, height) {
    const positions = new Map();
    const n = query.nodes.length;
    const radius = Math.max(60, Math.min(width, height) / 2 - 70);
    query.nodes.forEach((node, i) => {
        const angle = (2 * Math.PI * i) / Math.max(n, 1) - Math.PI / 2;
        positions.set(node.id, {
            x: Math.round(width / 2 + radius * Math.cos(angle)),
            y: Math.round(height / 2 + radius * Math.sin(angle)),
        });
    });
    return positions;
}
