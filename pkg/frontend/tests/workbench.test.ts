import assert from "node:assert/strict";
import { test } from "node:test";

import {
  edgesForPredicate,
  emptyQuery,
  layout,
  problems,
  toGraphJson,
  toQueryText,
  type WorkbenchQuery,
} from "../src/workbench.js";

const MAL = "http://fixture.local/vocab/malaria#";

function q1Canvas(): WorkbenchQuery {
  return {
    nodes: [
      { id: "inter", kind: "variable", classIri: MAL + "IndoorResidualSpraying", projected: true },
      { id: "inter_name", kind: "variable", projected: true },
      { id: "ins", kind: "variable" },
      { id: "ins_name", kind: "variable" },
    ],
    edges: [
      { source: "inter", target: "inter_name", predicate: MAL + "has_name" },
      { source: "inter", target: "ins", predicate: MAL + "has_insecticide" },
      { source: "ins", target: "ins_name", predicate: MAL + "has_name" },
    ],
    filters: [{ variable: "ins_name", value: "Permethrin" }],
  };
}

test("an empty canvas cannot run", () => {
  assert.ok(problems(emptyQuery()).length > 0);
});

test("the two-branch permethrin canvas is runnable", () => {
  assert.deepEqual(problems(q1Canvas()), []);
});

test("canvas serializes to the control-plane graph payload", () => {
  const payload = toGraphJson(q1Canvas());
  assert.deepEqual(payload.projection, ["inter", "inter_name"]);
  assert.equal(payload.nodes.length, 4);
  assert.equal(payload.edges.length, 3);
  assert.deepEqual(payload.filters, [
    { var: "ins_name", value: "Permethrin", datatype: undefined },
  ]);
  const typed = payload.nodes.find((n) => (n as { id: string }).id === "inter") as {
    class?: string;
  };
  assert.equal(typed.class, MAL + "IndoorResidualSpraying");
});

test("the text tab renders the same AST", () => {
  const text = toQueryText(q1Canvas());
  assert.match(text, /SELECT \?inter \?inter_name/);
  assert.match(text, /\?inter a <.*IndoorResidualSpraying>/);
  assert.match(text, /\?ins <.*has_name> \?ins_name/);
  assert.match(text, /FILTER\(\?ins_name = "Permethrin"\)/);
});

test("offending predicate maps back to canvas edges", () => {
  const hits = edgesForPredicate(q1Canvas(), MAL + "has_name");
  assert.equal(hits.length, 2);
  assert.deepEqual(edgesForPredicate(q1Canvas(), MAL + "located_in"), []);
});

test("layout is deterministic and covers every node", () => {
  const canvas = q1Canvas();
  const a = layout(canvas, 760, 420);
  const b = layout(canvas, 760, 420);
  assert.deepEqual([...a.entries()], [...b.entries()]);
  for (const node of canvas.nodes) {
    assert.ok(a.has(node.id));
  }
});
