/** Dashboard scenario against a live fixture server.
 *
 * Boots the backend (`semfed serve` on an ephemeral port), then drives the
 * same client + view-model layer the browser uses: four green rows, the
 * change scenario turning getNameByInsecticideId red, a rebuild request
 * settling green with a populated Time of Rebuild inside 10 s, and the
 * change feed carrying the two expected addition rows verbatim.
 */

import assert from "node:assert/strict";
import { spawn, type ChildProcess } from "node:child_process";
import { once } from "node:events";
import { readFileSync } from "node:fs";
import { fileURLToPath } from "node:url";
import { dirname, join } from "node:path";
import { after, before, test } from "node:test";

import { ApiClient, pollUntilRebuilt } from "../src/api.js";
import { changeViewRows, serviceViewRows, settlePending } from "../src/model.js";

const REPO_ROOT = join(dirname(fileURLToPath(import.meta.url)), "..", "..", "..");
const FIXTURES = join(REPO_ROOT, "src", "semfed", "fixtures", "core");

const Q1_NAME = "Which indoor residual sprayings used permethrin as an insecticide?";

let server: ChildProcess;
let base = "";
let client: ApiClient;

async function upload(path: string, body: object): Promise<Response> {
  const response = await fetch(base + path, {
    method: "POST",
    headers: { "Content-Type": "application/json" },
    body: JSON.stringify(body),
  });
  assert.ok(response.ok, `${path} -> ${response.status}`);
  return response;
}

before(async () => {
  server = spawn("semfed", ["serve", "--listen", "127.0.0.1:0"], {
    cwd: REPO_ROOT,
    stdio: ["ignore", "pipe", "pipe"],
  });
  const url: string = await new Promise((resolve, reject) => {
    const timer = setTimeout(() => reject(new Error("server did not start")), 15_000);
    let buffer = "";
    server.stdout!.on("data", (chunk: Buffer) => {
      buffer += chunk.toString();
      const match = buffer.match(/serving \d+ services on (http:\/\/[^\s]+)/);
      if (match) {
        clearTimeout(timer);
        resolve(match[1]);
      }
    });
    server.stderr!.on("data", (chunk: Buffer) => process.stderr.write(chunk));
    server.on("exit", (code) => reject(new Error(`server exited early (${code})`)));
  });
  base = url;
  client = new ApiClient(base);
});

after(async () => {
  if (server && server.exitCode === null) {
    server.kill("SIGINT");
    await once(server, "exit").catch(() => undefined);
  }
});

test("services view starts with four green rows", async () => {
  const rows = serviceViewRows(await client.services(), new Set());
  assert.equal(rows.length, 4);
  assert.ok(rows.every((r) => r.accent === "green"));
  assert.ok(rows.every((r) => r.timeOfRebuild === "N/A"));
  assert.ok(rows.every((r) => !r.rebuildEnabled));
});

test("saved query listing marks the permethrin question plannable", async () => {
  const queries = await client.queries();
  const q1 = queries.find((q) => q.name === Q1_NAME);
  assert.ok(q1);
  assert.equal(q1!.status, "plannable");
  const table = await client.runSavedQuery(Q1_NAME);
  assert.equal(table.rows.length, 3);
});

test("the change scenario turns getNameByInsecticideId red", async () => {
  const svcV2 = readFileSync(join(FIXTURES, "services", "svc-v2.ttl"), "utf-8");
  await upload("/api/ontology/versions", { slot: "service", version: "v2", text: svcV2 });

  const rows = serviceViewRows(await client.services(), new Set());
  const broken = rows.find((r) => r.name === "getNameByInsecticideId");
  assert.ok(broken);
  assert.equal(broken!.accent, "red");
  assert.equal(broken!.rebuildEnabled, true);
  assert.ok(rows.filter((r) => r.accent === "green").length === 3);

  const queries = await client.queries();
  assert.equal(queries.find((q) => q.name === Q1_NAME)!.status, "unresolvable");
});

test("the changes view renders the two addition rows verbatim", async () => {
  const feed = changeViewRows(await client.changes());
  assert.equal(feed.length, 2);
  // newest first: xsd:string arrived second
  const [stringRow, modeRow] = feed;
  assert.equal(modeRow.descriptionOfChange, "An entity is added to the output definition");
  assert.equal(modeRow.entityAdded, "has_mode_of_action");
  assert.equal(modeRow.entityDeleted, "N/A");
  assert.equal(modeRow.entityRenamed, "N/A");
  assert.deepEqual(modeRow.affectedService, ["getNameByInsecticideId"]);
  assert.deepEqual(modeRow.affectedQuery, [Q1_NAME]);
  assert.equal(stringRow.descriptionOfChange, "An entity is added to the output definition");
  assert.equal(stringRow.entityAdded, "xsd:string");
  assert.deepEqual(stringRow.affectedService, ["getNameByInsecticideId"]);
  assert.deepEqual(stringRow.affectedQuery, [Q1_NAME]);
});

test("request rebuild settles green with Time of Rebuild inside 10 s", async () => {
  const domainV2 = readFileSync(join(FIXTURES, "ontology", "domain-v2.ttl"), "utf-8");
  await upload("/api/ontology/versions", { slot: "domain", version: "v2", text: domainV2 });
  await upload("/api/rules/versions", { version: "v2" });

  // the user checks Request Rebuild and confirms
  const pending = new Set(["getNameByInsecticideId"]);
  const queued = await client.requestRebuild("getNameByInsecticideId");
  assert.equal(queued.queued, "getNameByInsecticideId");

  const row = await pollUntilRebuilt(client, "getNameByInsecticideId", 10_000);
  assert.equal(row.status, "active");
  assert.ok(row.time_of_rebuild);

  const settled = settlePending(pending, await client.services());
  assert.deepEqual(settled.completed, ["getNameByInsecticideId"]);
  const view = serviceViewRows(await client.services(), settled.pending);
  const rebuilt = view.find((r) => r.name === "getNameByInsecticideId")!;
  assert.equal(rebuilt.accent, "green");
  assert.notEqual(rebuilt.timeOfRebuild, "N/A");
  assert.equal(rebuilt.rebuildEnabled, false);
});

test("the workbench can run the extended question after the rebuild", async () => {
  const MAL = "http://fixture.local/vocab/malaria#";
  const table = await client.runQueryGraph({
    nodes: [
      { id: "inter", kind: "variable", class: MAL + "IndoorResidualSpraying" },
      { id: "ins", kind: "variable" },
      { id: "ins_name", kind: "variable" },
      { id: "mode", kind: "variable" },
    ],
    edges: [
      { source: "inter", target: "ins", predicate: MAL + "has_insecticide" },
      { source: "ins", target: "ins_name", predicate: MAL + "has_name" },
      { source: "ins", target: "mode", predicate: MAL + "has_mode_of_action" },
    ],
    filters: [{ var: "ins_name", value: "Permethrin" }],
    projection: ["inter", "mode"],
  });
  assert.equal(table.rows.length, 3);
  assert.ok(table.rows.every((row) => row[1].value === "contact & airborne"));
});
