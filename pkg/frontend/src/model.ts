/** Pure view-model builders: UI state is a function of the latest API
 * payloads plus the set of pending operator actions. */

import type { ChangeRow, ServiceRow } from "./api.js";

export type Accent = "green" | "red";

export interface ServiceViewRow {
  name: string;
  serviceUri: string;
  description: string;
  timeOfCreation: string;
  timeOfRebuild: string;
  accent: Accent;
  reasons: string[];
  rebuildEnabled: boolean;
  rebuildPending: boolean;
}

const NA = "N/A";

export function serviceViewRows(
  rows: ServiceRow[],
  pending: ReadonlySet<string>,
): ServiceViewRow[] {
  return rows.map((row) => ({
    name: row.name,
    serviceUri: row.service_uri,
    description: row.description || (row.status === "inactive" ? "INACTIVE" : ""),
    timeOfCreation: row.time_of_creation ?? NA,
    timeOfRebuild: row.time_of_rebuild ?? NA,
    accent: row.status === "active" ? "green" : "red",
    reasons: row.status_reasons,
    rebuildEnabled: row.status === "inactive" && !pending.has(row.name),
    rebuildPending: pending.has(row.name),
  }));
}

export interface ChangeViewRow {
  timestamp: string;
  descriptionOfChange: string;
  entityAdded: string;
  entityDeleted: string;
  entityRenamed: string;
  affectedService: string[];
  affectedQuery: string[];
}

/** The seven feed columns, newest first (the API already orders them). */
export function changeViewRows(rows: ChangeRow[]): ChangeViewRow[] {
  return rows.map((row) => ({
    timestamp: row.timestamp,
    descriptionOfChange: row.description_of_change,
    entityAdded: row.entity_added ?? NA,
    entityDeleted: row.entity_deleted ?? NA,
    entityRenamed: row.entity_renamed
      ? `${row.entity_renamed.from} → ${row.entity_renamed.to}`
      : NA,
    affectedService: row.affected_service,
    affectedQuery: row.affected_query,
  }));
}

/** Rebuilds still pending after a poll: done once active with a rebuild time. */
export function settlePending(
  pending: ReadonlySet<string>,
  rows: ServiceRow[],
): { pending: Set<string>; completed: string[] } {
  const next = new Set<string>();
  const completed: string[] = [];
  for (const name of pending) {
    const row = rows.find((r) => r.name === name);
    if (row && row.status === "active" && row.time_of_rebuild) {
      completed.push(name);
    } else {
      next.add(name);
    }
  }
  return { pending: next, completed };
}
