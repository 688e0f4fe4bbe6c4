/**
 * Properties-editor form logic. The port-mapping rule from the editor:
 * a host port cannot be entered until the container port holds a valid
 * port, and clearing the container port clears and disables the host input.
 */

import type { PortDto } from "./types.js";

export interface PortRow {
  container: string;
  host: string;
  protocol: "tcp" | "udp";
}

export function parsePort(text: string): number | null {
  if (!/^\d+$/.test(text.trim())) return null;
  const value = Number(text.trim());
  return value >= 1 && value <= 65535 ? value : null;
}

export function hostInputEnabled(row: PortRow): boolean {
  return parsePort(row.container) !== null;
}

/** Enforce the consistency rule after any edit. */
export function normalizePortRow(row: PortRow): PortRow {
  if (parsePort(row.container) === null) {
    return { ...row, host: "" };
  }
  return row;
}

/** Rows -> the set_property value; rows without a valid container port drop out. */
export function rowsToPorts(rows: PortRow[]): PortDto[] {
  const out: PortDto[] = [];
  for (const row of rows) {
    const container = parsePort(row.container);
    if (container === null) continue;
    const host = parsePort(row.host);
    out.push({
      container_port: container,
      host_port: row.host.trim() === "" ? null : host,
      protocol: row.protocol,
    });
  }
  return out;
}

export function portsToRows(ports: PortDto[]): PortRow[] {
  return ports.map((p) => ({
    container: String(p.container_port),
    host: p.host_port === null ? "" : String(p.host_port),
    protocol: p.protocol,
  }));
}

export interface EnvRow {
  name: string;
  value: string;
}

export function envToRows(environment: [string, string][]): EnvRow[] {
  return environment.map(([name, value]) => ({ name, value }));
}

export function rowsToEnv(rows: EnvRow[]): [string, string][] {
  return rows.filter((r) => r.name !== "").map((r) => [r.name, r.value]);
}
