/**
 * Terminal view state: a General tab with the combined output plus one tab
 * per service. Lines append in arrival order; tabs retain their backlog
 * after the run stops.
 */

import type { ServerEvent } from "./types.js";

export const GENERAL_TAB = "general";

export class TerminalState {
  private lines = new Map<string, string[]>([[GENERAL_TAB, []]]);
  private order: string[] = [GENERAL_TAB];

  ensureTabs(serviceKeys: string[]): void {
    for (const key of serviceKeys) {
      if (!this.lines.has(key)) {
        this.lines.set(key, []);
        this.order.push(key);
      }
    }
  }

  append(event: Extract<ServerEvent, { type: "log" }>): void {
    this.general.push(event.line);
    if (event.service !== null) {
      this.ensureTabs([event.service]);
      this.lines.get(event.service)!.push(event.line);
    }
  }

  get general(): string[] {
    return this.lines.get(GENERAL_TAB)!;
  }

  tab(name: string): string[] {
    return this.lines.get(name) ?? [];
  }

  get tabs(): string[] {
    return [...this.order];
  }

  clear(): void {
    this.lines = new Map([[GENERAL_TAB, []]]);
    this.order = [GENERAL_TAB];
  }
}
