/**
 * Toolbar status indicator, driven solely by status events from the server.
 * grey = stopped, amber = starting, green = running, red = degraded/error.
 */

import type { AggregateState, MetaDto, StatusDto } from "./types.js";

export class IndicatorState {
  aggregate: AggregateState = "stopped";
  color: string;
  history: AggregateState[] = ["stopped"];

  constructor(private meta: MetaDto) {
    this.color = meta.status_colors.stopped;
  }

  apply(status: StatusDto): void {
    if (status.aggregate !== this.aggregate) {
      this.history.push(status.aggregate);
    }
    this.aggregate = status.aggregate;
    this.color = this.meta.status_colors[status.aggregate] ?? status.color;
  }

  get canStart(): boolean {
    return this.aggregate === "stopped" || this.aggregate === "error";
  }

  get canStop(): boolean {
    return !this.canStart;
  }
}
