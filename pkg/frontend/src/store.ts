/**
 * Session store: the single client-side copy of (stack, diagram, warnings,
 * revision), kept in lockstep with the server. Every mutation goes through
 * the ops endpoint with the current revision; a 409 triggers a silent
 * refetch-and-reapply (once), never a divergent local state.
 */

import { ApiError, type ApiClient } from "./api.js";
import { IndicatorState } from "./lifecycle.js";
import { TerminalState } from "./terminal.js";
import type {
  DiagramDto,
  MetaDto,
  Op,
  ProjectDto,
  ServerEvent,
  StackDto,
  StatusDto,
  WarningDto,
} from "./types.js";

export type StoreEvent =
  | { kind: "state" }
  | { kind: "toast"; level: "error" | "info"; message: string }
  | { kind: "connection"; lost: boolean };

export class SessionStore {
  projectId = "";
  revision = 0;
  stack: StackDto = { name: "", artifacts: [], edges: [], extras: {} };
  diagram: DiagramDto = { positions: {}, node_sizes: {}, canvas: [0, 0] };
  warnings: WarningDto[] = [];
  meta!: MetaDto;
  indicator!: IndicatorState;
  terminal = new TerminalState();
  connectionLost = false;
  selected: string | null = null;

  private listeners: ((event: StoreEvent) => void)[] = [];
  private unsubscribe: (() => void) | null = null;

  constructor(private api: ApiClient) {}

  onChange(listener: (event: StoreEvent) => void): void {
    this.listeners.push(listener);
  }

  private emit(event: StoreEvent): void {
    for (const listener of this.listeners) listener(event);
  }

  private setProject(project: ProjectDto): void {
    this.projectId = project.project_id;
    this.revision = project.revision;
    this.stack = project.stack;
    this.diagram = project.diagram;
    this.warnings = project.warnings;
    this.terminal.ensureTabs(
      this.stack.artifacts.filter((a) => a.class === "service").map((a) => a.key));
    this.emit({ kind: "state" });
  }

  async boot(yaml?: string): Promise<void> {
    this.meta = await this.api.meta();
    this.indicator = new IndicatorState(this.meta);
    const project = await this.api.createProject(yaml);
    this.setProject(project);
    this.listen();
  }

  private listen(): void {
    this.unsubscribe?.();
    this.unsubscribe = this.api.events(
      this.projectId,
      (event) => this.receive(event),
      () => {
        if (!this.connectionLost) {
          this.connectionLost = true;
          this.emit({ kind: "connection", lost: true });
        }
      },
    );
  }

  /** Connection-lost banner retry hook. */
  async retryConnection(): Promise<void> {
    const project = await this.api.getProject(this.projectId);
    this.connectionLost = false;
    this.setProject(project);
    this.listen();
    this.emit({ kind: "connection", lost: false });
  }

  receive(event: ServerEvent): void {
    if (event.type === "log") {
      this.terminal.append(event);
    } else if (event.type === "status") {
      this.indicator.apply(event);
    } else if (event.type === "warnings") {
      this.warnings = event.warnings;
    }
    this.emit({ kind: "state" });
  }

  /**
   * Apply one mutation through the ops endpoint. On a revision conflict the
   * store refetches and retries the op once against the fresh revision.
   */
  async apply(op: Op): Promise<boolean> {
    for (let attempt = 0; attempt < 2; attempt += 1) {
      try {
        const result = await this.api.applyOp(this.projectId, this.revision, op);
        this.revision = result.revision;
        this.warnings = result.warnings;
        const project = await this.api.getProject(this.projectId);
        this.setProject(project);
        return true;
      } catch (error) {
        if (error instanceof ApiError && error.status === 409 && attempt === 0) {
          const project = await this.api.getProject(this.projectId);
          this.setProject(project);
          continue;
        }
        if (error instanceof ApiError) {
          this.emit({ kind: "toast", level: "error",
                      message: `${error.code}: ${error.message}` });
          return false;
        }
        this.connectionLost = true;
        this.emit({ kind: "connection", lost: true });
        return false;
      }
    }
    return false;
  }

  async start(workdir?: string): Promise<void> {
    try {
      const status = await this.api.up(this.projectId, workdir);
      this.indicator.apply(status);
      this.emit({ kind: "state" });
    } catch (error) {
      if (error instanceof ApiError) {
        // lifecycle errors surface in the General tab, matching the engine
        this.terminal.append({ type: "log", timestamp: 0, source: "general",
                               service: null, seq: -1,
                               line: `error: ${error.code}: ${error.message}` });
        this.emit({ kind: "state" });
      } else {
        throw error;
      }
    }
  }

  async stop(): Promise<void> {
    await this.lifecycle(() => this.api.stop(this.projectId));
  }

  async down(): Promise<void> {
    await this.lifecycle(() => this.api.down(this.projectId));
  }

  private async lifecycle(call: () => Promise<StatusDto>): Promise<void> {
    try {
      const status = await call();
      this.indicator.apply(status);
    } catch (error) {
      if (!(error instanceof ApiError)) throw error;
      this.terminal.append({ type: "log", timestamp: 0, source: "general",
                             service: null, seq: -1,
                             line: `error: ${error.code}: ${error.message}` });
    }
    this.emit({ kind: "state" });
  }
}
