/**
 * Typed client for the /v1 API. The interface exists so tests can run the
 * whole app core against a fake backend; HttpApiClient is the real one.
 */

import type {
  MetaDto,
  Op,
  OpResult,
  ProjectDto,
  SearchResponseDto,
  ServerEvent,
  StatusDto,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
  }
}

export interface ApiClient {
  meta(): Promise<MetaDto>;
  createProject(yaml?: string, name?: string): Promise<ProjectDto>;
  getProject(projectId: string): Promise<ProjectDto>;
  applyOp(projectId: string, baseRevision: number, op: Op): Promise<OpResult>;
  exportYaml(projectId: string): Promise<string>;
  search(query: string, page?: number): Promise<SearchResponseDto>;
  tags(repository: string, page?: number): Promise<string[]>;
  up(projectId: string, workdir?: string): Promise<StatusDto>;
  stop(projectId: string): Promise<StatusDto>;
  down(projectId: string): Promise<StatusDto>;
  status(projectId: string): Promise<StatusDto>;
  /** Subscribe to the project event stream; returns an unsubscribe handle. */
  events(projectId: string, onEvent: (event: ServerEvent) => void,
         onError: () => void): () => void;
}

export class HttpApiClient implements ApiClient {
  constructor(private baseUrl: string = "") {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const response = await fetch(`${this.baseUrl}/v1${path}`, {
      method,
      headers: body === undefined ? {} : { "Content-Type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const text = await response.text();
    if (!response.ok) {
      let code = "HttpError";
      let message = text;
      try {
        const parsed = JSON.parse(text);
        code = parsed.code ?? code;
        message = parsed.message ?? message;
      } catch {
        // non-JSON error body; keep raw text
      }
      throw new ApiError(response.status, code, message);
    }
    return text === "" ? (undefined as T) : (JSON.parse(text) as T);
  }

  meta(): Promise<MetaDto> {
    return this.request("GET", "/meta");
  }

  createProject(yaml?: string, name?: string): Promise<ProjectDto> {
    return this.request("POST", "/projects", { yaml, name });
  }

  getProject(projectId: string): Promise<ProjectDto> {
    return this.request("GET", `/projects/${projectId}`);
  }

  applyOp(projectId: string, baseRevision: number, op: Op): Promise<OpResult> {
    return this.request("POST", `/projects/${projectId}/ops`,
                        { base_revision: baseRevision, op });
  }

  async exportYaml(projectId: string): Promise<string> {
    const response = await fetch(`${this.baseUrl}/v1/projects/${projectId}/export`);
    if (!response.ok) throw new ApiError(response.status, "ExportFailed", await response.text());
    return response.text();
  }

  search(query: string, page = 1): Promise<SearchResponseDto> {
    const params = new URLSearchParams({ q: query, page: String(page) });
    return this.request("GET", `/registry/search?${params}`);
  }

  async tags(repository: string, page = 1): Promise<string[]> {
    const params = new URLSearchParams({ repo: repository, page: String(page) });
    const response = await this.request<{ tags: string[] }>(
      "GET", `/registry/tags?${params}`);
    return response.tags;
  }

  up(projectId: string, workdir?: string): Promise<StatusDto> {
    return this.request<{ status: StatusDto }>(
      "POST", `/projects/${projectId}/up`,
      workdir ? { workdir } : {},
    ).then((r) => r.status);
  }

  stop(projectId: string): Promise<StatusDto> {
    return this.request<{ status: StatusDto }>(
      "POST", `/projects/${projectId}/stop`, {}).then((r) => r.status);
  }

  down(projectId: string): Promise<StatusDto> {
    return this.request<{ status: StatusDto }>(
      "POST", `/projects/${projectId}/down`, {}).then((r) => r.status);
  }

  status(projectId: string): Promise<StatusDto> {
    return this.request("GET", `/projects/${projectId}/status`);
  }

  events(projectId: string, onEvent: (event: ServerEvent) => void,
         onError: () => void): () => void {
    const source = new EventSource(
      `${this.baseUrl}/v1/projects/${projectId}/events`);
    const handler = (message: MessageEvent) => {
      try {
        onEvent(JSON.parse(message.data) as ServerEvent);
      } catch {
        // malformed frame; skip
      }
    };
    for (const type of ["log", "status", "warnings"]) {
      source.addEventListener(type, handler as EventListener);
    }
    source.onerror = () => onError();
    return () => source.close();
  }
}
