/** Wire types for the /v1 API. Field names mirror the server JSON exactly. */

export type ArtifactClass = "service" | "volume" | "network" | "config" | "secret";

export type EdgeKind =
  | "depends_on"
  | "link"
  | "network_attachment"
  | "volume_mount"
  | "config_grant"
  | "secret_grant";

export type AggregateState = "stopped" | "starting" | "running" | "degraded" | "error";

export interface PortDto {
  container_port: number;
  host_port: number | null;
  protocol: "tcp" | "udp";
}

export interface HealthcheckDto {
  test: string[];
  interval: string | null;
  timeout: string | null;
  retries: number;
}

export interface ArtifactDto {
  id: string;
  class: ArtifactClass;
  key: string;
  image?: string | null;
  container_name?: string | null;
  command?: string[] | null;
  entrypoint?: string[] | null;
  environment?: [string, string][];
  ports?: PortDto[];
  hostname?: string | null;
  restart?: string;
  stdin_open?: boolean;
  tty?: boolean;
  healthcheck?: HealthcheckDto | null;
  mem_limit?: string | null;
  driver?: string | null;
  internal?: boolean;
  source?: { kind: "file" | "external"; path: string | null } | null;
  extras: Record<string, unknown>;
}

export interface EdgeDto {
  id: string;
  kind: EdgeKind;
  from: string;
  to: string;
  alias?: string;
  aliases?: string[];
  target?: string;
  read_only?: boolean;
  mode?: number;
}

export interface StackDto {
  name: string;
  artifacts: ArtifactDto[];
  edges: EdgeDto[];
  extras: Record<string, unknown>;
}

export interface DiagramDto {
  positions: Record<string, [number, number]>;
  node_sizes: Record<string, [number, number]>;
  canvas: [number, number];
}

export interface WarningDto {
  code: string;
  artifact: string;
  property: string | null;
  message: string;
}

export interface NoticeDto {
  severity: "info" | "warn";
  location: string;
  message: string;
  code: string;
}

export interface ProjectDto {
  project_id: string;
  revision: number;
  stack: StackDto;
  diagram: DiagramDto;
  warnings: WarningDto[];
  notices: NoticeDto[];
}

export interface MetaDto {
  edge_kinds: Record<EdgeKind, ArtifactClass>;
  class_colors: Record<ArtifactClass, string>;
  anchor_colors: Record<EdgeKind, string>;
  status_colors: Record<AggregateState, string>;
  node_sizes: Record<ArtifactClass, [number, number]>;
}

export interface StatusDto {
  aggregate: AggregateState;
  color: string;
  per_service: Record<string, string>;
  last_transition: number;
}

export interface ImageSummaryDto {
  repository: string;
  description: string;
  is_official: boolean;
  star_count: number;
  pull_count: number;
}

export interface SearchResponseDto {
  stale: boolean;
  results: ImageSummaryDto[];
}

/** One message from GET /projects/{id}/events (SSE `data:` payload). */
export type ServerEvent =
  | ({ type: "log"; timestamp: number; source: string; service: string | null; line: string; seq: number })
  | ({ type: "status"; timestamp: number } & StatusDto)
  | ({ type: "warnings"; timestamp: number; warnings: WarningDto[] });

export type Op =
  | { type: "add_artifact"; class: ArtifactClass; key: string; props?: Record<string, unknown>; x?: number; y?: number }
  | { type: "remove_artifact"; id: string }
  | { type: "set_property"; id: string; path: string; value: unknown }
  | { type: "connect"; from: string; kind: EdgeKind; to: string; payload?: Record<string, unknown> }
  | { type: "disconnect"; edge_id: string }
  | { type: "move_node"; id: string; x: number; y: number }
  | { type: "auto_layout" };

export interface OpResult {
  revision: number;
  warnings: WarningDto[];
  result: Record<string, unknown>;
}
