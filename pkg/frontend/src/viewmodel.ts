/**
 * Pure view-model construction: the canvas is a function of
 * (stack, diagram, warnings, meta) and nothing else, so it can never drift
 * from the server state.
 */

import type {
  ArtifactClass,
  DiagramDto,
  EdgeDto,
  EdgeKind,
  MetaDto,
  StackDto,
  WarningDto,
} from "./types.js";

/** Anchor rows on a service node's right edge, in fixed display order. */
export const ANCHOR_ORDER: EdgeKind[] = [
  "depends_on",
  "link",
  "network_attachment",
  "volume_mount",
  "config_grant",
  "secret_grant",
];

export interface AnchorView {
  kind: EdgeKind;
  color: string;
  /** Anchor center, relative to the node's top-left corner. */
  x: number;
  y: number;
}

export interface CanvasNodeView {
  id: string;
  klass: ArtifactClass;
  key: string;
  x: number;
  y: number;
  w: number;
  h: number;
  color: string;
  label: string;
  /** Services expose connection anchors; other classes have none. */
  anchors: AnchorView[];
  warnings: WarningDto[];
  warningBadge: boolean;
}

export interface CanvasEdgeView {
  id: string;
  kind: EdgeKind;
  from: string;
  to: string;
  color: string;
  label: string;
}

export interface CanvasView {
  nodes: CanvasNodeView[];
  edges: CanvasEdgeView[];
  width: number;
  height: number;
}

function edgeLabel(edge: EdgeDto): string {
  switch (edge.kind) {
    case "link":
      return edge.alias ? `link (${edge.alias})` : "link";
    case "volume_mount":
      return edge.read_only ? `${edge.target ?? ""}:ro` : edge.target ?? "";
    case "network_attachment":
      return edge.aliases && edge.aliases.length ? edge.aliases.join(", ") : "";
    case "config_grant":
    case "secret_grant":
      return edge.target ?? "";
    default:
      return "";
  }
}

export function serviceAnchors(meta: MetaDto, nodeW: number, nodeH: number): AnchorView[] {
  const step = nodeH / (ANCHOR_ORDER.length + 1);
  return ANCHOR_ORDER.map((kind, i) => ({
    kind,
    color: meta.anchor_colors[kind],
    x: nodeW,
    y: step * (i + 1),
  }));
}

export function buildCanvas(
  stack: StackDto,
  diagram: DiagramDto,
  warnings: WarningDto[],
  meta: MetaDto,
): CanvasView {
  const byArtifact = new Map<string, WarningDto[]>();
  for (const warning of warnings) {
    const list = byArtifact.get(warning.artifact) ?? [];
    list.push(warning);
    byArtifact.set(warning.artifact, list);
  }

  const nodes: CanvasNodeView[] = [];
  for (const artifact of stack.artifacts) {
    const position = diagram.positions[artifact.id] ?? [0, 0];
    const size = diagram.node_sizes[artifact.id] ?? meta.node_sizes[artifact.class];
    const [x, y] = position;
    const [w, h] = size;
    const own = byArtifact.get(artifact.id) ?? [];
    nodes.push({
      id: artifact.id,
      klass: artifact.class,
      key: artifact.key,
      x, y, w, h,
      color: meta.class_colors[artifact.class],
      label: artifact.class === "service" && artifact.image
        ? `${artifact.key}\n${artifact.image}`
        : artifact.key,
      anchors: artifact.class === "service" ? serviceAnchors(meta, w, h) : [],
      warnings: own,
      warningBadge: own.length > 0,
    });
  }

  const edges: CanvasEdgeView[] = stack.edges.map((edge) => ({
    id: edge.id,
    kind: edge.kind,
    from: edge.from,
    to: edge.to,
    color: meta.anchor_colors[edge.kind],
    label: edgeLabel(edge),
  }));

  const [width, height] = diagram.canvas;
  return { nodes, edges, width, height };
}
