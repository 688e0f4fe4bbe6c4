/**
 * Client-side connection gating. The edge type table comes from /v1/meta so
 * the rules live in exactly one place (the server); this module only applies
 * them during drag interactions. Connections are typed: while dragging from
 * an anchor, only type-compatible targets highlight, and dropping anywhere
 * else is a no-op.
 */

import type { EdgeKind, MetaDto, StackDto } from "./types.js";

export function dropAllowed(
  meta: MetaDto,
  stack: StackDto,
  fromId: string,
  kind: EdgeKind,
  toId: string,
): boolean {
  const source = stack.artifacts.find((a) => a.id === fromId);
  const target = stack.artifacts.find((a) => a.id === toId);
  if (!source || !target) return false;
  if (source.class !== "service") return false;
  if (target.class !== meta.edge_kinds[kind]) return false;
  if ((kind === "depends_on" || kind === "link") && fromId === toId) return false;
  // one edge per (kind, from, to)
  if (stack.edges.some((e) => e.kind === kind && e.from === fromId && e.to === toId)) {
    return false;
  }
  return true;
}

/** Artifact ids that should highlight while dragging from an anchor. */
export function compatibleTargets(
  meta: MetaDto,
  stack: StackDto,
  fromId: string,
  kind: EdgeKind,
): Set<string> {
  const out = new Set<string>();
  for (const artifact of stack.artifacts) {
    if (dropAllowed(meta, stack, fromId, kind, artifact.id)) {
      out.add(artifact.id);
    }
  }
  return out;
}
