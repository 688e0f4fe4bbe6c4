/**
 * Graph editor panel: SVG rendering of the canvas view plus the two drag
 * interactions (move a node, drag-connect from an anchor). During an anchor
 * drag only type-compatible targets highlight; dropping anywhere else is a
 * no-op.
 */

import { compatibleTargets, dropAllowed } from "../gating.js";
import type { SessionStore } from "../store.js";
import type { EdgeKind } from "../types.js";
import { buildCanvas, type CanvasNodeView } from "../viewmodel.js";
import { clear, svgEl } from "./dom.js";

interface AnchorDrag {
  fromId: string;
  kind: EdgeKind;
  targets: Set<string>;
  line: SVGLineElement;
}

interface NodeDrag {
  id: string;
  offsetX: number;
  offsetY: number;
  moved: boolean;
}

export class CanvasPanel {
  readonly root: SVGSVGElement;
  private anchorDrag: AnchorDrag | null = null;
  private nodeDrag: NodeDrag | null = null;
  private nodeRects = new Map<string, SVGGElement>();

  constructor(private store: SessionStore) {
    this.root = svgEl("svg", { class: "canvas", tabindex: "0" });
    this.root.addEventListener("pointermove", (e) => this.onPointerMove(e));
    this.root.addEventListener("pointerup", (e) => this.onPointerUp(e));
    this.root.addEventListener("pointerdown", (e) => {
      if (e.target === this.root) {
        this.store.selected = null;
        this.render();
      }
    });
  }

  private point(event: PointerEvent): { x: number; y: number } {
    const rect = this.root.getBoundingClientRect();
    return { x: event.clientX - rect.left, y: event.clientY - rect.top };
  }

  render(): void {
    const { store } = this;
    const view = buildCanvas(store.stack, store.diagram, store.warnings, store.meta);
    clear(this.root);
    this.nodeRects.clear();
    this.root.setAttribute("viewBox",
      `0 0 ${Math.max(view.width, 400)} ${Math.max(view.height, 300)}`);

    const centers = new Map(view.nodes.map((n) => [
      n.id, { x: n.x + n.w / 2, y: n.y + n.h / 2 }]));
    for (const edge of view.edges) {
      const from = centers.get(edge.from);
      const to = centers.get(edge.to);
      if (!from || !to) continue;
      const line = svgEl("line", {
        x1: String(from.x), y1: String(from.y),
        x2: String(to.x), y2: String(to.y),
        stroke: edge.color, "stroke-width": "2", class: "edge",
      });
      line.addEventListener("dblclick", () => {
        void this.store.apply({ type: "disconnect", edge_id: edge.id });
      });
      this.root.append(line);
      if (edge.label) {
        const label = svgEl("text", {
          x: String((from.x + to.x) / 2), y: String((from.y + to.y) / 2 - 4),
          class: "edge-label",
        });
        label.textContent = edge.label;
        this.root.append(label);
      }
    }

    for (const node of view.nodes) {
      this.root.append(this.renderNode(node));
    }
  }

  private renderNode(node: CanvasNodeView): SVGGElement {
    const group = svgEl("g", {
      class: `node node-${node.klass}`,
      transform: `translate(${node.x},${node.y})`,
      "data-id": node.id,
    });
    const highlighted = this.anchorDrag?.targets.has(node.id) ?? false;
    const rect = svgEl("rect", {
      width: String(node.w), height: String(node.h), rx: "6",
      fill: "#ffffff", stroke: highlighted ? "#ff9800" : node.color,
      "stroke-width": highlighted ? "4" : this.store.selected === node.id ? "3" : "2",
    });
    group.append(rect);

    const title = svgEl("text", { x: "8", y: "18", class: "node-title" });
    title.textContent = node.key;
    group.append(title);
    const lines = node.label.split("\n").slice(1);
    lines.forEach((text, i) => {
      const extra = svgEl("text", { x: "8", y: String(34 + i * 14), class: "node-sub" });
      extra.textContent = text;
      group.append(extra);
    });

    if (node.warningBadge) {
      const badge = svgEl("g", { class: "warning-badge" });
      const circle = svgEl("circle", { cx: "0", cy: "0", r: "9", fill: "#f1c40f" });
      const mark = svgEl("text", { x: "0", y: "4", "text-anchor": "middle" });
      mark.textContent = "!";
      badge.append(circle, mark);
      badge.setAttribute("transform", `translate(${node.w - 4},4)`);
      const tooltip = svgEl("title", {});
      tooltip.textContent = node.warnings.map((w) => w.message).join("\n");
      badge.append(tooltip);
      group.append(badge);
    }

    for (const anchor of node.anchors) {
      const dot = svgEl("circle", {
        cx: String(anchor.x), cy: String(anchor.y), r: "6",
        fill: anchor.color, class: `anchor anchor-${anchor.kind}`,
      });
      const tip = svgEl("title", {});
      tip.textContent = anchor.kind;
      dot.append(tip);
      dot.addEventListener("pointerdown", (event) => {
        event.stopPropagation();
        this.beginAnchorDrag(node, anchor.kind, event as PointerEvent);
      });
      group.append(dot);
    }

    group.addEventListener("pointerdown", (event) => {
      if (this.anchorDrag) return;
      event.stopPropagation();
      this.store.selected = node.id;
      const point = this.point(event as PointerEvent);
      this.nodeDrag = {
        id: node.id, offsetX: point.x - node.x, offsetY: point.y - node.y,
        moved: false,
      };
      this.render();
    });
    this.nodeRects.set(node.id, group);
    return group;
  }

  private beginAnchorDrag(node: CanvasNodeView, kind: EdgeKind,
                          event: PointerEvent): void {
    const targets = compatibleTargets(this.store.meta, this.store.stack, node.id, kind);
    const start = this.point(event);
    const line = svgEl("line", {
      x1: String(start.x), y1: String(start.y),
      x2: String(start.x), y2: String(start.y),
      stroke: this.store.meta.anchor_colors[kind],
      "stroke-dasharray": "4 3", "stroke-width": "2",
    });
    this.root.append(line);
    this.anchorDrag = { fromId: node.id, kind, targets, line };
    this.render();
    this.root.append(this.anchorDrag.line);
  }

  private onPointerMove(event: PointerEvent): void {
    const point = this.point(event);
    if (this.anchorDrag) {
      this.anchorDrag.line.setAttribute("x2", String(point.x));
      this.anchorDrag.line.setAttribute("y2", String(point.y));
    } else if (this.nodeDrag) {
      this.nodeDrag.moved = true;
      const group = this.nodeRects.get(this.nodeDrag.id);
      group?.setAttribute("transform",
        `translate(${point.x - this.nodeDrag.offsetX},${point.y - this.nodeDrag.offsetY})`);
    }
  }

  private hitNode(event: PointerEvent): string | null {
    let target = event.target as Element | null;
    while (target && target !== this.root) {
      const id = target.getAttribute?.("data-id");
      if (id) return id;
      target = target.parentElement;
    }
    return null;
  }

  private onPointerUp(event: PointerEvent): void {
    if (this.anchorDrag) {
      const drag = this.anchorDrag;
      this.anchorDrag = null;
      drag.line.remove();
      const dropped = this.hitNode(event);
      if (dropped && dropAllowed(this.store.meta, this.store.stack,
                                 drag.fromId, drag.kind, dropped)) {
        const payload: Record<string, unknown> = {};
        if (drag.kind === "volume_mount") {
          const target = window.prompt("Mount target path", "/data");
          if (!target || !target.startsWith("/")) {
            this.render();
            return;
          }
          payload.target = target;
        }
        void this.store.apply({
          type: "connect", from: drag.fromId, kind: drag.kind,
          to: dropped, payload,
        });
      } else {
        this.render(); // no-op drop: just clear highlights
      }
      return;
    }
    if (this.nodeDrag) {
      const drag = this.nodeDrag;
      this.nodeDrag = null;
      if (drag.moved) {
        const point = this.point(event);
        void this.store.apply({
          type: "move_node", id: drag.id,
          x: point.x - drag.offsetX, y: point.y - drag.offsetY,
        });
      }
    }
  }
}
