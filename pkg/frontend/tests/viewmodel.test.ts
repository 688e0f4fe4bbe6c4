import { describe, expect, it } from "vitest";

import { ANCHOR_ORDER, buildCanvas, serviceAnchors } from "../src/viewmodel.js";
import { loadFig7, loadMeta } from "./fake_backend.js";

describe("canvas view model", () => {
  const meta = loadMeta();
  const project = loadFig7();

  it("renders all six artifacts of the two-service example with correct classes", () => {
    const view = buildCanvas(project.stack, project.diagram, project.warnings, meta);
    expect(view.nodes).toHaveLength(6);
    const classes = view.nodes.map((n) => n.klass).sort();
    expect(classes).toEqual(
      ["config", "network", "secret", "service", "service", "volume"]);
    const keys = new Set(view.nodes.map((n) => n.key));
    expect(keys).toEqual(new Set(
      ["nodejs", "mongodb", "internal", "mongo-data", "app-hostname", "ssh-key"]));
  });

  it("nodes take their position from the diagram and color from the class palette", () => {
    const view = buildCanvas(project.stack, project.diagram, project.warnings, meta);
    for (const node of view.nodes) {
      const expected = project.diagram.positions[node.id]!;
      expect([node.x, node.y]).toEqual(expected);
      expect(node.color).toBe(meta.class_colors[node.klass]);
    }
  });

  it("only services carry anchors, one per edge kind in fixed order", () => {
    const view = buildCanvas(project.stack, project.diagram, project.warnings, meta);
    for (const node of view.nodes) {
      if (node.klass === "service") {
        expect(node.anchors.map((a) => a.kind)).toEqual(ANCHOR_ORDER);
      } else {
        expect(node.anchors).toHaveLength(0);
      }
    }
  });

  it("anchor colors follow the palette rules: depends_on yellow, link blue, rest by target class", () => {
    const anchors = serviceAnchors(meta, 180, 120);
    const colorOf = Object.fromEntries(anchors.map((a) => [a.kind, a.color]));
    expect(colorOf["depends_on"]).toBe("#f1c40f");
    expect(colorOf["link"]).toBe("#2196f3");
    expect(colorOf["network_attachment"]).toBe(meta.class_colors["network"]);
    expect(colorOf["volume_mount"]).toBe(meta.class_colors["volume"]);
    expect(colorOf["config_grant"]).toBe(meta.class_colors["config"]);
    expect(colorOf["secret_grant"]).toBe(meta.class_colors["secret"]);
  });

  it("edges take the anchor color of their kind", () => {
    const view = buildCanvas(project.stack, project.diagram, project.warnings, meta);
    expect(view.edges.length).toBe(project.stack.edges.length);
    for (const edge of view.edges) {
      expect(edge.color).toBe(meta.anchor_colors[edge.kind]);
    }
  });

  it("warning badge appears exactly on artifacts with warnings", () => {
    const first = project.stack.artifacts[0]!;
    const warnings = [{ code: "DuplicateKey", artifact: first.id,
                        property: null, message: "dup" }];
    const view = buildCanvas(project.stack, project.diagram, warnings, meta);
    for (const node of view.nodes) {
      expect(node.warningBadge).toBe(node.id === first.id);
    }
    const badged = view.nodes.find((n) => n.id === first.id)!;
    expect(badged.warnings.map((w) => w.message)).toEqual(["dup"]);
  });

  it("is a pure function: same inputs, same output", () => {
    const a = buildCanvas(project.stack, project.diagram, project.warnings, meta);
    const b = buildCanvas(project.stack, project.diagram, project.warnings, meta);
    expect(JSON.stringify(a)).toBe(JSON.stringify(b));
  });
});
