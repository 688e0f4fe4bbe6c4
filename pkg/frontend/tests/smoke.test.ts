/**
 * UI smoke acceptance: against a fake backend, the two-service example
 * project renders six nodes with correct classes and anchor colors, the
 * drag-connect gate refuses a volume-anchor drop on a service, and the
 * lifecycle indicator follows a scripted status sequence.
 */

import { describe, expect, it } from "vitest";

import { dropAllowed } from "../src/gating.js";
import { SessionStore } from "../src/store.js";
import { buildCanvas } from "../src/viewmodel.js";
import { FakeBackend } from "./fake_backend.js";

describe("UI smoke", () => {
  it("renders the example project: 6 nodes, classes, anchor colors", async () => {
    const backend = new FakeBackend();
    const store = new SessionStore(backend);
    await store.boot();

    const view = buildCanvas(store.stack, store.diagram, store.warnings, store.meta);
    expect(view.nodes).toHaveLength(6);
    const byClass = new Map<string, number>();
    for (const node of view.nodes) {
      byClass.set(node.klass, (byClass.get(node.klass) ?? 0) + 1);
    }
    expect(Object.fromEntries(byClass)).toEqual({
      service: 2, volume: 1, network: 1, config: 1, secret: 1,
    });

    const service = view.nodes.find((n) => n.klass === "service")!;
    const anchorColor = Object.fromEntries(
      service.anchors.map((a) => [a.kind, a.color]));
    expect(anchorColor["depends_on"]).toBe("#f1c40f"); // yellow
    expect(anchorColor["link"]).toBe("#2196f3"); // blue
    expect(anchorColor["network_attachment"]).toBe(store.meta.class_colors.network);
    expect(anchorColor["volume_mount"]).toBe(store.meta.class_colors.volume);
    expect(anchorColor["config_grant"]).toBe(store.meta.class_colors.config);
    expect(anchorColor["secret_grant"]).toBe(store.meta.class_colors.secret);
  });

  it("drag-connect refuses a volume-anchor drop onto a service", async () => {
    const backend = new FakeBackend();
    const store = new SessionStore(backend);
    await store.boot();
    const byKey = Object.fromEntries(
      store.stack.artifacts.map((a) => [a.key, a.id]));

    expect(dropAllowed(store.meta, store.stack, byKey["nodejs"]!,
                       "volume_mount", byKey["mongodb"]!)).toBe(false);
    // and the backend agrees if the client gate were bypassed
    await expect(backend.applyOp("p", store.revision, {
      type: "connect", from: byKey["nodejs"]!, kind: "volume_mount",
      to: byKey["mongodb"]!,
    })).rejects.toMatchObject({ status: 422, code: "TypeMismatch" });
  });

  it("lifecycle indicator follows the scripted status sequence", async () => {
    const backend = new FakeBackend();
    const store = new SessionStore(backend);
    await store.boot();

    expect(store.indicator.aggregate).toBe("stopped");
    expect(store.indicator.color).toBe("grey");

    backend.pushStatus("starting");
    expect(store.indicator.aggregate).toBe("starting");
    expect(store.indicator.color).toBe("amber");

    backend.pushStatus("running", { nodejs: "running", mongodb: "running" });
    expect(store.indicator.aggregate).toBe("running");
    expect(store.indicator.color).toBe("green");

    backend.pushStatus("degraded", { nodejs: "running", mongodb: "exited" });
    expect(store.indicator.aggregate).toBe("degraded");
    expect(store.indicator.color).toBe("red");

    expect(store.indicator.history).toEqual(
      ["stopped", "starting", "running", "degraded"]);
  });
});
