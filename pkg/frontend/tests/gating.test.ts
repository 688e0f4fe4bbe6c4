import { describe, expect, it } from "vitest";

import { compatibleTargets, dropAllowed } from "../src/gating.js";
import { loadFig7, loadMeta } from "./fake_backend.js";

const meta = loadMeta();

function ids() {
  const project = loadFig7();
  const byKey = Object.fromEntries(
    project.stack.artifacts.map((a) => [a.key, a.id]));
  return { project, byKey };
}

describe("drag-connect type gating", () => {
  it("volume anchor refuses a service target", () => {
    const { project, byKey } = ids();
    expect(dropAllowed(meta, project.stack, byKey["nodejs"]!,
                       "volume_mount", byKey["mongodb"]!)).toBe(false);
  });

  it("volume anchor accepts a volume target", () => {
    const { project, byKey } = ids();
    expect(dropAllowed(meta, project.stack, byKey["nodejs"]!,
                       "volume_mount", byKey["mongo-data"]!)).toBe(true);
  });

  it("depends_on onto self is refused", () => {
    const { project, byKey } = ids();
    expect(dropAllowed(meta, project.stack, byKey["nodejs"]!,
                       "depends_on", byKey["nodejs"]!)).toBe(false);
  });

  it("duplicate edges are refused", () => {
    const { project, byKey } = ids();
    // mongodb already mounts mongo-data in the fixture
    expect(dropAllowed(meta, project.stack, byKey["mongodb"]!,
                       "volume_mount", byKey["mongo-data"]!)).toBe(false);
  });

  it("non-service sources never connect", () => {
    const { project, byKey } = ids();
    expect(dropAllowed(meta, project.stack, byKey["mongo-data"]!,
                       "depends_on", byKey["nodejs"]!)).toBe(false);
  });

  it("highlight set contains exactly the compatible targets", () => {
    const { project, byKey } = ids();
    const targets = compatibleTargets(meta, project.stack, byKey["nodejs"]!,
                                      "network_attachment");
    // the only network is already attached; nothing should highlight
    expect(targets.size).toBe(0);
    const dependsTargets = compatibleTargets(meta, project.stack,
                                             byKey["nodejs"]!, "depends_on");
    expect(dependsTargets).toEqual(new Set([byKey["mongodb"]]));
  });
});
