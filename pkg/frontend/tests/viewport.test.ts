import { describe, expect, it } from "vitest";

import { isLegalScriptLine } from "../src/commands.js";
import type { TreeNode } from "../src/types.js";
import {
  clickToPickCommand,
  collectDots,
  fitView,
  screenToWorld,
  worldToScreen,
} from "../src/viewport.js";

function node(
  path: string,
  kind: string,
  origin: [number, number, number],
  children: TreeNode[] = [],
  mapped: number[] = [],
): TreeNode {
  return { path, kind, world_origin: origin, mapped_effects: mapped, children };
}

const TREE = node("/root", "group", [0, 0, 0], [
  node("/root/tr", "transform", [0, 0, 0], [node("/root/tr/g", "geo", [0.5, 0.5, 0], [], [0])]),
  node("/root/far", "transform", [5, 0, 0]),
  node("/root/cam", "camera", [0, 0, 2]),
]);

describe("collectDots", () => {
  it("draws geometry and transforms, skips groups and cameras", () => {
    const dots = collectDots(TREE);
    expect(dots.map((d) => d.path)).toEqual(["/root/tr", "/root/tr/g", "/root/far"]);
    expect(dots[1]).toMatchObject({ x: 0.5, y: 0.5, mapped: true });
    expect(dots[0]?.mapped).toBe(false);
  });
});

describe("fitView", () => {
  it("keeps every dot inside the padded screen box", () => {
    const dots = collectDots(TREE);
    const view = fitView(dots, 360, 280, 20);
    for (const dot of dots) {
      const [sx, sy] = worldToScreen(view, dot.x, dot.y);
      expect(sx).toBeGreaterThanOrEqual(20 - 1e-9);
      expect(sx).toBeLessThanOrEqual(340 + 1e-9);
      expect(sy).toBeGreaterThanOrEqual(20 - 1e-9);
      expect(sy).toBeLessThanOrEqual(260 + 1e-9);
    }
  });

  it("maps world +y upward on screen", () => {
    const view = fitView(
      [
        { path: "/a", kind: "geo", x: 0, y: 0, mapped: false },
        { path: "/b", kind: "geo", x: 0, y: 1, mapped: false },
      ],
      100,
      100,
    );
    const [, lowY] = worldToScreen(view, 0, 0);
    const [, highY] = worldToScreen(view, 0, 1);
    expect(highY).toBeLessThan(lowY);
  });

  it("survives a single dot and an empty scene", () => {
    const one = fitView([{ path: "/a", kind: "geo", x: 3, y: 4, mapped: false }], 100, 100);
    const [sx, sy] = worldToScreen(one, 3, 4);
    expect(sx).toBeCloseTo(50, 6);
    expect(sy).toBeCloseTo(50, 6);
    expect(fitView([], 100, 100).scale).toBe(1);
  });
});

describe("screenToWorld", () => {
  it("inverts worldToScreen", () => {
    const view = fitView(collectDots(TREE), 360, 280);
    const [sx, sy] = worldToScreen(view, 1.25, -0.75);
    const [wx, wy] = screenToWorld(view, sx, sy);
    expect(wx).toBeCloseTo(1.25, 9);
    expect(wy).toBeCloseTo(-0.75, 9);
  });
});

describe("clickToPickCommand", () => {
  it("emits a legal pick line aimed straight down", () => {
    const view = fitView(collectDots(TREE), 360, 280);
    const [sx, sy] = worldToScreen(view, 0.5, 0.5);
    const line = clickToPickCommand(view, sx, sy);
    expect(line.startsWith("pick ")).toBe(true);
    expect(isLegalScriptLine(line)).toBe(true);
    const parts = line.split(" ").slice(1).map(Number);
    expect(parts[0]).toBeCloseTo(0.5, 3);
    expect(parts[1]).toBeCloseTo(0.5, 3);
    expect(parts.slice(2)).toEqual([5, 0, 0, -1]);
  });
});
