/** Schematic top-down viewport: world x/y from the tree's node origins,
 * drawn to a fixed-size SVG; clicking aims a straight-down pick ray at the
 * clicked world position. */

import { pickLine } from "./commands.js";
import type { TreeNode } from "./types.js";

export interface ViewportDot {
  path: string;
  kind: string;
  x: number;
  y: number;
  mapped: boolean;
}

export interface ViewTransform {
  scale: number;
  offsetX: number;
  offsetY: number;
  height: number;
}

const DRAWN_KINDS = new Set(["geo", "effect_geo", "transform"]);

export function collectDots(root: TreeNode): ViewportDot[] {
  const dots: ViewportDot[] = [];
  const walk = (node: TreeNode) => {
    if (DRAWN_KINDS.has(node.kind)) {
      dots.push({
        path: node.path,
        kind: node.kind,
        x: node.world_origin[0],
        y: node.world_origin[1],
        mapped: node.mapped_effects.length > 0,
      });
    }
    node.children.forEach(walk);
  };
  walk(root);
  return dots;
}

/** Fit the dots' bounding box into a width×height screen area.  World +y
 * maps to screen -y (up on screen). */
export function fitView(
  dots: ViewportDot[],
  width: number,
  height: number,
  pad = 20,
): ViewTransform {
  if (dots.length === 0) {
    return { scale: 1, offsetX: width / 2, offsetY: height / 2, height };
  }
  const xs = dots.map((d) => d.x);
  const ys = dots.map((d) => d.y);
  const minX = Math.min(...xs);
  const maxX = Math.max(...xs);
  const minY = Math.min(...ys);
  const maxY = Math.max(...ys);
  const spanX = Math.max(maxX - minX, 1e-9);
  const spanY = Math.max(maxY - minY, 1e-9);
  const scale = Math.min((width - 2 * pad) / spanX, (height - 2 * pad) / spanY);
  // center the box
  const offsetX = (width - scale * (minX + maxX)) / 2;
  const offsetY = (height + scale * (minY + maxY)) / 2;
  return { scale, offsetX, offsetY, height };
}

export function worldToScreen(view: ViewTransform, x: number, y: number): [number, number] {
  return [view.offsetX + view.scale * x, view.offsetY - view.scale * y];
}

export function screenToWorld(view: ViewTransform, px: number, py: number): [number, number] {
  return [(px - view.offsetX) / view.scale, (view.offsetY - py) / view.scale];
}

/** The command a click emits: a ray dropped straight down onto the clicked
 * world position from a fixed height above the scene. */
export function clickToPickCommand(
  view: ViewTransform,
  px: number,
  py: number,
  rayHeight = 5,
): string {
  const [wx, wy] = screenToWorld(view, px, py);
  const r = (n: number) => Math.round(n * 10000) / 10000;
  return pickLine([r(wx), r(wy), rayHeight], [0, 0, -1]);
}
