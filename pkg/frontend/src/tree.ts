/** Scene-tree view model.  Rows derive purely from the last GET /scene/tree
 * body plus a set of collapsed paths; nothing here mutates mapping state. */

import type { TreeNode } from "./types.js";

export interface TreeRow {
  path: string;
  label: string;
  kind: string;
  depth: number;
  mappedEffects: number[];
  hasChildren: boolean;
  collapsed: boolean;
}

export function flattenTree(root: TreeNode, collapsed: ReadonlySet<string>): TreeRow[] {
  const rows: TreeRow[] = [];
  const walk = (node: TreeNode, depth: number) => {
    const isCollapsed = collapsed.has(node.path);
    rows.push({
      path: node.path,
      label: node.path.slice(node.path.lastIndexOf("/") + 1),
      kind: node.kind,
      depth,
      mappedEffects: node.mapped_effects,
      hasChildren: node.children.length > 0,
      collapsed: isCollapsed,
    });
    if (!isCollapsed) {
      for (const child of node.children) {
        walk(child, depth + 1);
      }
    }
  };
  walk(root, 0);
  return rows;
}

export function toggleCollapsed(collapsed: ReadonlySet<string>, path: string): Set<string> {
  const next = new Set(collapsed);
  if (next.has(path)) {
    next.delete(path);
  } else {
    next.add(path);
  }
  return next;
}

export function countRows(root: TreeNode): number {
  return 1 + root.children.reduce((sum, child) => sum + countRows(child), 0);
}

/** Paths of every node that can carry the given effect type, for the
 * target dropdown: audio goes on transforms or geometry, fields only on
 * geometry. */
export function assignableTargets(root: TreeNode, effectType: string): string[] {
  const geoKinds = new Set(["geo", "effect_geo"]);
  const audioKinds = new Set(["geo", "effect_geo", "transform"]);
  const wanted = effectType === "audio" ? audioKinds : geoKinds;
  const out: string[] = [];
  const walk = (node: TreeNode) => {
    if (wanted.has(node.kind)) {
      out.push(node.path);
    }
    node.children.forEach(walk);
  };
  walk(root);
  return out;
}
