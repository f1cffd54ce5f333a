/** Preview-panel logic: default trajectories posted to /preview and the
 * geometry of the three visualizations (gain curve, swatch strip, force
 * bar).  All pure: the DOM layer only stamps the results into SVG. */

import type { EffectEvent, EffectSpec } from "./types.js";

export type TrajectoryStep =
  | [number, number, number]
  | { origin: [number, number, number]; direction: [number, number, number] };

/** Audio gets a straight-line approach from far field to the reference
 * distance; field effects get one ray dropped onto the target from above. */
export function defaultTrajectory(
  effect: EffectSpec,
  targetOrigin: [number, number, number],
  steps = 10,
): TrajectoryStep[] {
  const [ox, oy, oz] = targetOrigin;
  if (effect.type === "audio") {
    const ref = effect.ref_distance ?? 1.0;
    const out: TrajectoryStep[] = [];
    for (let i = 0; i < steps; i++) {
      // distance 10·ref down to exactly ref, linearly
      const d = 10 * ref - (9 * ref * i) / (steps - 1);
      out.push([ox + d, oy, oz]);
    }
    return out;
  }
  return [{ origin: [ox, oy, oz + 5], direction: [0, 0, -1] }];
}

export interface ChartGeometry {
  /** "x1,y1 x2,y2 ..." for an SVG polyline, y-down screen coordinates. */
  points: string;
  yMax: number;
}

export function gainChart(
  events: EffectEvent[],
  width: number,
  height: number,
  pad = 8,
): ChartGeometry {
  const params = events.map((e) => e.param);
  const yMax = Math.max(1, ...params);
  if (params.length === 0) {
    return { points: "", yMax };
  }
  const innerW = width - 2 * pad;
  const innerH = height - 2 * pad;
  const step = params.length > 1 ? innerW / (params.length - 1) : 0;
  const points = params
    .map((p, i) => {
      const x = pad + i * step;
      const y = pad + innerH * (1 - p / yMax);
      return `${round2(x)},${round2(y)}`;
    })
    .join(" ");
  return { points, yMax };
}

function round2(n: number): number {
  return Math.round(n * 100) / 100;
}

export function cssColor(rgb: [number, number, number]): string {
  const channel = (v: number) => Math.round(Math.min(1, Math.max(0, v)) * 255);
  return `rgb(${channel(rgb[0])}, ${channel(rgb[1])}, ${channel(rgb[2])})`;
}

/** Swatches for a visual preview: one colored cell per event carrying a
 * color, in event order. */
export function swatchStrip(events: EffectEvent[]): string[] {
  return events
    .filter((e): e is EffectEvent & { color: [number, number, number] } => e.color != null)
    .map((e) => cssColor(e.color));
}

/** Force-bar fill fractions for a haptic preview: params are already in
 * the commanded force range, shown against the full [0, 1] scale. */
export function forceBars(events: EffectEvent[]): number[] {
  return events.map((e) => Math.min(1, Math.max(0, e.param)));
}
