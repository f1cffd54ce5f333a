/** Mapping from relayed wire messages to feedback-table rows. */

import type { FeedbackItem } from "./types.js";

export interface FeedbackRow {
  tick: string;
  consumer: string;
  type: string;
  path: string;
  param: string;
}

const EFFECT_TYPE_NAMES: Record<number, string> = { 0: "audio", 1: "visual", 2: "haptic" };
const TRIGGER_NAMES: Record<number, string> = { 0: "continuous", 1: "on_touch", 2: "frame" };

function fmtParam(value: unknown): string {
  if (typeof value !== "number") {
    return "";
  }
  return Math.abs(value) >= 1000 ? value.toFixed(1) : value.toPrecision(4);
}

export function toRow(item: FeedbackItem): FeedbackRow {
  const m = item.message;
  const tick = typeof m.tick === "number" ? String(m.tick) : "";
  switch (m.type) {
    case "EffectFired": {
      const effect = EFFECT_TYPE_NAMES[m.effect_type as number] ?? `type ${m.effect_type}`;
      const trigger = TRIGGER_NAMES[m.trigger as number] ?? `trigger ${m.trigger}`;
      return {
        tick,
        consumer: item.consumer,
        type: `${effect}/${trigger}`,
        path: typeof m.path === "string" ? m.path : "",
        param: fmtParam(m.param),
      };
    }
    case "Ack":
      return {
        tick,
        consumer: item.consumer,
        type: m.status === 0 ? "ack" : "ack (refused)",
        path: "",
        param: "",
      };
    case "SceneLoaded":
      return {
        tick: "",
        consumer: item.consumer,
        type: m.status === 0 ? "scene loaded" : "scene load FAILED",
        path: "",
        param: typeof m.node_count === "number" ? `${m.node_count} nodes` : "",
      };
    default:
      return { tick, consumer: item.consumer, type: m.type, path: "", param: "" };
  }
}
