/** Builders for every producer command the UI can emit, plus a checker that
 * mirrors the producer's script grammar.  The control panel goes through
 * these exclusively, so the emitted surface stays enumerable. */

export type Vec3 = [number, number, number];
export type Quat = [number, number, number, number];

function num(n: number, what: string): string {
  if (!Number.isFinite(n)) {
    throw new Error(`${what} must be a finite number`);
  }
  return String(n);
}

function path(p: string): string {
  if (!p.startsWith("/") || /\s/.test(p)) {
    throw new Error(`node path must be /-rooted without spaces: ${p}`);
  }
  return p;
}

export function viewpointLine(position: Vec3, rotation: Quat): string {
  const parts = [...position, ...rotation].map((v, i) => num(v, `component ${i}`));
  return `viewpoint ${parts.join(" ")}`;
}

export function pickLine(origin: Vec3, direction: Vec3): string {
  const parts = [...origin, ...direction].map((v, i) => num(v, `component ${i}`));
  return `pick ${parts.join(" ")}`;
}

export function modeLine(mode: number): string {
  if (!Number.isInteger(mode) || mode < 0 || mode > 255) {
    throw new Error(`mode must be an integer byte, got ${mode}`);
  }
  return `mode ${mode}`;
}

export function animateLine(target: string, axis: Vec3, radPerTick: number): string {
  const parts = axis.map((v, i) => num(v, `axis ${i}`));
  return `animate ${path(target)} ${parts.join(" ")} ${num(radPerTick, "rad_per_tick")}`;
}

export function gestureLine(kind: "point" | "swipe"): string {
  if (kind !== "point" && kind !== "swipe") {
    throw new Error(`unknown gesture ${kind}`);
  }
  return `gesture ${kind}`;
}

export function tickLine(): string {
  return "tick";
}

export function loadLine(scenePath: string, mappingPath: string): string {
  for (const p of [scenePath, mappingPath]) {
    if (!p || /\s/.test(p)) {
      throw new Error(`load paths must be non-empty and space-free: ${p}`);
    }
  }
  return `load ${scenePath} ${mappingPath}`;
}

const FLOAT = /^-?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?$/;

function floats(args: string[], n: number): boolean {
  return args.length === n && args.every((a) => FLOAT.test(a));
}

/** True when a line is legal under the producer's script grammar.  Blank
 * lines and comments count: the producer skips them without error. */
export function isLegalScriptLine(line: string): boolean {
  const trimmed = line.trim();
  if (trimmed === "" || trimmed.startsWith("#")) {
    return true;
  }
  const [verb, ...args] = trimmed.split(/\s+/);
  switch (verb) {
    case "viewpoint":
      return floats(args, 7);
    case "pick":
      return floats(args, 6);
    case "mode":
      return args.length === 1 && /^\d+$/.test(args[0] ?? "") && Number(args[0]) <= 255;
    case "animate":
      return args.length === 5 && (args[0] ?? "").startsWith("/") && floats(args.slice(1), 4);
    case "gesture":
      return args.length === 1 && (args[0] === "point" || args[0] === "swipe");
    case "tick":
      return args.length === 0;
    case "load":
      return args.length === 2;
    default:
      return false;
  }
}
