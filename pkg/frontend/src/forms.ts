/** Effect-editor form model: defaults, parsing of the raw inputs, and
 * field-level validation mirroring the mapping entry schema.  The service
 * remains the authority; this catches what a user can fix before a round
 * trip and maps API violations back onto fields. */

import type { EffectSpec, MappingEntry, Violation } from "./types.js";

export type EffectKind = "audio" | "haptic" | "visual";

export interface EntryForm {
  kind: EffectKind;
  target: string;
  // audio
  trigger: "continuous" | "on_touch";
  waveformKind: "sine" | "file";
  freqHz: string;
  amp: string;
  durationS: string;
  filePath: string;
  refDistance: string;
  rolloff: string;
  maxDistance: string;
  // haptic / visual
  fieldName: string;
  unit: string;
  valuesCsv: string;
  valueMin: string;
  valueMax: string;
  forceMin: string;
  forceMax: string;
  colorCold: string; // hex #rrggbb
  colorHot: string;
}

export type FieldErrors = Partial<Record<keyof EntryForm, string>>;

export function defaultForm(kind: EffectKind): EntryForm {
  return {
    kind,
    target: "",
    trigger: "continuous",
    waveformKind: "sine",
    freqHz: "440",
    amp: "1",
    durationS: "0.25",
    filePath: "",
    refDistance: "1",
    rolloff: "1",
    maxDistance: "32",
    fieldName: "temperature",
    unit: "K",
    valuesCsv: "",
    valueMin: "0",
    valueMax: "1",
    forceMin: "0",
    forceMax: "1",
    colorCold: "#0000ff",
    colorHot: "#ff0000",
  };
}

function parseNum(raw: string): number | null {
  const trimmed = raw.trim();
  if (trimmed === "") {
    return null;
  }
  const n = Number(trimmed);
  return Number.isFinite(n) ? n : null;
}

export function parseCsvNumbers(raw: string): number[] | null {
  const parts = raw
    .split(/[,\s]+/)
    .map((p) => p.trim())
    .filter((p) => p !== "");
  if (parts.length === 0) {
    return null;
  }
  const out: number[] = [];
  for (const part of parts) {
    const n = Number(part);
    if (!Number.isFinite(n)) {
      return null;
    }
    out.push(n);
  }
  return out;
}

export function hexToRgb(hex: string): [number, number, number] | null {
  const m = /^#([0-9a-fA-F]{6})$/.exec(hex.trim());
  if (!m) {
    return null;
  }
  const v = parseInt(m[1] ?? "0", 16);
  return [((v >> 16) & 0xff) / 255, ((v >> 8) & 0xff) / 255, (v & 0xff) / 255];
}

export function validateForm(form: EntryForm): FieldErrors {
  const errors: FieldErrors = {};
  if (!form.target.startsWith("/")) {
    errors.target = "pick a target node";
  }
  if (form.kind === "audio") {
    if (form.waveformKind === "sine") {
      if ((parseNum(form.freqHz) ?? -1) < 0) errors.freqHz = "frequency must be ≥ 0";
      if (parseNum(form.amp) === null) errors.amp = "amplitude must be a number";
      if ((parseNum(form.durationS) ?? -1) < 0) errors.durationS = "duration must be ≥ 0";
    } else if (form.filePath.trim() === "") {
      errors.filePath = "name a file under shared storage";
    }
    const ref = parseNum(form.refDistance);
    if (ref === null || ref <= 0) errors.refDistance = "reference distance must be > 0";
    if ((parseNum(form.rolloff) ?? -1) < 0) errors.rolloff = "rolloff must be ≥ 0";
    const maxD = parseNum(form.maxDistance);
    if (maxD === null || (ref !== null && maxD < ref)) {
      errors.maxDistance = "max distance must be ≥ reference distance";
    }
    return errors;
  }
  if (form.fieldName.trim() === "") errors.fieldName = "field name is required";
  if (parseCsvNumbers(form.valuesCsv) === null) {
    errors.valuesCsv = "give one number per triangle, comma separated";
  }
  const vmin = parseNum(form.valueMin);
  const vmax = parseNum(form.valueMax);
  if (vmin === null) errors.valueMin = "must be a number";
  if (vmax === null || (vmin !== null && vmax <= vmin)) {
    errors.valueMax = "must exceed the minimum";
  }
  if (form.kind === "haptic") {
    const fmin = parseNum(form.forceMin);
    const fmax = parseNum(form.forceMax);
    if (fmin === null || fmin < 0 || fmin > 1) errors.forceMin = "force is on [0, 1]";
    if (fmax === null || fmax < 0 || fmax > 1 || (fmin !== null && fmax < fmin)) {
      errors.forceMax = "force is on [0, 1], max ≥ min";
    }
  } else {
    if (hexToRgb(form.colorCold) === null) errors.colorCold = "use #rrggbb";
    if (hexToRgb(form.colorHot) === null) errors.colorHot = "use #rrggbb";
  }
  return errors;
}

/** Build the mapping-entry JSON the service expects.  Call only after
 * validateForm returned no errors. */
export function toEntry(form: EntryForm): MappingEntry {
  if (form.kind === "audio") {
    const waveform =
      form.waveformKind === "sine"
        ? {
            sine: {
              freq_hz: Number(form.freqHz),
              amp: Number(form.amp),
              duration_s: Number(form.durationS),
            },
          }
        : { file: { path: form.filePath.trim() } };
    const effect: EffectSpec = {
      type: "audio",
      trigger: form.trigger,
      waveform,
      ref_distance: Number(form.refDistance),
      rolloff: Number(form.rolloff),
      max_distance: Number(form.maxDistance),
    };
    return { target: form.target, effect };
  }
  const base = {
    field_name: form.fieldName.trim(),
    unit: form.unit.trim(),
    values: parseCsvNumbers(form.valuesCsv) ?? [],
    value_min: Number(form.valueMin),
    value_max: Number(form.valueMax),
  };
  if (form.kind === "haptic") {
    return {
      target: form.target,
      effect: {
        type: "haptic",
        ...base,
        force_min: Number(form.forceMin),
        force_max: Number(form.forceMax),
      },
    };
  }
  return {
    target: form.target,
    effect: {
      type: "visual",
      ...base,
      color_cold: hexToRgb(form.colorCold) ?? [0, 0, 1],
      color_hot: hexToRgb(form.colorHot) ?? [1, 0, 0],
    },
  };
}

/** Map service violations onto form fields where possible; the rest stay
 * banner-level.  The service names schema problems by message text. */
export function violationFields(violations: Violation[]): {
  fields: FieldErrors;
  banner: string[];
} {
  const fields: FieldErrors = {};
  const banner: string[] = [];
  for (const violation of violations) {
    if (violation.code === "missing_target" || violation.code === "kind_mismatch") {
      fields.target = violation.message;
    } else if (violation.code === "field_length") {
      fields.valuesCsv = violation.message;
    } else if (violation.code === "trigger_mismatch") {
      fields.trigger = violation.message;
    } else {
      banner.push(violation.message);
    }
  }
  return { fields, banner };
}
